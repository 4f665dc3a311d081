#pragma once

#include <complex>
#include <vector>

namespace hypertrack::fft {

// Unnormalized 2D DFTs on row-major planes (index y*w + x). inverse2d_real
// divides by w*h and drops the imaginary part, so
// inverse2d_real(forward2d(p)) == p.
std::vector<std::complex<double>> forward2d(const std::vector<double>& plane, int w, int h);
std::vector<std::complex<double>> forward2d(const std::vector<std::complex<double>>& plane,
                                            int w, int h);
std::vector<std::complex<double>> inverse2d(const std::vector<std::complex<double>>& spectrum,
                                            int w, int h);
std::vector<double> inverse2d_real(const std::vector<std::complex<double>>& spectrum, int w,
                                   int h);

}  // namespace hypertrack::fft
