#include "hypertrack/fft.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include <fftw3.h>

namespace hypertrack::fft {

namespace {

// Plans are cached per (w, h, sign). FFTW_UNALIGNED lets one plan run on any
// buffer; plan creation is serialized (FFTW's planner is not thread-safe).
fftw_plan get_plan(int w, int h, int sign) {
    static std::map<std::tuple<int, int, int>, fftw_plan> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_tuple(w, h, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    std::vector<std::complex<double>> in(static_cast<std::size_t>(w) * h);
    std::vector<std::complex<double>> out(in.size());
    fftw_plan plan = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fftw plan creation failed");
    cache.emplace(key, plan);
    return plan;
}

std::vector<std::complex<double>> run(const std::vector<std::complex<double>>& in, int w, int h,
                                      int sign) {
    if (in.size() != static_cast<std::size_t>(w) * h)
        throw std::runtime_error("fft: plane size mismatch");
    std::vector<std::complex<double>> out(in.size());
    fftw_execute_dft(get_plan(w, h, sign),
                     reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace

std::vector<std::complex<double>> forward2d(const std::vector<std::complex<double>>& plane,
                                            int w, int h) {
    return run(plane, w, h, FFTW_FORWARD);
}

std::vector<std::complex<double>> forward2d(const std::vector<double>& plane, int w, int h) {
    std::vector<std::complex<double>> c(plane.begin(), plane.end());
    return run(c, w, h, FFTW_FORWARD);
}

std::vector<std::complex<double>> inverse2d(const std::vector<std::complex<double>>& spectrum,
                                            int w, int h) {
    return run(spectrum, w, h, FFTW_BACKWARD);
}

std::vector<double> inverse2d_real(const std::vector<std::complex<double>>& spectrum, int w,
                                   int h) {
    const auto c = run(spectrum, w, h, FFTW_BACKWARD);
    std::vector<double> out(c.size());
    const double scale = 1.0 / (static_cast<double>(w) * h);
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real() * scale;
    return out;
}

}  // namespace hypertrack::fft
