#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "hypertrack/core.hpp"
#include "hypertrack/features.hpp"

namespace hypertrack {

// Color matching function samples at arbitrary wavelengths (the bundled data
// file), interpolable to a cube's band wavelengths.
struct RawCmfTable {
    std::vector<double> wavelengths_nm;           // strictly increasing
    std::vector<std::array<double, 3>> xyz;       // one row per wavelength
};

// Per-band XYZ weights aligned to a cube's bands.
struct CmfTable {
    std::vector<std::array<double, 3>> rows;  // size == bands
};

struct XyzImage {
    int width = 0, height = 0;
    std::vector<double> data;  // [(y*width + x)*3 + c]
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

struct RgbImage {
    int width = 0, height = 0;
    std::vector<float> data;  // [(y*width + x)*3 + c], values in [0,1]
};

using CorrectionMatrix = Eigen::MatrixXd;  // K x K

// out = clamp(raw - dark, 0, 1)
HyperspectralCube dark_calibrate(const HyperspectralCube& raw, const HyperspectralCube& dark);

// Each pixel spectrum s is replaced by clamp(C*s, 0, 1).
HyperspectralCube spectral_correct(const HyperspectralCube& cube, const CorrectionMatrix& C);

// Text file, one "wavelength x y z" row per line; '#' starts a comment.
RawCmfTable load_cmf_table(const std::filesystem::path& file);

// Linear interpolation of each CMF at each band wavelength. Errors if a
// wavelength falls outside the table range.
CmfTable resample_cmfs(const RawCmfTable& raw, const std::vector<double>& wavelengths_nm);

// Raw weighted sum I = sum_k X(:,k) A(k,:); linear in the cube.
XyzImage xyz_image(const HyperspectralCube& cube, const CmfTable& cmfs);

// xyz_image normalized so a unit flat spectrum maps to Y=1, then the standard
// D65 XYZ->sRGB linear transform and gamma, clamped to [0,1].
RgbImage to_false_color(const HyperspectralCube& cube, const CmfTable& cmfs);

void write_ppm(const RgbImage& image, const std::filesystem::path& file);

// 8-bit grayscale dump of one channel, values clamped to [0,1].
void write_pgm_channel(const FeatureMap& map, int channel, const std::filesystem::path& file);

}  // namespace hypertrack
