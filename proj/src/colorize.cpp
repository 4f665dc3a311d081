#include "hypertrack/colorize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hypertrack {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

double srgb_gamma(double c) {
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}
}  // namespace

HyperspectralCube dark_calibrate(const HyperspectralCube& raw, const HyperspectralCube& dark) {
    if (raw.width != dark.width || raw.height != dark.height || raw.bands != dark.bands)
        fail("dark_calibrate: dimension mismatch");
    HyperspectralCube out = raw;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = clamp01(static_cast<double>(raw.data[i]) - dark.data[i]);
    return out;
}

HyperspectralCube spectral_correct(const HyperspectralCube& cube, const CorrectionMatrix& C) {
    if (C.rows() != cube.bands || C.cols() != cube.bands)
        fail("spectral_correct: matrix shape does not match band count");
    HyperspectralCube out = cube;
    const std::size_t plane = static_cast<std::size_t>(cube.width) * cube.height;
    Eigen::VectorXd s(cube.bands);
    for (std::size_t p = 0; p < plane; ++p) {
        for (int k = 0; k < cube.bands; ++k) s(k) = cube.data[k * plane + p];
        const Eigen::VectorXd t = C * s;
        for (int k = 0; k < cube.bands; ++k) out.data[k * plane + p] = clamp01(t(k));
    }
    return out;
}

RawCmfTable load_cmf_table(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) fail("cannot open CMF table " + file.string());
    RawCmfTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r\n,") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double wl, x, y, z;
        if (!(ls >> wl >> x >> y >> z))
            fail(file.string() + ": parse error at line " + std::to_string(lineno));
        if (!t.wavelengths_nm.empty() && wl <= t.wavelengths_nm.back())
            fail(file.string() + ": wavelengths not strictly increasing at line " +
                 std::to_string(lineno));
        t.wavelengths_nm.push_back(wl);
        t.xyz.push_back({x, y, z});
    }
    if (t.wavelengths_nm.size() < 2) fail(file.string() + ": CMF table needs >= 2 rows");
    return t;
}

CmfTable resample_cmfs(const RawCmfTable& raw, const std::vector<double>& wavelengths_nm) {
    CmfTable out;
    for (double wl : wavelengths_nm) {
        if (wl < raw.wavelengths_nm.front() || wl > raw.wavelengths_nm.back())
            fail("resample_cmfs: wavelength " + std::to_string(wl) +
                 " nm outside the CMF table range");
        const auto hi = std::lower_bound(raw.wavelengths_nm.begin(), raw.wavelengths_nm.end(), wl);
        std::array<double, 3> row{};
        if (*hi == wl) {
            row = raw.xyz[hi - raw.wavelengths_nm.begin()];
        } else {
            const std::size_t i1 = hi - raw.wavelengths_nm.begin();
            const std::size_t i0 = i1 - 1;
            const double t = (wl - raw.wavelengths_nm[i0]) /
                             (raw.wavelengths_nm[i1] - raw.wavelengths_nm[i0]);
            for (int c = 0; c < 3; ++c)
                row[c] = (1.0 - t) * raw.xyz[i0][c] + t * raw.xyz[i1][c];
        }
        out.rows.push_back(row);
    }
    return out;
}

XyzImage xyz_image(const HyperspectralCube& cube, const CmfTable& cmfs) {
    if (cmfs.rows.size() != static_cast<std::size_t>(cube.bands))
        fail("xyz_image: CMF row count does not match band count");
    XyzImage img;
    img.width = cube.width;
    img.height = cube.height;
    img.data.assign(static_cast<std::size_t>(cube.width) * cube.height * 3, 0.0);
    const std::size_t plane = static_cast<std::size_t>(cube.width) * cube.height;
    for (int k = 0; k < cube.bands; ++k) {
        const auto& a = cmfs.rows[k];
        for (std::size_t p = 0; p < plane; ++p) {
            const double v = cube.data[k * plane + p];
            img.data[p * 3 + 0] += v * a[0];
            img.data[p * 3 + 1] += v * a[1];
            img.data[p * 3 + 2] += v * a[2];
        }
    }
    return img;
}

RgbImage to_false_color(const HyperspectralCube& cube, const CmfTable& cmfs) {
    const XyzImage xyz = xyz_image(cube, cmfs);
    double ysum = 0.0;
    for (const auto& row : cmfs.rows) ysum += row[1];
    const double norm = ysum > 0.0 ? 1.0 / ysum : 1.0;

    RgbImage img;
    img.width = xyz.width;
    img.height = xyz.height;
    img.data.resize(xyz.data.size());
    const std::size_t pixels = static_cast<std::size_t>(xyz.width) * xyz.height;
    for (std::size_t p = 0; p < pixels; ++p) {
        const double X = xyz.data[p * 3 + 0] * norm;
        const double Y = xyz.data[p * 3 + 1] * norm;
        const double Z = xyz.data[p * 3 + 2] * norm;
        const double r = 3.2406 * X - 1.5372 * Y - 0.4986 * Z;
        const double g = -0.9689 * X + 1.8758 * Y + 0.0415 * Z;
        const double b = 0.0557 * X - 0.2040 * Y + 1.0570 * Z;
        img.data[p * 3 + 0] = clamp01(srgb_gamma(std::max(r, 0.0)));
        img.data[p * 3 + 1] = clamp01(srgb_gamma(std::max(g, 0.0)));
        img.data[p * 3 + 2] = clamp01(srgb_gamma(std::max(b, 0.0)));
    }
    return img;
}

void write_ppm(const RgbImage& image, const std::filesystem::path& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) fail("cannot write " + file.string());
    os << "P6\n" << image.width << " " << image.height << "\n255\n";
    for (float v : image.data) {
        const unsigned char b =
            static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        os.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!os) fail("short write on " + file.string());
}

void write_pgm_channel(const FeatureMap& map, int channel, const std::filesystem::path& file) {
    if (channel < 0 || channel >= map.channels) fail("write_pgm_channel: channel out of range");
    std::ofstream os(file, std::ios::binary);
    if (!os) fail("cannot write " + file.string());
    os << "P5\n" << map.cells_x << " " << map.cells_y << "\n255\n";
    for (int y = 0; y < map.cells_y; ++y)
        for (int x = 0; x < map.cells_x; ++x) {
            const double v = std::clamp(map.at(x, y, channel), 0.0, 1.0);
            const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
            os.write(reinterpret_cast<const char*>(&b), 1);
        }
    if (!os) fail("short write on " + file.string());
}

}  // namespace hypertrack
