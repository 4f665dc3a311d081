#include "hypertrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hypertrack {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kNormEps = 1e-10;
}  // namespace

void SshmgParams::validate() const {
    if (z < 2) throw std::runtime_error("sshmg: z must be >= 2");
    if (n_theta < 1 || n_phi < 1) throw std::runtime_error("sshmg: bin counts must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::runtime_error("sshmg: alpha must be in (0, 1]");
}

GradientField gradients(const HyperspectralCube& cube) {
    if (cube.width < 3 || cube.height < 3 || cube.bands < 3)
        throw std::runtime_error("gradients: cube must be at least 3x3x3");

    GradientField g;
    g.width = cube.width;
    g.height = cube.height;
    g.bands = cube.bands;
    const std::size_t n = cube.size();
    g.magnitude.resize(n);
    g.theta.resize(n);
    g.phi.resize(n);

    auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    auto value = [&cube](int x, int y, int k) {
        return static_cast<double>(cube.at(x, y, k));
    };
    for (int k = 0; k < cube.bands; ++k)
        for (int y = 0; y < cube.height; ++y)
            for (int x = 0; x < cube.width; ++x) {
                const double gx = value(clampi(x + 1, cube.width - 1), y, k) -
                                  value(clampi(x - 1, cube.width - 1), y, k);
                const double gy = value(x, clampi(y + 1, cube.height - 1), k) -
                                  value(x, clampi(y - 1, cube.height - 1), k);
                const double gk = value(x, y, clampi(k + 1, cube.bands - 1)) -
                                  value(x, y, clampi(k - 1, cube.bands - 1));
                const double spatial = std::sqrt(gx * gx + gy * gy);
                const std::size_t i = g.index(x, y, k);
                g.magnitude[i] = std::sqrt(spatial * spatial + gk * gk);
                if (spatial == 0.0) {
                    g.theta[i] = 0.0;
                    g.phi[i] = gk == 0.0 ? 0.0 : (gk > 0.0 ? kHalfPi : -kHalfPi);
                } else {
                    double t = std::atan2(gy, gx);
                    if (t < 0.0) t += kTwoPi;
                    if (t >= kTwoPi) t = 0.0;
                    g.theta[i] = t;
                    g.phi[i] = std::atan(gk / spatial);
                }
            }
    return g;
}

OrientationBins quantize_orientations(const GradientField& g, const SshmgParams& p) {
    p.validate();
    OrientationBins b;
    b.width = g.width;
    b.height = g.height;
    b.bands = g.bands;
    const std::size_t n = g.magnitude.size();
    b.b_theta.resize(n);
    b.b_phi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // phi is shifted to [0, pi] so the mod acts on a nonnegative value.
        const long bt = std::lround(p.n_theta * g.theta[i] / kTwoPi) % p.n_theta;
        const long bp =
            std::lround(p.n_phi * (g.phi[i] + kHalfPi) / std::numbers::pi) % p.n_phi;
        b.b_theta[i] = static_cast<int>(bt);
        b.b_phi[i] = static_cast<int>(bp);
    }
    return b;
}

PointFeatureField point_features(const GradientField& g, const OrientationBins& bins,
                                 const SshmgParams& p) {
    p.validate();
    PointFeatureField f;
    f.width = g.width;
    f.height = g.height;
    f.bands = g.bands;
    f.n_theta = p.n_theta;
    f.n_phi = p.n_phi;
    const std::size_t n = g.magnitude.size();
    f.f_theta.assign(n * p.n_theta, 0.0);
    f.f_phi.assign(n * p.n_phi, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        f.f_theta[i * p.n_theta + bins.b_theta[i]] = g.magnitude[i];
        f.f_phi[i * p.n_phi + bins.b_phi[i]] = g.magnitude[i];
    }
    return f;
}

CubeFeatures aggregate_cubes(const PointFeatureField& f, const SshmgParams& p) {
    p.validate();
    CubeFeatures c;
    c.cells_x = sshmg_cells(f.width, p.z);
    c.cells_y = sshmg_cells(f.height, p.z);
    c.slabs = sshmg_cells(f.bands, p.z);
    c.n_theta = f.n_theta;
    c.n_phi = f.n_phi;
    const std::size_t cells = static_cast<std::size_t>(c.cells_x) * c.cells_y * c.slabs;
    c.c_theta.assign(cells * c.n_theta, 0.0);
    c.c_phi.assign(cells * c.n_phi, 0.0);

    for (int k = 0; k < f.bands; ++k) {
        const int s = k / p.z;
        for (int y = 0; y < f.height; ++y) {
            const int j = y / p.z;
            for (int x = 0; x < f.width; ++x) {
                const int i = x / p.z;
                const std::size_t point =
                    (static_cast<std::size_t>(k) * f.height + y) * f.width + x;
                const std::size_t cell = c.cell_index(i, j, s);
                for (int b = 0; b < c.n_theta; ++b)
                    c.c_theta[cell * c.n_theta + b] += f.f_theta[point * c.n_theta + b];
                for (int b = 0; b < c.n_phi; ++b)
                    c.c_phi[cell * c.n_phi + b] += f.f_phi[point * c.n_phi + b];
            }
        }
    }
    return c;
}

FeatureMap block_features(const CubeFeatures& c, const SshmgParams& p) {
    p.validate();
    if (c.cells_x < 2 || c.cells_y < 2)
        throw std::runtime_error("block_features: cell grid smaller than 2x2");

    const int pair = c.n_theta + c.n_phi;
    const int block_len = 4 * pair;
    FeatureMap out;
    out.resize(c.cells_x, c.cells_y, block_len * c.slabs);

    std::vector<double> v(block_len);
    for (int s = 0; s < c.slabs; ++s)
        for (int j = 0; j < c.cells_y; ++j)
            for (int i = 0; i < c.cells_x; ++i) {
                // last row/column blocks replicate their neighbor
                const int i2 = std::min(i + 1, c.cells_x - 1);
                const int j2 = std::min(j + 1, c.cells_y - 1);
                const std::array<std::size_t, 4> cells = {
                    c.cell_index(i, j, s), c.cell_index(i2, j, s),
                    c.cell_index(i, j2, s), c.cell_index(i2, j2, s)};
                int o = 0;
                for (const std::size_t cell : cells) {
                    for (int b = 0; b < c.n_theta; ++b) v[o++] = c.c_theta[cell * c.n_theta + b];
                    for (int b = 0; b < c.n_phi; ++b) v[o++] = c.c_phi[cell * c.n_phi + b];
                }

                double norm = 0.0;
                for (double e : v) norm += e * e;
                norm = std::sqrt(norm);
                if (norm < kNormEps) {
                    std::fill(v.begin(), v.end(), 0.0);
                } else {
                    for (double& e : v) e /= norm;
                    double clipped = 0.0;
                    for (double& e : v) {
                        e = std::min(e, p.alpha);
                        clipped += e * e;
                    }
                    clipped = std::sqrt(clipped);
                    if (clipped < kNormEps)
                        std::fill(v.begin(), v.end(), 0.0);
                    else
                        for (double& e : v) e /= clipped;
                }

                for (int b = 0; b < block_len; ++b) out.at(i, j, s * block_len + b) = v[b];
            }
    return out;
}

FeatureMap sshmg(const HyperspectralCube& cube, const SshmgParams& p) {
    const GradientField g = gradients(cube);
    const OrientationBins bins = quantize_orientations(g, p);
    const PointFeatureField f = point_features(g, bins, p);
    const CubeFeatures c = aggregate_cubes(f, p);
    return block_features(c, p);
}

}  // namespace hypertrack
