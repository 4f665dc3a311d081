// Independent reference implementations used as test oracles. Everything here
// is written as straight-line nested loops against the data definitions, on
// purpose sharing no code with the library implementation paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "hypertrack/core.hpp"
#include "hypertrack/features.hpp"

namespace oracles {

using hypertrack::HyperspectralCube;
using hypertrack::SshmgParams;

inline HyperspectralCube random_cube(int w, int h, int k, std::uint64_t seed) {
    hypertrack::Rng rng(seed);
    HyperspectralCube cube;
    cube.width = w;
    cube.height = h;
    cube.bands = k;
    for (int i = 0; i < k; ++i) cube.wavelengths_nm.push_back(400.0 + 10.0 * i);
    cube.data.resize(static_cast<std::size_t>(w) * h * k);
    for (auto& v : cube.data) v = static_cast<float>(rng.uniform());
    return cube;
}

// Random values on a 1/1024 grid: scaling by 0.5, 2 or 10 stays exact in
// float32, so scale-invariance checks see the pipeline alone.
inline HyperspectralCube random_cube_quantized(int w, int h, int k, std::uint64_t seed) {
    HyperspectralCube cube = random_cube(w, h, k, seed);
    for (auto& v : cube.data) v = std::round(v * 512.0f) / 1024.0f;
    return cube;
}

// ---- cropping ---------------------------------------------------------------

inline HyperspectralCube crop_reference(const HyperspectralCube& cube,
                                        const hypertrack::BoundingBox& box, double pad) {
    const int out_w = std::max<int>(1, static_cast<int>(std::llround(pad * box.w)));
    const int out_h = std::max<int>(1, static_cast<int>(std::llround(pad * box.h)));
    const long long x0 = std::llround(box.cx - out_w / 2.0);
    const long long y0 = std::llround(box.cy - out_h / 2.0);
    HyperspectralCube out;
    out.width = out_w;
    out.height = out_h;
    out.bands = cube.bands;
    out.wavelengths_nm = cube.wavelengths_nm;
    out.data.resize(static_cast<std::size_t>(out_w) * out_h * cube.bands);
    for (int k = 0; k < cube.bands; ++k)
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x) {
                long long sx = x0 + x, sy = y0 + y;
                sx = std::max(0LL, std::min<long long>(sx, cube.width - 1));
                sy = std::max(0LL, std::min<long long>(sy, cube.height - 1));
                out.at(x, y, k) = cube.at(static_cast<int>(sx), static_cast<int>(sy), k);
            }
    return out;
}

// ---- gradients ---------------------------------------------------------------

struct GradientSample {
    double m, theta, phi;
};

inline GradientSample gradient_reference(const HyperspectralCube& c, int x, int y, int k) {
    auto v = [&](int xx, int yy, int kk) {
        xx = std::clamp(xx, 0, c.width - 1);
        yy = std::clamp(yy, 0, c.height - 1);
        kk = std::clamp(kk, 0, c.bands - 1);
        return static_cast<double>(c.at(xx, yy, kk));
    };
    const double gx = v(x + 1, y, k) - v(x - 1, y, k);
    const double gy = v(x, y + 1, k) - v(x, y - 1, k);
    const double gk = v(x, y, k + 1) - v(x, y, k - 1);
    GradientSample s;
    s.m = std::sqrt(gx * gx + gy * gy + gk * gk);
    const double sp = std::sqrt(gx * gx + gy * gy);
    if (sp == 0.0) {
        s.theta = 0.0;
        s.phi = gk == 0.0 ? 0.0 : (gk > 0 ? std::numbers::pi / 2 : -std::numbers::pi / 2);
    } else {
        s.theta = std::atan2(gy, gx);
        if (s.theta < 0) s.theta += 2.0 * std::numbers::pi;
        if (s.theta >= 2.0 * std::numbers::pi) s.theta = 0.0;
        s.phi = std::atan(gk / sp);
    }
    return s;
}

// ---- full SSHMG reference -------------------------------------------------------

// Straight-line re-derivation: for every output cell, re-walk the raw cube,
// recompute gradients, quantize, histogram, then block-normalize.
inline std::vector<double> sshmg_reference(const HyperspectralCube& cube, const SshmgParams& p,
                                           int& cells_x, int& cells_y, int& channels) {
    const int W = cube.width, H = cube.height, K = cube.bands;
    cells_x = (W - 1) / p.z + 1;
    cells_y = (H - 1) / p.z + 1;
    const int slabs = (K - 1) / p.z + 1;
    const int pair = p.n_theta + p.n_phi;
    channels = 4 * pair * slabs;

    auto cell_hist = [&](int ci, int cj, int cs) {
        std::vector<double> hist(pair, 0.0);
        for (int k = cs * p.z; k < std::min(K, (cs + 1) * p.z); ++k)
            for (int y = cj * p.z; y < std::min(H, (cj + 1) * p.z); ++y)
                for (int x = ci * p.z; x < std::min(W, (ci + 1) * p.z); ++x) {
                    const GradientSample g = gradient_reference(cube, x, y, k);
                    long bt = std::lround(p.n_theta * g.theta / (2.0 * std::numbers::pi)) %
                              p.n_theta;
                    long bp = std::lround(p.n_phi * (g.phi + std::numbers::pi / 2) /
                                          std::numbers::pi) %
                              p.n_phi;
                    hist[bt] += g.m;
                    hist[p.n_theta + bp] += g.m;
                }
        return hist;
    };

    std::vector<double> out(static_cast<std::size_t>(cells_x) * cells_y * channels, 0.0);
    for (int s = 0; s < slabs; ++s)
        for (int j = 0; j < cells_y; ++j)
            for (int i = 0; i < cells_x; ++i) {
                const int i2 = std::min(i + 1, cells_x - 1);
                const int j2 = std::min(j + 1, cells_y - 1);
                std::vector<double> v;
                for (auto [ci, cj] : {std::pair{i, j}, {i2, j}, {i, j2}, {i2, j2}}) {
                    const auto h = cell_hist(ci, cj, s);
                    v.insert(v.end(), h.begin(), h.end());
                }
                double n = 0;
                for (double e : v) n += e * e;
                n = std::sqrt(n);
                if (n < 1e-10) {
                    std::fill(v.begin(), v.end(), 0.0);
                } else {
                    for (double& e : v) e = std::min(e / n, p.alpha);
                    double n2 = 0;
                    for (double e : v) n2 += e * e;
                    n2 = std::sqrt(n2);
                    if (n2 < 1e-10)
                        std::fill(v.begin(), v.end(), 0.0);
                    else
                        for (double& e : v) e /= n2;
                }
                for (int b = 0; b < 4 * pair; ++b) {
                    const int c = s * 4 * pair + b;
                    out[(static_cast<std::size_t>(c) * cells_y + j) * cells_x + i] = v[b];
                }
            }
    return out;
}

// ---- projected-gradient NNLS -----------------------------------------------------

inline Eigen::VectorXd nnls_pg(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               int max_iters = 200000, double tol = 1e-14) {
    const Eigen::MatrixXd AtA = A.transpose() * A;
    const Eigen::VectorXd Atb = A.transpose() * b;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(AtA);
    const double lip = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
    const double step = 1.0 / lip;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd next = (x - step * (AtA * x - Atb)).cwiseMax(0.0);
        const double delta = (next - x).norm();
        x = next;
        if (delta < tol) break;
    }
    return x;
}

// ---- dense ridge solve of the uncropped filter objective --------------------------

// response(t) = sum_k (x_k (*) f_k)(t), circular 2D convolution;
// minimizes (1/2)||y - response||^2 + (lambda/2)||f||^2.
inline std::vector<Eigen::VectorXd> dense_ridge_filters(
    const std::vector<std::vector<double>>& x_channels, const std::vector<double>& y, int W,
    int H, double lambda) {
    const int D = W * H;
    const int K = static_cast<int>(x_channels.size());
    Eigen::MatrixXd M(D, K * D);
    for (int k = 0; k < K; ++k)
        for (int ty = 0; ty < H; ++ty)
            for (int tx = 0; tx < W; ++tx)
                for (int sy = 0; sy < H; ++sy)
                    for (int sx = 0; sx < W; ++sx) {
                        const int dy = ((ty - sy) % H + H) % H;
                        const int dx = ((tx - sx) % W + W) % W;
                        M(ty * W + tx, k * D + sy * W + sx) =
                            x_channels[k][static_cast<std::size_t>(dy) * W + dx];
                    }
    Eigen::VectorXd yv(D);
    for (int i = 0; i < D; ++i) yv(i) = y[i];
    const Eigen::MatrixXd lhs =
        M.transpose() * M + lambda * Eigen::MatrixXd::Identity(K * D, K * D);
    const Eigen::VectorXd f = lhs.ldlt().solve(M.transpose() * yv);
    std::vector<Eigen::VectorXd> out;
    for (int k = 0; k < K; ++k) out.push_back(f.segment(k * D, D));
    return out;
}

// ---- simplex grid search -----------------------------------------------------------

// Exact minimum of ||x - E a||^2 over the probability simplex sampled at step
// 1/steps. For R = 4 the innermost axis is resolved in closed form (the
// restriction to that line is an exact 1D quadratic), which preserves
// exactness while keeping the enumeration tractable.
struct GridSearchResult {
    Eigen::VectorXd a;
    double objective;
};

inline GridSearchResult simplex_grid_search(const Eigen::MatrixXd& E, const Eigen::VectorXd& x,
                                            int steps = 1000) {
    const int R = static_cast<int>(E.cols());
    const double h = 1.0 / steps;
    GridSearchResult best;
    best.objective = std::numeric_limits<double>::infinity();
    best.a = Eigen::VectorXd::Zero(R);

    auto consider = [&](const Eigen::VectorXd& a) {
        const double obj = (x - E * a).squaredNorm();
        if (obj < best.objective) {
            best.objective = obj;
            best.a = a;
        }
    };

    if (R == 1) {
        consider(Eigen::VectorXd::Ones(1));
    } else if (R == 2) {
        Eigen::VectorXd a(2);
        for (int i = 0; i <= steps; ++i) {
            a(0) = i * h;
            a(1) = 1.0 - a(0);
            consider(a);
        }
    } else if (R == 3) {
        Eigen::VectorXd a(3);
        for (int i = 0; i <= steps; ++i)
            for (int j = 0; j <= steps - i; ++j) {
                a(0) = i * h;
                a(1) = j * h;
                a(2) = 1.0 - a(0) - a(1);
                consider(a);
            }
    } else if (R == 4) {
        Eigen::VectorXd a(4);
        const Eigen::VectorXd v = E.col(2) - E.col(3);
        const double vv = v.squaredNorm();
        for (int i = 0; i <= steps; ++i)
            for (int j = 0; j <= steps - i; ++j) {
                const int rem = steps - i - j;
                a(0) = i * h;
                a(1) = j * h;
                const Eigen::VectorXd u =
                    x - a(0) * E.col(0) - a(1) * E.col(1) - (rem * h) * E.col(3);
                int center = 0;
                if (vv > 0.0) {
                    const double t = u.dot(v) / vv;
                    center = std::clamp(static_cast<int>(std::lround(t / h)), 0, rem);
                }
                for (int m = std::max(0, center - 1); m <= std::min(rem, center + 1); ++m) {
                    a(2) = m * h;
                    a(3) = (rem - m) * h;
                    consider(a);
                }
            }
    } else {
        throw std::runtime_error("simplex_grid_search: R > 4 not supported");
    }
    return best;
}

}  // namespace oracles
