#include "hypertrack/tracker.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "hypertrack/eval.hpp"
#include "hypertrack/fft.hpp"

namespace hypertrack {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }
}  // namespace

void TrackerConfig::validate() const {
    sshmg.validate();
    if (!(eta >= 0.0 && eta <= 1.0)) fail("tracker: eta must be in [0, 1]");
    if (!(filter_lambda >= 0.0)) fail("tracker: filter_lambda must be >= 0");
    if (scales.empty()) fail("tracker: needs at least one scale");
    for (double s : scales)
        if (!(s > 0.0)) fail("tracker: scales must be positive");
    if (!(padding >= 1.0)) fail("tracker: padding must be >= 1");
    if (admm_iters < 1) fail("tracker: admm_iters must be >= 1");
    if (!(admm_mu > 0.0) || !(admm_beta >= 1.0) || !(admm_mu_max >= admm_mu))
        fail("tracker: bad ADMM penalty schedule");
    if (!(label_sigma_factor > 0.0)) fail("tracker: label_sigma_factor must be positive");
    if (!use_sshmg && !use_abundance) fail("tracker: at least one feature group required");
    if (endmembers < 0) fail("tracker: endmembers must be >= 0");
}

GaussianLabel make_label(int cells_x, int cells_y, int center_x, int center_y, double sigma) {
    if (cells_x < 1 || cells_y < 1) fail("make_label: empty grid");
    if (center_x < 0 || center_x >= cells_x || center_y < 0 || center_y >= cells_y)
        fail("make_label: center off the grid");
    if (!(sigma > 0.0)) fail("make_label: sigma must be positive");

    GaussianLabel lab;
    lab.cells_x = cells_x;
    lab.cells_y = cells_y;
    lab.center_x = center_x;
    lab.center_y = center_y;
    lab.sigma = sigma;
    lab.centered.resize(static_cast<std::size_t>(cells_x) * cells_y);
    lab.shifted.resize(lab.centered.size());
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < cells_y; ++y)
        for (int x = 0; x < cells_x; ++x) {
            const double dx = x - center_x;
            const double dy = y - center_y;
            lab.centered[static_cast<std::size_t>(y) * cells_x + x] =
                std::exp(-(dx * dx + dy * dy) * inv);
        }
    for (int y = 0; y < cells_y; ++y)
        for (int x = 0; x < cells_x; ++x) {
            const int sx = (x + center_x) % cells_x;
            const int sy = (y + center_y) % cells_y;
            lab.shifted[static_cast<std::size_t>(y) * cells_x + x] =
                lab.centered[static_cast<std::size_t>(sy) * cells_x + sx];
        }
    lab.shifted_fft = fft::forward2d(lab.shifted, cells_x, cells_y);
    return lab;
}

FourierFeatures fft_features(const FeatureMap& map) {
    FourierFeatures out;
    out.cells_x = map.cells_x;
    out.cells_y = map.cells_y;
    out.channels.reserve(map.channels);
    std::vector<double> plane(map.plane_size());
    for (int c = 0; c < map.channels; ++c) {
        const double* src = map.channel(c);
        std::copy(src, src + plane.size(), plane.begin());
        out.channels.push_back(fft::forward2d(plane, map.cells_x, map.cells_y));
    }
    return out;
}

// ---- Filter learning --------------------------------------------------------

namespace {

double lagrangian_value(const std::vector<const std::vector<std::complex<double>>*>& xhat,
                        const std::vector<std::vector<std::complex<double>>>& ghat,
                        const std::vector<std::vector<double>>& f,
                        const std::vector<std::vector<std::complex<double>>>& fhat,
                        const std::vector<std::vector<std::complex<double>>>& zeta,
                        const std::vector<std::complex<double>>& yhat, double lambda, double mu,
                        std::size_t D) {
    const std::size_t K = xhat.size();
    double fit = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
        std::complex<double> sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) sum += (*xhat[k])[d] * ghat[k][d];
        fit += std::norm(yhat[d] - sum);
    }
    double ridge = 0.0, link = 0.0, penalty = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        for (double v : f[k]) ridge += v * v;
        for (std::size_t d = 0; d < D; ++d) {
            const std::complex<double> diff = ghat[k][d] - fhat[k][d];
            link += (std::conj(zeta[k][d]) * diff).real();
            penalty += std::norm(diff);
        }
    }
    const double Dd = static_cast<double>(D);
    return fit / (2.0 * Dd) + lambda / 2.0 * ridge + link / Dd + mu / (2.0 * Dd) * penalty;
}

}  // namespace

Filters learn_filters(const std::vector<FourierFeatures>& groups, const GaussianLabel& label,
                      const CropWindow& crop, const TrackerConfig& cfg,
                      FilterLearnDiag* diag) {
    if (groups.empty()) fail("learn_filters: no feature groups");
    const int W = label.cells_x;
    const int H = label.cells_y;
    const std::size_t D = static_cast<std::size_t>(W) * H;
    for (const auto& g : groups)
        if (g.cells_x != W || g.cells_y != H)
            fail("learn_filters: feature grid does not match the label grid");
    if (crop.x0 < 0 || crop.y0 < 0 || crop.w < 1 || crop.h < 1 || crop.x0 + crop.w > W ||
        crop.y0 + crop.h > H)
        fail("learn_filters: crop window off the grid");

    std::vector<const std::vector<std::complex<double>>*> xhat;
    std::vector<std::pair<int, int>> origin;  // (group, channel) per flat index
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t c = 0; c < groups[g].channels.size(); ++c) {
            xhat.push_back(&groups[g].channels[c]);
            origin.emplace_back(static_cast<int>(g), static_cast<int>(c));
        }
    const std::size_t K = xhat.size();
    if (K == 0) fail("learn_filters: no channels");

    Filters out;
    out.cells_x = W;
    out.cells_y = H;
    out.ghat.resize(groups.size());
    out.f.resize(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        out.ghat[g].assign(groups[g].channels.size(),
                           std::vector<std::complex<double>>(D, 0.0));
        out.f[g].assign(groups[g].channels.size(), std::vector<double>(D, 0.0));
    }

    std::vector<double> sxx(D, 0.0);
    double energy = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t d = 0; d < D; ++d) {
            const double n = std::norm((*xhat[k])[d]);
            sxx[d] += n;
            energy += n;
        }
    if (energy < 1e-30) {
        out.zero_energy = true;
        return out;
    }

    std::vector<std::vector<std::complex<double>>> ghat(K,
                                                        std::vector<std::complex<double>>(D, 0.0));
    std::vector<std::vector<std::complex<double>>> fhat = ghat;
    std::vector<std::vector<std::complex<double>>> zeta = ghat;
    std::vector<std::vector<double>> f(K, std::vector<double>(D, 0.0));
    const std::vector<std::complex<double>>& yhat = label.shifted_fft;

    double mu = cfg.admm_mu;
    std::vector<std::complex<double>> r(K);
    for (int iter = 0; iter < cfg.admm_iters; ++iter) {
        if (diag)
            diag->lagrangian.push_back(
                {lagrangian_value(xhat, ghat, f, fhat, zeta, yhat, cfg.filter_lambda, mu, D), 0.0,
                 0.0});

        // g-update: per-frequency rank-1 system solved by Sherman-Morrison
        for (std::size_t d = 0; d < D; ++d) {
            std::complex<double> dot = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const std::complex<double> a = (*xhat[k])[d];
                r[k] = std::conj(a) * yhat[d] - zeta[k][d] + mu * fhat[k][d];
                dot += a * r[k];
            }
            const double denom = mu + sxx[d];
            for (std::size_t k = 0; k < K; ++k) {
                const std::complex<double> a = (*xhat[k])[d];
                ghat[k][d] = (r[k] - std::conj(a) * dot / denom) / mu;
            }
        }
        if (diag)
            diag->lagrangian.back()[1] =
                lagrangian_value(xhat, ghat, f, fhat, zeta, yhat, cfg.filter_lambda, mu, D);

        // f-update: spatial shrinkage restricted to the crop support
        const double gain = 1.0 / (cfg.filter_lambda + mu);
        for (std::size_t k = 0; k < K; ++k) {
            const std::vector<double> g_sp = fft::inverse2d_real(ghat[k], W, H);
            const std::vector<double> z_sp = fft::inverse2d_real(zeta[k], W, H);
            std::fill(f[k].begin(), f[k].end(), 0.0);
            for (int y = crop.y0; y < crop.y0 + crop.h; ++y)
                for (int x = crop.x0; x < crop.x0 + crop.w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * W + x;
                    f[k][i] = gain * (z_sp[i] + mu * g_sp[i]);
                }
            fhat[k] = fft::forward2d(f[k], W, H);
        }
        if (diag)
            diag->lagrangian.back()[2] =
                lagrangian_value(xhat, ghat, f, fhat, zeta, yhat, cfg.filter_lambda, mu, D);

        // multiplier and penalty updates
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t d = 0; d < D; ++d) zeta[k][d] += mu * (ghat[k][d] - fhat[k][d]);
        mu = std::min(mu * cfg.admm_beta, cfg.admm_mu_max);
    }

    for (std::size_t k = 0; k < K; ++k) {
        const auto [g, c] = origin[k];
        out.ghat[g][c] = std::move(ghat[k]);
        out.f[g][c] = std::move(f[k]);
    }
    return out;
}

// ---- Reliability -------------------------------------------------------------

ReliabilityWeights reliability_update(const std::vector<BoundingBox>& group_boxes,
                                      const BoundingBox& final_box,
                                      const std::vector<BoundingBox>& prev_group_boxes,
                                      double cell_pixels) {
    if (group_boxes.empty() || group_boxes.size() != prev_group_boxes.size())
        fail("reliability_update: box list size mismatch");
    if (!final_box.valid()) fail("reliability_update: invalid final box");
    if (!(cell_pixels > 0.0)) fail("reliability_update: cell size must be positive");

    ReliabilityWeights out;
    out.w.resize(group_boxes.size());
    double total = 0.0;
    for (std::size_t i = 0; i < group_boxes.size(); ++i) {
        const BoundingBox& b = group_boxes[i];
        const BoundingBox& p = prev_group_boxes[i];
        if (!b.valid() || !p.valid()) fail("reliability_update: invalid group box");

        const double overlap = iou(b, final_box);
        const double o_score = std::exp(-(1.0 - overlap) * (1.0 - overlap));

        const double dxc = (b.cx - final_box.cx) / cell_pixels;
        const double dyc = (b.cy - final_box.cy) / cell_pixels;
        const double d_score = std::exp(-(dxc * dxc + dyc * dyc));

        const double dxs = b.cx - p.cx;
        const double dys = b.cy - p.cy;
        const double s_score = std::exp(-(dxs * dxs + dys * dys) / (b.w + b.h));

        out.overlap_score.push_back(o_score);
        out.distance_score.push_back(d_score);
        out.smoothness_score.push_back(s_score);
        out.w[i] = o_score + d_score + s_score;
        total += out.w[i];
    }
    for (double& w : out.w) w /= total;
    return out;
}

// ---- Tracker ------------------------------------------------------------------

namespace {

HyperspectralCube sample_window(const HyperspectralCube& frame, double cx, double cy,
                                double crop_w, double crop_h, int base_w, int base_h) {
    const BoundingBox region{cx, cy, crop_w, crop_h};
    HyperspectralCube window = crop_cube(frame, region, 1.0);
    if (window.width != base_w || window.height != base_h)
        window = resize_cube(window, base_w, base_h);
    return window;
}

std::vector<FeatureMap> extract_groups(const TrackerState& st, const HyperspectralCube& window) {
    std::vector<FeatureMap> maps;
    for (const auto& name : st.groups) {
        if (name == "sshmg") {
            maps.push_back(sshmg(window, st.cfg.sshmg));
        } else {
            maps.push_back(abundance_feature_map(window, st.endmembers, st.cfg.sshmg.z));
        }
    }
    for (const auto& m : maps)
        if (m.cells_x != st.cells_x || m.cells_y != st.cells_y)
            fail("tracker: feature grid mismatch");
    return maps;
}

std::vector<FourierFeatures> weighted_copy(const std::vector<FourierFeatures>& feats,
                                           const std::vector<double>& w) {
    std::vector<FourierFeatures> out = feats;
    for (std::size_t g = 0; g < out.size(); ++g)
        for (auto& ch : out[g].channels)
            for (auto& v : ch) v *= w[g];
    return out;
}

// Quadratic fit on the (wrapped) 3x3 neighborhood of a response peak.
std::pair<double, double> subgrid_offset(const std::vector<double>& map, int W, int H, int px,
                                         int py) {
    auto at = [&](int dx, int dy) {
        const int x = ((px + dx) % W + W) % W;
        const int y = ((py + dy) % H + H) % H;
        return map[static_cast<std::size_t>(y) * W + x];
    };
    double s1 = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const double v = at(dx, dy);
            s1 += v;
            sx += v * dx;
            sy += v * dy;
            sxx += v * dx * dx;
            syy += v * dy * dy;
            sxy += v * dx * dy;
        }
    const double b = sx / 6.0;
    const double c = sy / 6.0;
    const double ff = sxy / 4.0;
    const double u = (sxx + syy) / 2.0 - (2.0 / 3.0) * s1;
    const double d = (u + (sxx - syy) / 2.0) / 2.0;
    const double e = (u - (sxx - syy) / 2.0) / 2.0;
    const double det = 4.0 * d * e - ff * ff;
    if (!(det > 0.0) || d >= 0.0) return {0.0, 0.0};
    const double ox = (-2.0 * e * b + c * ff) / det;
    const double oy = (-2.0 * d * c + b * ff) / det;
    return {std::clamp(ox, -0.5, 0.5), std::clamp(oy, -0.5, 0.5)};
}

double wrap_cells(int p, int n) { return p > n / 2 ? p - n : p; }

struct PeakResult {
    int scale_index = 0;
    double disp_x = 0.0, disp_y = 0.0;  // cells, wrapped, sub-grid refined
    double value = 0.0;
};

PeakResult find_peak(const std::vector<std::vector<double>>& maps_per_scale, int W, int H) {
    PeakResult best;
    best.value = -std::numeric_limits<double>::infinity();
    int bx = 0, by = 0;
    for (std::size_t s = 0; s < maps_per_scale.size(); ++s) {
        const auto& m = maps_per_scale[s];
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double v = m[static_cast<std::size_t>(y) * W + x];
                if (v > best.value) {
                    best.value = v;
                    best.scale_index = static_cast<int>(s);
                    bx = x;
                    by = y;
                }
            }
    }
    const auto [ox, oy] = subgrid_offset(maps_per_scale[best.scale_index], W, H, bx, by);
    best.disp_x = wrap_cells(bx, W) + ox;
    best.disp_y = wrap_cells(by, H) + oy;
    return best;
}

BoundingBox clamp_center(BoundingBox b, int frame_w, int frame_h) {
    b.cx = std::clamp(b.cx, 0.0, static_cast<double>(frame_w));
    b.cy = std::clamp(b.cy, 0.0, static_cast<double>(frame_h));
    return b;
}

constexpr double kMinScale = 0.2;
constexpr double kMaxScale = 5.0;

}  // namespace

void relearn_filters(TrackerState& state, FilterLearnDiag* diag) {
    const auto weighted = weighted_copy(state.model, state.w_model);
    state.filters = learn_filters(weighted, state.label, state.crop, state.cfg, diag);
}

TrackerState tracker_init(const HyperspectralCube& frame_in, const BoundingBox& init_box,
                          const SpectralLibrary* library, const TrackerConfig& cfg) {
    cfg.validate();
    if (!init_box.valid()) fail("tracker_init: invalid init box");
    const HyperspectralCube frame = cfg.band_mean_input ? band_mean_cube(frame_in) : frame_in;
    if (frame.bands < 3) fail("tracker_init: needs at least 3 bands");

    TrackerState st;
    st.cfg = cfg;
    st.box = init_box;
    st.init_w = init_box.w;
    st.init_h = init_box.h;
    st.frame_w = frame.width;
    st.frame_h = frame.height;
    st.frame_k = frame.bands;

    const int z = cfg.sshmg.z;
    st.base_w = std::max<int>({static_cast<int>(std::llround(cfg.padding * init_box.w)),
                               2 * z + 1, 3});
    st.base_h = std::max<int>({static_cast<int>(std::llround(cfg.padding * init_box.h)),
                               2 * z + 1, 3});
    st.cells_x = sshmg_cells(st.base_w, z);
    st.cells_y = sshmg_cells(st.base_h, z);

    const int crop_w = std::clamp(static_cast<int>(init_box.w) / z, 1, st.cells_x);
    const int crop_h = std::clamp(static_cast<int>(init_box.h) / z, 1, st.cells_y);
    st.crop = CropWindow{(st.cells_x - crop_w) / 2, (st.cells_y - crop_h) / 2, crop_w, crop_h};

    const double sigma =
        std::max(cfg.label_sigma_factor * std::sqrt(init_box.w * init_box.h) / z, 1e-3);
    st.label = make_label(st.cells_x, st.cells_y, st.cells_x / 2, st.cells_y / 2, sigma);

    if (cfg.use_sshmg) st.groups.push_back("sshmg");
    if (cfg.use_abundance) {
        if (!library) fail("tracker_init: abundance features need a spectral library");
        library->validate();
        if (library->bands() != frame.bands)
            fail("tracker_init: library band count does not match the sequence");
        st.groups.push_back("abundance");

        const HyperspectralCube target = crop_cube(frame, init_box, 1.0);
        const Eigen::MatrixXd X = cube_to_matrix(target);
        const double lam = cfg.unmix_lambda >= 0.0 ? cfg.unmix_lambda
                                                   : auto_unmix_lambda(X, *library);
        const ClsunsalResult cls = clsunsal(X, *library, lam, cfg.unmix_admm);
        int R = cfg.endmembers > 0 ? cfg.endmembers : hysime(X).r;
        R = std::clamp(R, 1, library->size());
        st.endmembers = select_endmembers(cls.S, *library, R);
    }

    const HyperspectralCube window =
        sample_window(frame, init_box.cx, init_box.cy, st.base_w, st.base_h, st.base_w, st.base_h);
    const auto maps = extract_groups(st, window);
    for (const auto& m : maps) st.model.push_back(fft_features(m));
    st.w_model.assign(st.groups.size(), 1.0 / st.groups.size());

    relearn_filters(st);
    st.group_boxes.assign(st.groups.size(), init_box);
    st.frame_index = 0;
    return st;
}

Detection detect(const TrackerState& st, const HyperspectralCube& frame_in) {
    const HyperspectralCube frame =
        st.cfg.band_mean_input ? band_mean_cube(frame_in) : frame_in;
    if (frame.width != st.frame_w || frame.height != st.frame_h || frame.bands != st.frame_k)
        fail("detect: frame dimensions differ from the initial frame");

    const int W = st.cells_x, H = st.cells_y;
    const std::size_t D = static_cast<std::size_t>(W) * H;
    const int n_groups = static_cast<int>(st.groups.size());
    const int n_scales = static_cast<int>(st.cfg.scales.size());

    // responses[g][s] and their sum per scale
    std::vector<std::vector<std::vector<double>>> responses(
        n_groups, std::vector<std::vector<double>>(n_scales));
    std::vector<std::vector<double>> summed(n_scales, std::vector<double>(D, 0.0));
    std::vector<double> crop_ratio_x(n_scales), crop_ratio_y(n_scales);

    for (int s = 0; s < n_scales; ++s) {
        const double srel = st.cfg.scales[s];
        const double crop_w = st.base_w * st.scale * srel;
        const double crop_h = st.base_h * st.scale * srel;
        const HyperspectralCube window =
            sample_window(frame, st.box.cx, st.box.cy, crop_w, crop_h, st.base_w, st.base_h);
        crop_ratio_x[s] = std::max<double>(1.0, std::llround(crop_w)) / st.base_w;
        crop_ratio_y[s] = std::max<double>(1.0, std::llround(crop_h)) / st.base_h;

        const auto maps = extract_groups(st, window);
        for (int g = 0; g < n_groups; ++g) {
            const FourierFeatures xf = fft_features(maps[g]);
            std::vector<std::complex<double>> acc(D, 0.0);
            for (std::size_t c = 0; c < xf.channels.size(); ++c) {
                const auto& xc = xf.channels[c];
                const auto& gc = st.filters.ghat[g][c];
                for (std::size_t d = 0; d < D; ++d) acc[d] += st.w_model[g] * xc[d] * gc[d];
            }
            responses[g][s] = fft::inverse2d_real(acc, W, H);
            for (std::size_t d = 0; d < D; ++d) summed[s][d] += responses[g][s][d];
        }
    }

    const int z = st.cfg.sshmg.z;
    auto to_box = [&](const PeakResult& p) {
        const double srel = st.cfg.scales[p.scale_index];
        const double dx = p.disp_x * z * crop_ratio_x[p.scale_index];
        const double dy = p.disp_y * z * crop_ratio_y[p.scale_index];
        const double ns = std::clamp(st.scale * srel, kMinScale, kMaxScale);
        BoundingBox b{st.box.cx + dx, st.box.cy + dy, st.init_w * ns, st.init_h * ns};
        return clamp_center(b, st.frame_w, st.frame_h);
    };

    Detection det;
    const PeakResult final_peak = find_peak(summed, W, H);
    det.box = to_box(final_peak);
    det.scale_index = final_peak.scale_index;
    det.peak = final_peak.value;
    det.response = summed[final_peak.scale_index];
    for (int g = 0; g < n_groups; ++g) {
        if (st.w_model[g] <= 0.0) {
            // a zero-weight group has an all-zero map; keep it anchored
            det.group_boxes.push_back(st.group_boxes[g]);
            continue;
        }
        det.group_boxes.push_back(to_box(find_peak(responses[g], W, H)));
    }
    return det;
}

void model_update(TrackerState& st, const HyperspectralCube& frame_in, const BoundingBox& box,
                  const ReliabilityWeights& w, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) fail("model_update: eta must be in [0, 1]");
    if (w.w.size() != st.groups.size()) fail("model_update: weight count mismatch");
    const HyperspectralCube frame =
        st.cfg.band_mean_input ? band_mean_cube(frame_in) : frame_in;

    st.box = box;
    st.scale = std::clamp(box.w / st.init_w, kMinScale, kMaxScale);
    ++st.frame_index;
    if (eta == 0.0) return;

    for (std::size_t g = 0; g < st.groups.size(); ++g)
        st.w_model[g] = (1.0 - eta) * st.w_model[g] + eta * w.w[g];

    const double crop_w = st.base_w * st.scale;
    const double crop_h = st.base_h * st.scale;
    const HyperspectralCube window =
        sample_window(frame, box.cx, box.cy, crop_w, crop_h, st.base_w, st.base_h);
    const auto maps = extract_groups(st, window);
    for (std::size_t g = 0; g < st.groups.size(); ++g) {
        const FourierFeatures xf = fft_features(maps[g]);
        for (std::size_t c = 0; c < xf.channels.size(); ++c)
            for (std::size_t d = 0; d < xf.channels[c].size(); ++d)
                st.model[g].channels[c][d] =
                    (1.0 - eta) * st.model[g].channels[c][d] + eta * xf.channels[c][d];
    }

    relearn_filters(st);
}

TrackResult track(const HyperspectralSequence& seq, const BoundingBox& init_box,
                  const SpectralLibrary* library, const TrackerConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    seq.validate();

    TrackResult res;
    TrackerState st = tracker_init(seq.frames.front(), init_box, library, cfg);
    res.trajectory.push_back(init_box);  // frame 0 is the init box verbatim
    res.weights.push_back(st.w_model);

    for (std::size_t t = 1; t < seq.frames.size(); ++t) {
        const HyperspectralCube& frame = seq.frames[t];
        const Detection det = detect(st, frame);

        ReliabilityWeights w;
        if (cfg.update_weights) {
            w = reliability_update(det.group_boxes, det.box, st.group_boxes,
                                   cfg.sshmg.z * st.scale);
        } else {
            w.w = st.w_model;
        }
        model_update(st, frame, det.box, w, cfg.eta);
        st.group_boxes = det.group_boxes;

        res.trajectory.push_back(det.box);
        res.weights.push_back(st.w_model);
    }

    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace hypertrack
