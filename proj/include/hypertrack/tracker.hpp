#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "hypertrack/core.hpp"
#include "hypertrack/features.hpp"
#include "hypertrack/unmixing.hpp"

namespace hypertrack {

struct TrackerConfig {
    SshmgParams sshmg;
    double eta = 0.0023;          // autoregressive learning rate
    double filter_lambda = 0.01;  // ridge weight of the filter objective
    std::vector<double> scales = {0.985, 1.0, 1.015};
    double padding = 2.2360679774997896;  // sqrt(5): window covers 5x target area
    int admm_iters = 2;
    double admm_mu = 1.0;
    double admm_beta = 10.0;
    double admm_mu_max = 1e3;
    double label_sigma_factor = 1.0 / 16.0;

    // unmixing (endmembers are selected once at init and frozen)
    double unmix_lambda = -1.0;  // < 0 selects the data-scaled default
    AdmmOptions unmix_admm;
    int endmembers = 0;  // 0 = automatic via HySime

    // feature groups
    bool use_sshmg = true;
    bool use_abundance = true;
    bool band_mean_input = false;  // grayscale ablation preprocessing
    bool update_weights = true;    // reliability updates (no effect for one group)

    void validate() const;
};

struct GaussianLabel {
    int cells_x = 0, cells_y = 0;
    int center_x = 0, center_y = 0;
    double sigma = 0.0;
    std::vector<double> centered;  // peak value 1 at (center_x, center_y)
    std::vector<double> shifted;   // circularly shifted, peak at (0, 0)
    std::vector<std::complex<double>> shifted_fft;
};

GaussianLabel make_label(int cells_x, int cells_y, int center_x, int center_y, double sigma);

// One complex plane per channel, raw (unnormalized) 2D DFTs.
struct FourierFeatures {
    int cells_x = 0, cells_y = 0;
    std::vector<std::vector<std::complex<double>>> channels;
};

FourierFeatures fft_features(const FeatureMap& map);

// Filter support (the crop operator) on the cell grid.
struct CropWindow {
    int x0 = 0, y0 = 0, w = 0, h = 0;
};

struct Filters {
    int cells_x = 0, cells_y = 0;
    std::vector<std::vector<std::vector<std::complex<double>>>> ghat;  // [group][channel]
    std::vector<std::vector<std::vector<double>>> f;  // time domain, zero outside the crop
    bool zero_energy = false;
};

struct FilterLearnDiag {
    // Augmented Lagrangian at fixed multiplier, one row per ADMM iteration:
    // (iteration start, after the g-update, after the f-update).
    std::vector<std::array<double, 3>> lagrangian;
};

// ADMM solve of the reliability-weighted, crop-masked ridge objective. The
// group features must already carry their reliability weights.
Filters learn_filters(const std::vector<FourierFeatures>& groups, const GaussianLabel& label,
                      const CropWindow& crop, const TrackerConfig& cfg,
                      FilterLearnDiag* diag = nullptr);

struct ReliabilityWeights {
    std::vector<double> w;  // nonnegative, sums to 1
    std::vector<double> overlap_score;     // exp(-(1-IoU)^2)
    std::vector<double> distance_score;    // exp(-|C_i - C|^2), cell units
    std::vector<double> smoothness_score;  // exp(-|C_i - C_i,prev|^2 / (w+h))
};

// Overlap, distance and trajectory-smoothness scores combined and normalized.
// Center distances for the distance score are taken in cell units
// (cell_pixels = cell edge in pixels); the smoothness score uses pixels.
ReliabilityWeights reliability_update(const std::vector<BoundingBox>& group_boxes,
                                      const BoundingBox& final_box,
                                      const std::vector<BoundingBox>& prev_group_boxes,
                                      double cell_pixels);

struct TrackerState {
    TrackerConfig cfg;
    double init_w = 0.0, init_h = 0.0;  // target size at init
    double scale = 1.0;                 // current scale factor
    BoundingBox box;
    int base_w = 0, base_h = 0;  // search window size in pixels, fixed per run
    int cells_x = 0, cells_y = 0;
    CropWindow crop;
    GaussianLabel label;
    int frame_w = 0, frame_h = 0, frame_k = 0;

    std::vector<std::string> groups;
    EndmemberSet endmembers;             // frozen at init (empty if abundance off)
    std::vector<FourierFeatures> model;  // unweighted model features per group
    std::vector<double> w_model;
    Filters filters;
    std::vector<BoundingBox> group_boxes;  // per-group boxes from the previous frame
    int frame_index = 0;
};

// library may be null when the abundance group is disabled.
TrackerState tracker_init(const HyperspectralCube& frame, const BoundingBox& init_box,
                          const SpectralLibrary* library, const TrackerConfig& cfg);

struct Detection {
    BoundingBox box;
    std::vector<BoundingBox> group_boxes;
    int scale_index = 0;
    double peak = 0.0;
    std::vector<double> response;  // summed response map at the chosen scale
};

Detection detect(const TrackerState& state, const HyperspectralCube& frame);

// Eq.-style autoregressive update of weights and Fourier-domain model
// features, then filter relearning.
void model_update(TrackerState& state, const HyperspectralCube& frame, const BoundingBox& box,
                  const ReliabilityWeights& w, double eta);

// Multiplies the model features by the current weights and relearns filters.
void relearn_filters(TrackerState& state, FilterLearnDiag* diag = nullptr);

struct TrackResult {
    Trajectory trajectory;                    // one box per frame, frame 0 verbatim
    std::vector<std::vector<double>> weights;  // model weights after each frame
    double seconds = 0.0;
};

TrackResult track(const HyperspectralSequence& seq, const BoundingBox& init_box,
                  const SpectralLibrary* library, const TrackerConfig& cfg);

}  // namespace hypertrack
