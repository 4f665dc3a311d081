#pragma once

#include <vector>

#include "hypertrack/core.hpp"

namespace hypertrack {

struct SshmgParams {
    int z = 4;          // cube edge length in samples
    int n_theta = 9;    // spatial orientation bins
    int n_phi = 4;      // spectral orientation bins
    double alpha = 0.2; // truncation threshold
    void validate() const;
};

// Per-point gradient magnitude and orientations in spherical coordinates.
// theta in [0, 2pi), phi in [-pi/2, pi/2]; theta = phi = 0 where the gradient
// vanishes.
struct GradientField {
    int width = 0, height = 0, bands = 0;
    std::vector<double> magnitude;
    std::vector<double> theta;
    std::vector<double> phi;

    std::size_t index(int x, int y, int k) const {
        return static_cast<std::size_t>(k) * width * height +
               static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
    }
};

// Multi-channel map on the cell grid. Storage is channel-major so each
// channel is a contiguous row-major plane (what the FFT wants).
struct FeatureMap {
    int cells_x = 0, cells_y = 0, channels = 0;
    std::vector<double> values;  // [(c*cells_y + y)*cells_x + x]

    std::size_t plane_size() const {
        return static_cast<std::size_t>(cells_x) * cells_y;
    }
    double at(int x, int y, int c) const {
        return values[(static_cast<std::size_t>(c) * cells_y + y) * cells_x + x];
    }
    double& at(int x, int y, int c) {
        return values[(static_cast<std::size_t>(c) * cells_y + y) * cells_x + x];
    }
    const double* channel(int c) const { return values.data() + c * plane_size(); }
    void resize(int cx, int cy, int ch) {
        cells_x = cx;
        cells_y = cy;
        channels = ch;
        values.assign(static_cast<std::size_t>(cx) * cy * ch, 0.0);
    }
};

struct OrientationBins {
    int width = 0, height = 0, bands = 0;
    std::vector<int> b_theta;  // in {0..n_theta-1}
    std::vector<int> b_phi;    // in {0..n_phi-1}
};

// Point-level one-hot-magnitude features, bin index fastest.
struct PointFeatureField {
    int width = 0, height = 0, bands = 0;
    int n_theta = 0, n_phi = 0;
    std::vector<double> f_theta;  // size W*H*K*n_theta
    std::vector<double> f_phi;    // size W*H*K*n_phi
};

// Sums of point features over non-overlapping z*z*z cubes; partial cubes at
// the far borders are kept.
struct CubeFeatures {
    int cells_x = 0, cells_y = 0, slabs = 0;
    int n_theta = 0, n_phi = 0;
    std::vector<double> c_theta;  // [(((s*cells_y)+j)*cells_x+i)*n_theta + b]
    std::vector<double> c_phi;

    std::size_t cell_index(int i, int j, int s) const {
        return (static_cast<std::size_t>(s) * cells_y + j) * cells_x + i;
    }
};

// [-1, 0, 1] finite differences in x, y and band directions, borders by edge
// replication. Requires W, H, K >= 3.
GradientField gradients(const HyperspectralCube& cube);

OrientationBins quantize_orientations(const GradientField& g, const SshmgParams& p);

PointFeatureField point_features(const GradientField& g, const OrientationBins& bins,
                                 const SshmgParams& p);

CubeFeatures aggregate_cubes(const PointFeatureField& f, const SshmgParams& p);

// Overlapping 2x2 spatial blocks per spectral slab, L2-normalized, clipped at
// alpha, renormalized, concatenated over slabs. Channel count is
// 4*(n_theta+n_phi)*slabs.
FeatureMap block_features(const CubeFeatures& c, const SshmgParams& p);

FeatureMap sshmg(const HyperspectralCube& cube, const SshmgParams& p);

// Cell-grid size of the SSHMG output for a given cube edge.
inline int sshmg_cells(int extent, int z) { return (extent - 1) / z + 1; }

}  // namespace hypertrack
