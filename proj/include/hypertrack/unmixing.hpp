#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "hypertrack/core.hpp"
#include "hypertrack/features.hpp"

namespace hypertrack {

// Dictionary of material spectra; columns are atoms.
struct SpectralLibrary {
    Eigen::MatrixXd atoms;               // L x M
    std::vector<double> wavelengths_nm;  // length L, may be empty

    int bands() const { return static_cast<int>(atoms.rows()); }
    int size() const { return static_cast<int>(atoms.cols()); }
    void validate() const;  // finite, no zero columns
};

SpectralLibrary load_library(const std::filesystem::path& file);
void save_library(const SpectralLibrary& lib, const std::filesystem::path& file);

struct EndmemberSet {
    Eigen::MatrixXd spectra;            // L x R
    std::vector<int> source_indices;    // atom (or pixel) indices the columns came from

    int count() const { return static_cast<int>(spectra.cols()); }
};

// Columns of X in row-major pixel order (p = y*W + x), rows are bands.
Eigen::MatrixXd cube_to_matrix(const HyperspectralCube& cube);

// Vertex component analysis: R extreme columns of X found by SVD projection
// and iterative orthogonal-direction maximization. Deterministic given seed.
EndmemberSet vca(const Eigen::MatrixXd& X, int R, std::uint64_t seed);

// VCA per cube, pooled, then k-means (k-means++ init, max 300 iterations,
// tol 1e-6); cluster centers become library atoms.
SpectralLibrary build_library(const std::vector<HyperspectralCube>& cubes, int per_cube_R,
                              int M, std::uint64_t seed);

struct AdmmOptions {
    double mu = 0.1;
    int max_iters = 200;
    double tol = 1e-6;
};

struct ClsunsalResult {
    Eigen::MatrixXd S;  // M x N, nonnegative
    bool converged = false;
    int iterations = 0;
    std::vector<double> objective;  // ||X-AS||_F^2 + lambda*||S||_{2,1} per iteration
};

// Collaborative sparse regression: min ||X - A S||_F^2 + lambda * sum_m ||S(m,:)||_2
// subject to S >= 0, by ADMM with row-wise group soft-thresholding.
ClsunsalResult clsunsal(const Eigen::MatrixXd& X, const SpectralLibrary& A, double lambda,
                        const AdmmOptions& opt = {});

// Data-scaled default for the regression weight: 1e-3 * max|A^T X|.
double auto_unmix_lambda(const Eigen::MatrixXd& X, const SpectralLibrary& A);

// Atoms with the R largest row sums of S; ties broken by lower atom index.
EndmemberSet select_endmembers(const Eigen::MatrixXd& S, const SpectralLibrary& A, int R);

enum class NoiseEstimate { Regression };

struct HysimeResult {
    int r = 1;
    bool degenerate = false;
};

// Signal subspace dimension: band-regression noise estimate, then the count
// of eigenvectors whose inclusion decreases the mean-squared-error criterion.
// Clamped to [1, min(L-1, 8)].
HysimeResult hysime(const Eigen::MatrixXd& X,
                    NoiseEstimate method = NoiseEstimate::Regression);

// Single-pixel fully constrained least squares: min ||x - E a||_2 subject to
// a >= 0, sum(a) = 1 (active-set simplex projection, exact).
Eigen::VectorXd simplex_ls(const Eigen::MatrixXd& E, const Eigen::VectorXd& x);

struct AbundanceMap {
    Eigen::MatrixXd fractions;  // R x N, every column on the probability simplex
    int width = 0, height = 0;  // spatial arrangement when known (width*height == N)
};

AbundanceMap spu_abundances(const Eigen::MatrixXd& X, const EndmemberSet& E);

// Per-pixel abundances averaged over each cell of the SSHMG grid; R channels.
FeatureMap abundance_feature_map(const HyperspectralCube& cube, const EndmemberSet& E,
                                 int cell);

}  // namespace hypertrack
