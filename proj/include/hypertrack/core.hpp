#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace hypertrack {

// Axis-aligned bounding box, center convention in memory.
// Annotation files use the top-left x,y,w,h convention and are converted on load.
struct BoundingBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    static BoundingBox from_topleft(double x, double y, double w, double h) {
        return BoundingBox{x + w / 2.0, y + h / 2.0, w, h};
    }
    double x() const { return cx - w / 2.0; }
    double y() const { return cy - h / 2.0; }
    double area() const { return w * h; }
    bool valid() const;
};

using Trajectory = std::vector<BoundingBox>;

// W x H x K reflectance cube. Data is band-sequential: band-major, then
// row-major within a band, matching the .hsb file layout.
struct HyperspectralCube {
    int width = 0;
    int height = 0;
    int bands = 0;
    std::vector<double> wavelengths_nm;  // strictly increasing, size == bands
    std::vector<float> data;             // size == width*height*bands

    std::size_t index(int x, int y, int k) const {
        return static_cast<std::size_t>(k) * width * height +
               static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
    }
    float at(int x, int y, int k) const { return data[index(x, y, k)]; }
    float& at(int x, int y, int k) { return data[index(x, y, k)]; }
    std::size_t size() const { return data.size(); }

    // Throws std::runtime_error if any type invariant is violated.
    void validate(const std::string& context = "") const;
};

struct HyperspectralSequence {
    std::vector<HyperspectralCube> frames;
    double frame_rate = 25.0;

    void validate() const;  // >= 1 frame, all frames dimension-identical
};

// Deterministic RNG used everywhere randomness is needed. Gaussians come from
// Box-Muller on raw mt19937_64 output so streams are reproducible across
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double gaussian();
    std::uint64_t integer(std::uint64_t n);  // [0, n)

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---- Sequence and annotation I/O ----------------------------------------

// Directory layout: meta.json + one NNNNN.hsb file per frame.
// .hsb: 16-byte header (magic "HSB1", then W, H, K as little-endian u32),
// then W*H*K little-endian IEEE-754 32-bit values, band-sequential.
HyperspectralSequence load_sequence(const std::filesystem::path& dir);
void write_sequence(const HyperspectralSequence& seq, const std::filesystem::path& dir);

// One "x,y,w,h" line per frame, top-left convention.
std::vector<BoundingBox> load_groundtruth(const std::filesystem::path& file);
void write_boxes(const std::vector<BoundingBox>& boxes, const std::filesystem::path& file);

// ---- Cropping / resampling ----------------------------------------------

// Sub-cube covering `box` scaled by pad_factor about its center. Out-of-frame
// pixels are filled by edge replication. Output size is
// round(pad_factor*w) x round(pad_factor*h), all bands.
HyperspectralCube crop_cube(const HyperspectralCube& cube, const BoundingBox& box,
                            double pad_factor);

// Bilinear per-band resampling to out_w x out_h.
HyperspectralCube resize_cube(const HyperspectralCube& cube, int out_w, int out_h);

// ---- Synthetic scene generator ------------------------------------------

struct SceneObject {
    enum class Shape { Rect, Ellipse };
    std::vector<std::array<double, 2>> centers;  // per frame (cx, cy)
    std::vector<std::array<double, 2>> sizes;    // per frame (w, h)
    std::vector<double> spectrum;                // length K, nonnegative
    Shape shape = Shape::Rect;
};

struct SceneConfig {
    int frames = 0;
    int width = 0;
    int height = 0;
    int bands = 0;
    std::vector<double> wavelengths_nm;                // size bands
    std::vector<SceneObject> objects;                  // objects[0] is the tracked target
    std::vector<std::vector<double>> background_spectra;  // >= 1; tiled in blocks if > 1
    int background_block = 16;
    double noise_sigma = 0.0;
    std::vector<double> illumination;  // optional per-frame scalar, default 1
    double frame_rate = 25.0;

    void validate() const;
};

// Deterministic for a fixed seed. Each pixel's spectrum is its region's
// material spectrum times the frame illumination plus i.i.d. Gaussian noise,
// clamped to [0,1]. Ground truth is objects[0]'s configured trajectory.
std::pair<HyperspectralSequence, std::vector<BoundingBox>>
synth_scene(const SceneConfig& cfg, std::uint64_t seed);

// Replaces every pixel spectrum by its band mean (grayscale ablation input).
HyperspectralCube band_mean_cube(const HyperspectralCube& cube);

double spectral_angle(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace hypertrack
