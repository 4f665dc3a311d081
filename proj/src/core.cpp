#include "hypertrack/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hypertrack {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string frame_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d.hsb", index);
    return buf;
}

void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

bool BoundingBox::valid() const {
    return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
           w > 0.0 && h > 0.0;
}

void HyperspectralCube::validate(const std::string& context) const {
    const std::string where = context.empty() ? "cube" : context;
    if (width <= 0 || height <= 0) fail(where + ": nonpositive spatial dimensions");
    if (bands < 2) fail(where + ": needs at least 2 bands");
    if (wavelengths_nm.size() != static_cast<std::size_t>(bands))
        fail(where + ": wavelength count does not match band count");
    for (std::size_t i = 1; i < wavelengths_nm.size(); ++i)
        if (!(wavelengths_nm[i] > wavelengths_nm[i - 1]))
            fail(where + ": wavelengths not strictly increasing");
    if (data.size() != static_cast<std::size_t>(width) * height * bands)
        fail(where + ": data length does not equal W*H*K");
    for (float v : data)
        if (!std::isfinite(v)) fail(where + ": non-finite value");
}

void HyperspectralSequence::validate() const {
    if (frames.empty()) fail("sequence: no frames");
    frames.front().validate("frame 0");
    for (std::size_t i = 1; i < frames.size(); ++i) {
        const auto& f = frames[i];
        f.validate("frame " + std::to_string(i));
        if (f.width != frames[0].width || f.height != frames[0].height ||
            f.bands != frames[0].bands || f.wavelengths_nm != frames[0].wavelengths_nm)
            fail("sequence: frame " + std::to_string(i) + " dimensions differ from frame 0");
    }
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t Rng::integer(std::uint64_t n) {
    if (n == 0) fail("Rng::integer: n must be positive");
    // Rejection sampling keeps the distribution exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = eng_();
    } while (v >= limit);
    return v % n;
}

// ---- Sequence I/O ---------------------------------------------------------

void write_sequence(const HyperspectralSequence& seq, const std::filesystem::path& dir) {
    seq.validate();
    std::filesystem::create_directories(dir);
    const auto& f0 = seq.frames.front();

    json meta;
    meta["width"] = f0.width;
    meta["height"] = f0.height;
    meta["bands"] = f0.bands;
    meta["wavelengths_nm"] = f0.wavelengths_nm;
    meta["frame_rate"] = seq.frame_rate;
    meta["frame_count"] = seq.frames.size();
    {
        std::ofstream os(dir / "meta.json");
        if (!os) fail("cannot write " + (dir / "meta.json").string());
        os << meta.dump(2) << "\n";
    }

    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const auto& f = seq.frames[i];
        const auto path = dir / frame_name(static_cast<int>(i));
        std::ofstream os(path, std::ios::binary);
        if (!os) fail("cannot write " + path.string());
        os.write("HSB1", 4);
        put_u32le(os, static_cast<std::uint32_t>(f.width));
        put_u32le(os, static_cast<std::uint32_t>(f.height));
        put_u32le(os, static_cast<std::uint32_t>(f.bands));
        static_assert(sizeof(float) == 4);
        if (std::endian::native == std::endian::little) {
            os.write(reinterpret_cast<const char*>(f.data.data()),
                     static_cast<std::streamsize>(f.data.size() * 4));
        } else {
            for (float v : f.data) {
                std::uint32_t u;
                std::memcpy(&u, &v, 4);
                put_u32le(os, u);
            }
        }
        if (!os) fail("short write on " + path.string());
    }
}

HyperspectralSequence load_sequence(const std::filesystem::path& dir) {
    const auto meta_path = dir / "meta.json";
    if (!std::filesystem::exists(meta_path))
        fail("no frames found in " + dir.string() + " (missing meta.json)");

    json meta;
    {
        std::ifstream is(meta_path);
        if (!is) fail("cannot open " + meta_path.string());
        try {
            is >> meta;
        } catch (const json::exception& e) {
            fail("corrupt meta.json in " + dir.string() + ": " + e.what());
        }
    }

    HyperspectralSequence seq;
    int width, height, bands;
    std::size_t count;
    std::vector<double> wavelengths;
    try {
        width = meta.at("width").get<int>();
        height = meta.at("height").get<int>();
        bands = meta.at("bands").get<int>();
        wavelengths = meta.at("wavelengths_nm").get<std::vector<double>>();
        seq.frame_rate = meta.at("frame_rate").get<double>();
        count = meta.at("frame_count").get<std::size_t>();
    } catch (const json::exception& e) {
        fail("corrupt meta.json in " + dir.string() + ": " + e.what());
    }
    if (count == 0) fail("no frames found in " + dir.string());

    const std::size_t plane = static_cast<std::size_t>(width) * height;
    for (std::size_t i = 0; i < count; ++i) {
        const auto path = dir / frame_name(static_cast<int>(i));
        std::ifstream is(path, std::ios::binary);
        if (!is) fail("cannot open frame " + std::to_string(i) + " (" + path.string() + ")");

        unsigned char header[16];
        is.read(reinterpret_cast<char*>(header), 16);
        if (is.gcount() != 16 || std::memcmp(header, "HSB1", 4) != 0)
            fail("frame " + std::to_string(i) + ": bad .hsb header");
        const int fw = static_cast<int>(get_u32le(header + 4));
        const int fh = static_cast<int>(get_u32le(header + 8));
        const int fk = static_cast<int>(get_u32le(header + 12));
        if (fw != width || fh != height || fk != bands)
            fail("frame " + std::to_string(i) + ": dimensions " + std::to_string(fw) + "x" +
                 std::to_string(fh) + "x" + std::to_string(fk) + " do not match meta.json");

        HyperspectralCube cube;
        cube.width = width;
        cube.height = height;
        cube.bands = bands;
        cube.wavelengths_nm = wavelengths;
        cube.data.resize(plane * bands);
        is.read(reinterpret_cast<char*>(cube.data.data()),
                static_cast<std::streamsize>(cube.data.size() * 4));
        if (static_cast<std::size_t>(is.gcount()) != cube.data.size() * 4)
            fail("frame " + std::to_string(i) + ": truncated payload");
        char extra;
        if (is.read(&extra, 1))
            fail("frame " + std::to_string(i) + ": trailing bytes after payload");
        if (std::endian::native != std::endian::little) {
            for (float& v : cube.data) {
                std::uint32_t u;
                std::memcpy(&u, &v, 4);
                unsigned char b[4];
                std::memcpy(b, &u, 4);
                u = get_u32le(b);
                std::memcpy(&v, &u, 4);
            }
        }
        cube.validate("frame " + std::to_string(i));
        seq.frames.push_back(std::move(cube));
    }
    seq.validate();
    return seq;
}

// ---- Ground truth I/O -------------------------------------------------------

std::vector<BoundingBox> load_groundtruth(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) fail("cannot open " + file.string());
    std::vector<BoundingBox> boxes;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // tolerate trailing whitespace / blank last line
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x, y, w, h;
        if (!(ls >> x >> y >> w >> h))
            fail(file.string() + ": parse error at line " + std::to_string(lineno));
        std::string rest;
        if (ls >> rest)
            fail(file.string() + ": parse error at line " + std::to_string(lineno) +
                 " (extra fields)");
        if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(x) || !std::isfinite(y))
            fail(file.string() + ": invalid box at line " + std::to_string(lineno));
        boxes.push_back(BoundingBox::from_topleft(x, y, w, h));
    }
    return boxes;
}

void write_boxes(const std::vector<BoundingBox>& boxes, const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) fail("cannot write " + file.string());
    char buf[128];
    for (const auto& b : boxes) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f\n", b.x(), b.y(), b.w, b.h);
        os << buf;
    }
}

// ---- Cropping / resampling --------------------------------------------------

HyperspectralCube crop_cube(const HyperspectralCube& cube, const BoundingBox& box,
                            double pad_factor) {
    if (!box.valid()) fail("crop_cube: invalid box");
    if (!(pad_factor >= 1.0)) fail("crop_cube: pad_factor must be >= 1");
    if (box.x() >= cube.width || box.x() + box.w <= 0.0 || box.y() >= cube.height ||
        box.y() + box.h <= 0.0)
        fail("crop_cube: box fully outside frame");

    const int out_w = std::max<int>(1, static_cast<int>(std::llround(pad_factor * box.w)));
    const int out_h = std::max<int>(1, static_cast<int>(std::llround(pad_factor * box.h)));
    const long long x0 = std::llround(box.cx - out_w / 2.0);
    const long long y0 = std::llround(box.cy - out_h / 2.0);

    HyperspectralCube out;
    out.width = out_w;
    out.height = out_h;
    out.bands = cube.bands;
    out.wavelengths_nm = cube.wavelengths_nm;
    out.data.resize(static_cast<std::size_t>(out_w) * out_h * cube.bands);
    for (int k = 0; k < cube.bands; ++k)
        for (int y = 0; y < out_h; ++y) {
            const int sy = static_cast<int>(std::clamp<long long>(y0 + y, 0, cube.height - 1));
            for (int x = 0; x < out_w; ++x) {
                const int sx = static_cast<int>(std::clamp<long long>(x0 + x, 0, cube.width - 1));
                out.at(x, y, k) = cube.at(sx, sy, k);
            }
        }
    return out;
}

HyperspectralCube resize_cube(const HyperspectralCube& cube, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) fail("resize_cube: nonpositive output size");
    HyperspectralCube out;
    out.width = out_w;
    out.height = out_h;
    out.bands = cube.bands;
    out.wavelengths_nm = cube.wavelengths_nm;
    out.data.resize(static_cast<std::size_t>(out_w) * out_h * cube.bands);

    const double sx = static_cast<double>(cube.width) / out_w;
    const double sy = static_cast<double>(cube.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, cube.height - 1.0);
        const int y1 = static_cast<int>(fy);
        const int y2 = std::min(y1 + 1, cube.height - 1);
        const double wy = fy - y1;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, cube.width - 1.0);
            const int x1 = static_cast<int>(fx);
            const int x2 = std::min(x1 + 1, cube.width - 1);
            const double wx = fx - x1;
            for (int k = 0; k < cube.bands; ++k) {
                const double top = (1.0 - wx) * cube.at(x1, y1, k) + wx * cube.at(x2, y1, k);
                const double bot = (1.0 - wx) * cube.at(x1, y2, k) + wx * cube.at(x2, y2, k);
                out.at(x, y, k) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

// ---- Synthetic scenes -------------------------------------------------------

void SceneConfig::validate() const {
    if (frames < 1) fail("scene: frame count must be >= 1");
    if (width < 1 || height < 1) fail("scene: canvas must be nonempty");
    if (bands < 2) fail("scene: needs at least 2 bands");
    if (wavelengths_nm.size() != static_cast<std::size_t>(bands))
        fail("scene: wavelength count does not match band count");
    if (background_spectra.empty()) fail("scene: needs at least one background spectrum");
    if (background_block < 1) fail("scene: background_block must be >= 1");
    if (!(noise_sigma >= 0.0)) fail("scene: negative noise sigma");
    if (!illumination.empty() && illumination.size() != static_cast<std::size_t>(frames))
        fail("scene: illumination length does not match frame count");
    auto check_spectrum = [&](const std::vector<double>& s, const std::string& what) {
        if (s.size() != static_cast<std::size_t>(bands))
            fail("scene: " + what + " spectrum length does not match band count");
        for (double v : s)
            if (!(v >= 0.0) || !std::isfinite(v)) fail("scene: " + what + " spectrum not nonnegative");
    };
    for (std::size_t i = 0; i < background_spectra.size(); ++i)
        check_spectrum(background_spectra[i], "background " + std::to_string(i));
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        check_spectrum(o.spectrum, "object " + std::to_string(i));
        if (o.centers.size() != static_cast<std::size_t>(frames) ||
            o.sizes.size() != static_cast<std::size_t>(frames))
            fail("scene: object " + std::to_string(i) + " trajectory length does not match frames");
        for (const auto& s : o.sizes)
            if (!(s[0] > 0.0) || !(s[1] > 0.0))
                fail("scene: object " + std::to_string(i) + " has nonpositive size");
    }
}

namespace {

bool object_covers(const SceneObject& obj, int t, double px, double py) {
    const double cx = obj.centers[t][0];
    const double cy = obj.centers[t][1];
    const double hw = obj.sizes[t][0] / 2.0;
    const double hh = obj.sizes[t][1] / 2.0;
    if (obj.shape == SceneObject::Shape::Rect)
        return px >= cx - hw && px < cx + hw && py >= cy - hh && py < cy + hh;
    const double dx = (px - cx) / hw;
    const double dy = (py - cy) / hh;
    return dx * dx + dy * dy <= 1.0;
}

}  // namespace

std::pair<HyperspectralSequence, std::vector<BoundingBox>>
synth_scene(const SceneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);

    for (int t = 0; t < cfg.frames; ++t)
        for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
            const auto& o = cfg.objects[i];
            const double x0 = o.centers[t][0] - o.sizes[t][0] / 2.0;
            const double y0 = o.centers[t][1] - o.sizes[t][1] / 2.0;
            if (x0 >= cfg.width || x0 + o.sizes[t][0] <= 0.0 || y0 >= cfg.height ||
                y0 + o.sizes[t][1] <= 0.0)
                fail("scene: object " + std::to_string(i) + " leaves the canvas at frame " +
                     std::to_string(t));
        }

    HyperspectralSequence seq;
    seq.frame_rate = cfg.frame_rate;
    const std::size_t plane = static_cast<std::size_t>(cfg.width) * cfg.height;
    const int nbg = static_cast<int>(cfg.background_spectra.size());

    // Material index per pixel, recomputed per frame; noise drawn in storage order.
    std::vector<const std::vector<double>*> material(plane);
    for (int t = 0; t < cfg.frames; ++t) {
        const double illum = cfg.illumination.empty() ? 1.0 : cfg.illumination[t];
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                const std::vector<double>* spec = nullptr;
                for (auto it = cfg.objects.rbegin(); it != cfg.objects.rend(); ++it)
                    if (object_covers(*it, t, px, py)) {
                        spec = &it->spectrum;
                        break;
                    }
                if (!spec) {
                    const int tile = nbg == 1 ? 0
                                              : ((x / cfg.background_block) +
                                                 (y / cfg.background_block)) % nbg;
                    spec = &cfg.background_spectra[tile];
                }
                material[static_cast<std::size_t>(y) * cfg.width + x] = spec;
            }

        HyperspectralCube cube;
        cube.width = cfg.width;
        cube.height = cfg.height;
        cube.bands = cfg.bands;
        cube.wavelengths_nm = cfg.wavelengths_nm;
        cube.data.resize(plane * cfg.bands);
        for (int k = 0; k < cfg.bands; ++k)
            for (std::size_t p = 0; p < plane; ++p) {
                double v = (*material[p])[k] * illum;
                if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * rng.gaussian();
                cube.data[static_cast<std::size_t>(k) * plane + p] =
                    static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        seq.frames.push_back(std::move(cube));
    }

    std::vector<BoundingBox> gt;
    if (!cfg.objects.empty()) {
        const auto& target = cfg.objects.front();
        for (int t = 0; t < cfg.frames; ++t)
            gt.push_back(BoundingBox{target.centers[t][0], target.centers[t][1],
                                     target.sizes[t][0], target.sizes[t][1]});
    }
    return {std::move(seq), std::move(gt)};
}

HyperspectralCube band_mean_cube(const HyperspectralCube& cube) {
    HyperspectralCube out = cube;
    const std::size_t plane = static_cast<std::size_t>(cube.width) * cube.height;
    for (std::size_t p = 0; p < plane; ++p) {
        double sum = 0.0;
        for (int k = 0; k < cube.bands; ++k) sum += cube.data[k * plane + p];
        const float mean = static_cast<float>(sum / cube.bands);
        for (int k = 0; k < cube.bands; ++k) out.data[k * plane + p] = mean;
    }
    return out;
}

double spectral_angle(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) fail("spectral_angle: size mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) fail("spectral_angle: zero vector");
    return std::acos(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0));
}

}  // namespace hypertrack
