// hypertrack CLI: synth, build-library, track, eval, features, unmix, colorize.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypertrack/colorize.hpp"
#include "hypertrack/core.hpp"
#include "hypertrack/eval.hpp"
#include "hypertrack/features.hpp"
#include "hypertrack/tracker.hpp"
#include "hypertrack/unmixing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hypertrack;

namespace {

constexpr int kExitError = 1;
constexpr int kExitMissingInput = 2;
constexpr int kExitDataMismatch = 3;

struct DataMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (const auto& item : j.items())
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw std::runtime_error("unknown key '" + item.key() + "' in " + where);
}

int max_threads() {
    if (const char* env = std::getenv("HYPERTRACK_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

BoundingBox parse_box(const std::string& text) {
    double x, y, w, h;
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    if (!(is >> x >> y >> w >> h) || !(w > 0) || !(h > 0))
        throw std::runtime_error("cannot parse box '" + text + "' (expected x,y,w,h)");
    return BoundingBox::from_topleft(x, y, w, h);
}

json config_echo(const TrackerConfig& c) {
    json j;
    j["sshmg"] = {{"z", c.sshmg.z},
                  {"n_theta", c.sshmg.n_theta},
                  {"n_phi", c.sshmg.n_phi},
                  {"alpha", c.sshmg.alpha}};
    j["tracker"] = {{"eta", c.eta},
                    {"filter_lambda", c.filter_lambda},
                    {"scales", c.scales},
                    {"padding", c.padding},
                    {"admm_iters", c.admm_iters}};
    json unmix = {{"mu", c.unmix_admm.mu},
                  {"max_iters", c.unmix_admm.max_iters},
                  {"tol", c.unmix_admm.tol}};
    unmix["unmix_lambda"] = c.unmix_lambda < 0 ? json("auto") : json(c.unmix_lambda);
    unmix["R"] = c.endmembers == 0 ? json("auto") : json(c.endmembers);
    j["unmixing"] = unmix;
    j["features"] = json::array();
    if (c.use_sshmg) j["features"].push_back("sshmg");
    if (c.use_abundance) j["features"].push_back("abundance");
    j["band_mean_input"] = c.band_mean_input;
    return j;
}

void apply_config_file(TrackerConfig& c, const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingInput("config file not found: " + path.string());
    json j;
    is >> j;
    check_keys(j, {"sshmg", "tracker", "unmixing"}, "config");
    if (j.contains("sshmg")) {
        const json& s = j["sshmg"];
        check_keys(s, {"z", "n_theta", "n_phi", "alpha"}, "config.sshmg");
        if (s.contains("z")) c.sshmg.z = s["z"].get<int>();
        if (s.contains("n_theta")) c.sshmg.n_theta = s["n_theta"].get<int>();
        if (s.contains("n_phi")) c.sshmg.n_phi = s["n_phi"].get<int>();
        if (s.contains("alpha")) c.sshmg.alpha = s["alpha"].get<double>();
    }
    if (j.contains("tracker")) {
        const json& t = j["tracker"];
        check_keys(t, {"eta", "filter_lambda", "scales", "padding", "admm_iters"},
                   "config.tracker");
        if (t.contains("eta")) c.eta = t["eta"].get<double>();
        if (t.contains("filter_lambda")) c.filter_lambda = t["filter_lambda"].get<double>();
        if (t.contains("scales")) c.scales = t["scales"].get<std::vector<double>>();
        if (t.contains("padding")) c.padding = t["padding"].get<double>();
        if (t.contains("admm_iters")) c.admm_iters = t["admm_iters"].get<int>();
    }
    if (j.contains("unmixing")) {
        const json& u = j["unmixing"];
        check_keys(u, {"unmix_lambda", "mu", "max_iters", "tol", "R"}, "config.unmixing");
        if (u.contains("unmix_lambda"))
            c.unmix_lambda = u["unmix_lambda"].is_string() ? -1.0
                                                           : u["unmix_lambda"].get<double>();
        if (u.contains("mu")) c.unmix_admm.mu = u["mu"].get<double>();
        if (u.contains("max_iters")) c.unmix_admm.max_iters = u["max_iters"].get<int>();
        if (u.contains("tol")) c.unmix_admm.tol = u["tol"].get<double>();
        if (u.contains("R")) c.endmembers = u["R"].is_string() ? 0 : u["R"].get<int>();
    }
}

// ---- synth presets -----------------------------------------------------------

std::vector<double> default_wavelengths(int bands) {
    std::vector<double> wl(bands);
    for (int k = 0; k < bands; ++k) wl[k] = 470.0 + 150.0 * k / std::max(1, bands - 1);
    return wl;
}

std::vector<double> smooth_spectrum(int bands, double base, double amp, double phase) {
    std::vector<double> s(bands);
    for (int k = 0; k < bands; ++k)
        s[k] = std::clamp(
            base + amp * std::sin(2.0 * std::numbers::pi * k / bands + phase), 0.0, 1.0);
    return s;
}

SceneObject linear_object(int frames, std::array<double, 2> start, std::array<double, 2> vel,
                          std::array<double, 2> size, std::vector<double> spectrum,
                          SceneObject::Shape shape) {
    SceneObject o;
    o.shape = shape;
    o.spectrum = std::move(spectrum);
    for (int t = 0; t < frames; ++t) {
        o.centers.push_back({start[0] + vel[0] * t, start[1] + vel[1] * t});
        o.sizes.push_back(size);
    }
    return o;
}

SceneConfig preset_scene(const std::string& name) {
    SceneConfig cfg;
    cfg.width = 100;
    cfg.height = 100;
    cfg.bands = 16;
    cfg.frames = 30;
    cfg.wavelengths_nm = default_wavelengths(cfg.bands);

    if (name == "linear") {
        cfg.noise_sigma = 0.01;
        cfg.background_spectra = {smooth_spectrum(cfg.bands, 0.35, 0.10, 0.0)};
        cfg.objects.push_back(linear_object(cfg.frames, {30, 40}, {1.5, 1.0}, {20, 20},
                                            smooth_spectrum(cfg.bands, 0.55, 0.25, 2.0),
                                            SceneObject::Shape::Ellipse));
    } else if (name == "same-color-clutter") {
        cfg.noise_sigma = 0.005;
        // target and background share the band mean but differ in spectral shape
        std::vector<double> bg(cfg.bands), obj(cfg.bands);
        for (int k = 0; k < cfg.bands; ++k) {
            const double s = std::sin(2.0 * std::numbers::pi * k / cfg.bands);
            bg[k] = 0.4 - 0.15 * s;
            obj[k] = 0.4 + 0.15 * s;
        }
        cfg.background_spectra = {bg};
        cfg.objects.push_back(linear_object(cfg.frames, {25, 30}, {2.0, 1.5}, {18, 18}, obj,
                                            SceneObject::Shape::Ellipse));
    } else if (name == "rotation") {
        cfg.noise_sigma = 0.01;
        cfg.background_spectra = {smooth_spectrum(cfg.bands, 0.30, 0.08, 1.0)};
        SceneObject o;
        o.shape = SceneObject::Shape::Ellipse;
        o.spectrum = smooth_spectrum(cfg.bands, 0.60, 0.20, 4.0);
        for (int t = 0; t < cfg.frames; ++t) {
            // bounding box of a bar rotating in the image plane
            const double a = std::numbers::pi / 2.0 * t / (cfg.frames - 1);
            const double w = 28.0 * std::abs(std::cos(a)) + 12.0 * std::abs(std::sin(a));
            const double h = 28.0 * std::abs(std::sin(a)) + 12.0 * std::abs(std::cos(a));
            o.centers.push_back({50.0 + 0.3 * t, 50.0});
            o.sizes.push_back({w, h});
        }
        cfg.objects.push_back(std::move(o));
    } else {
        throw std::runtime_error("unknown preset '" + name +
                                 "' (expected linear, same-color-clutter or rotation)");
    }
    return cfg;
}

SceneConfig scene_from_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingInput("scene config not found: " + path.string());
    json j;
    is >> j;
    check_keys(j,
               {"frames", "width", "height", "bands", "wavelengths_nm", "noise_sigma",
                "background_block", "frame_rate", "illumination", "background_spectra",
                "objects"},
               "scene");
    SceneConfig cfg;
    cfg.frames = j.at("frames").get<int>();
    cfg.width = j.at("width").get<int>();
    cfg.height = j.at("height").get<int>();
    cfg.bands = j.at("bands").get<int>();
    cfg.wavelengths_nm = j.contains("wavelengths_nm")
                             ? j["wavelengths_nm"].get<std::vector<double>>()
                             : default_wavelengths(cfg.bands);
    if (j.contains("noise_sigma")) cfg.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("background_block")) cfg.background_block = j["background_block"].get<int>();
    if (j.contains("frame_rate")) cfg.frame_rate = j["frame_rate"].get<double>();
    if (j.contains("illumination"))
        cfg.illumination = j["illumination"].get<std::vector<double>>();
    cfg.background_spectra = j.at("background_spectra").get<std::vector<std::vector<double>>>();
    for (const auto& jo : j.at("objects")) {
        check_keys(jo, {"shape", "spectrum", "centers", "sizes"}, "scene.objects[]");
        SceneObject o;
        if (jo.contains("shape"))
            o.shape = jo["shape"].get<std::string>() == "ellipse" ? SceneObject::Shape::Ellipse
                                                                  : SceneObject::Shape::Rect;
        o.spectrum = jo.at("spectrum").get<std::vector<double>>();
        for (const auto& c : jo.at("centers")) o.centers.push_back({c[0], c[1]});
        for (const auto& s : jo.at("sizes")) o.sizes.push_back({s[0], s[1]});
        cfg.objects.push_back(std::move(o));
    }
    return cfg;
}

// ---- subcommands ---------------------------------------------------------------

int cmd_synth(const std::string& preset, const std::string& scene_file, std::uint64_t seed,
              const fs::path& out) {
    SceneConfig cfg;
    if (!scene_file.empty())
        cfg = scene_from_json(scene_file);
    else
        cfg = preset_scene(preset.empty() ? "linear" : preset);

    auto [seq, gt] = synth_scene(cfg, seed);
    fs::create_directories(out);
    write_sequence(seq, out);
    write_boxes(gt, out / "groundtruth_rect.txt");

    json echo;
    echo["preset"] = preset.empty() ? (scene_file.empty() ? "linear" : "custom") : preset;
    echo["seed"] = seed;
    echo["frames"] = cfg.frames;
    echo["size"] = {cfg.width, cfg.height, cfg.bands};
    echo["noise_sigma"] = cfg.noise_sigma;
    std::ofstream os(out / "scene.json");
    os << echo.dump(2) << "\n";
    std::cout << "wrote " << cfg.frames << " frames to " << out.string() << "\n";
    return 0;
}

int cmd_build_library(const fs::path& seq_dir, int per_cube_R, int atoms, int stride,
                      bool band_mean, std::uint64_t seed, const fs::path& out) {
    if (!fs::exists(seq_dir)) throw MissingInput("sequence not found: " + seq_dir.string());
    const HyperspectralSequence seq = load_sequence(seq_dir);
    std::vector<HyperspectralCube> cubes;
    for (std::size_t i = 0; i < seq.frames.size(); i += stride)
        cubes.push_back(band_mean ? band_mean_cube(seq.frames[i]) : seq.frames[i]);
    const SpectralLibrary lib = build_library(cubes, per_cube_R, atoms, seed);
    save_library(lib, out);
    std::cout << "library with " << lib.size() << " atoms -> " << out.string() << "\n";
    return 0;
}

int cmd_track(const fs::path& seq_dir, const std::string& library_file,
              const std::string& init_text, const std::string& gt_file, const fs::path& out,
              TrackerConfig cfg) {
    if (!fs::exists(seq_dir)) throw MissingInput("sequence not found: " + seq_dir.string());
    const HyperspectralSequence seq = load_sequence(seq_dir);

    BoundingBox init;
    if (!init_text.empty()) {
        init = parse_box(init_text);
    } else if (!gt_file.empty()) {
        const auto gt = load_groundtruth(gt_file);
        if (gt.empty()) throw DataMismatch("ground truth file is empty: " + gt_file);
        init = gt.front();
    } else {
        throw std::runtime_error("track needs --init or --gt");
    }

    std::optional<SpectralLibrary> lib;
    if (cfg.use_abundance) {
        if (library_file.empty())
            throw MissingInput("track needs --library for abundance features");
        if (!fs::exists(library_file))
            throw MissingInput("library file not found: " + library_file);
        lib = load_library(library_file);
    }

    const TrackResult res = track(seq, init, lib ? &*lib : nullptr, cfg);

    fs::create_directories(out);
    write_boxes(res.trajectory, out / "results.txt");
    json meta;
    meta["config"] = config_echo(cfg);
    meta["sequence"] = seq_dir.string();
    meta["frames"] = res.trajectory.size();
    meta["seconds"] = res.seconds;
    meta["weights"] = res.weights;
    std::ofstream os(out / "run.json");
    os << meta.dump(2) << "\n";
    std::cout << "tracked " << res.trajectory.size() << " frames in " << res.seconds << " s -> "
              << (out / "results.txt").string() << "\n";
    return 0;
}

SequenceEval eval_one(const std::string& name, const fs::path& results, const fs::path& gt_file,
                      const std::vector<std::string>& attributes) {
    if (!fs::exists(results)) throw MissingInput("results not found: " + results.string());
    if (!fs::exists(gt_file)) throw MissingInput("ground truth not found: " + gt_file.string());
    const auto traj = load_groundtruth(results);  // same x,y,w,h format
    const auto gt = load_groundtruth(gt_file);
    if (traj.empty()) throw DataMismatch("results file is empty: " + results.string());
    if (traj.size() != gt.size())
        throw DataMismatch("results/ground-truth length mismatch for " + name + " (" +
                           std::to_string(traj.size()) + " vs " + std::to_string(gt.size()) +
                           ")");
    return evaluate_sequence(name, traj, gt, attributes);
}

int cmd_eval(const std::string& results, const std::string& gt_file,
             const std::string& manifest, const fs::path& out, int jobs) {
    std::vector<SequenceEval> evals;
    if (!manifest.empty()) {
        std::ifstream is(manifest);
        if (!is) throw MissingInput("manifest not found: " + manifest);
        json j;
        is >> j;
        struct Item {
            std::string name, results, gt;
            std::vector<std::string> attributes;
        };
        std::vector<Item> items;
        for (const auto& e : j.at("sequences")) {
            check_keys(e, {"name", "results", "groundtruth", "attributes"},
                       "manifest.sequences[]");
            Item it;
            it.name = e.at("name").get<std::string>();
            it.results = e.at("results").get<std::string>();
            it.gt = e.at("groundtruth").get<std::string>();
            if (e.contains("attributes"))
                it.attributes = e["attributes"].get<std::vector<std::string>>();
            items.push_back(std::move(it));
        }
        jobs = std::min(jobs > 0 ? jobs : 1, max_threads());
        if (jobs > 1) {
            std::vector<std::future<SequenceEval>> futures;
            for (const auto& it : items)
                futures.push_back(std::async(std::launch::async, [&it] {
                    return eval_one(it.name, it.results, it.gt, it.attributes);
                }));
            for (auto& f : futures) evals.push_back(f.get());
        } else {
            for (const auto& it : items)
                evals.push_back(eval_one(it.name, it.results, it.gt, it.attributes));
        }
    } else {
        if (results.empty() || gt_file.empty())
            throw std::runtime_error("eval needs --results and --gt, or --manifest");
        evals.push_back(eval_one("sequence", results, gt_file, {}));
    }

    const EvalReport report = aggregate(std::move(evals));
    fs::create_directories(out);
    write_report(report, out / "report.json");
    write_curves_csv(report, out / "curves.csv");
    std::cout << "AUC " << report.success.auc << ", precision@20 " << report.precision.at_20
              << " -> " << (out / "report.json").string() << "\n";
    return 0;
}

int cmd_features(const fs::path& seq_dir, int frame, const SshmgParams& params,
                 const fs::path& out) {
    if (!fs::exists(seq_dir)) throw MissingInput("sequence not found: " + seq_dir.string());
    const HyperspectralSequence seq = load_sequence(seq_dir);
    if (frame < 0 || frame >= static_cast<int>(seq.frames.size()))
        throw DataMismatch("frame index out of range");
    const FeatureMap map = sshmg(seq.frames[frame], params);

    json j;
    j["cells_x"] = map.cells_x;
    j["cells_y"] = map.cells_y;
    j["channels"] = map.channels;
    std::vector<double> row_major;
    row_major.reserve(map.values.size());
    for (int y = 0; y < map.cells_y; ++y)
        for (int x = 0; x < map.cells_x; ++x)
            for (int c = 0; c < map.channels; ++c) row_major.push_back(map.at(x, y, c));
    j["data"] = row_major;
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out.string());
    os << j.dump() << "\n";
    std::cout << "feature map " << map.cells_x << "x" << map.cells_y << "x" << map.channels
              << " -> " << out.string() << "\n";
    return 0;
}

int cmd_unmix(const fs::path& seq_dir, int frame, const std::string& box_text,
              const std::string& library_file, int endmembers, int cell, bool pgm,
              const AdmmOptions& admm, double lambda, const fs::path& out) {
    if (!fs::exists(seq_dir)) throw MissingInput("sequence not found: " + seq_dir.string());
    if (!fs::exists(library_file))
        throw MissingInput("library file not found: " + library_file);
    const HyperspectralSequence seq = load_sequence(seq_dir);
    if (frame < 0 || frame >= static_cast<int>(seq.frames.size()))
        throw DataMismatch("frame index out of range");
    const SpectralLibrary lib = load_library(library_file);
    const HyperspectralCube& cube = seq.frames[frame];

    const HyperspectralCube region =
        box_text.empty() ? cube : crop_cube(cube, parse_box(box_text), 1.0);
    const Eigen::MatrixXd X = cube_to_matrix(region);
    const double lam = lambda >= 0 ? lambda : auto_unmix_lambda(X, lib);
    const ClsunsalResult cls = clsunsal(X, lib, lam, admm);
    int R = endmembers > 0 ? endmembers : hysime(X).r;
    R = std::clamp(R, 1, lib.size());
    const EndmemberSet em = select_endmembers(cls.S, lib, R);

    const FeatureMap map = abundance_feature_map(cube, em, cell);
    fs::create_directories(out);
    json j;
    j["cells_x"] = map.cells_x;
    j["cells_y"] = map.cells_y;
    j["channels"] = map.channels;
    j["atoms"] = em.source_indices;
    j["converged"] = cls.converged;
    std::vector<double> row_major;
    row_major.reserve(map.values.size());
    for (int y = 0; y < map.cells_y; ++y)
        for (int x = 0; x < map.cells_x; ++x)
            for (int c = 0; c < map.channels; ++c) row_major.push_back(map.at(x, y, c));
    j["data"] = row_major;
    std::ofstream os(out / "abundances.json");
    os << j.dump() << "\n";
    if (pgm) {
        char name[32];
        for (int c = 0; c < map.channels; ++c) {
            std::snprintf(name, sizeof(name), "abundance_%02d.pgm", c);
            write_pgm_channel(map, c, out / name);
        }
    }
    std::cout << R << " endmembers, map " << map.cells_x << "x" << map.cells_y << " -> "
              << out.string() << "\n";
    return 0;
}

int cmd_colorize(const fs::path& seq_dir, int frame, const std::string& cmf_file,
                 const std::string& dark_dir, const std::string& correction_file,
                 const fs::path& out) {
    if (!fs::exists(seq_dir)) throw MissingInput("sequence not found: " + seq_dir.string());
    if (!fs::exists(cmf_file)) throw MissingInput("CMF table not found: " + cmf_file);
    const HyperspectralSequence seq = load_sequence(seq_dir);
    const RawCmfTable raw = load_cmf_table(cmf_file);
    const CmfTable cmfs = resample_cmfs(raw, seq.frames.front().wavelengths_nm);

    std::optional<HyperspectralCube> dark;
    if (!dark_dir.empty()) {
        if (!fs::exists(dark_dir)) throw MissingInput("dark sequence not found: " + dark_dir);
        dark = load_sequence(dark_dir).frames.front();
    }
    std::optional<CorrectionMatrix> correction;
    if (!correction_file.empty()) {
        std::ifstream is(correction_file);
        if (!is) throw MissingInput("correction matrix not found: " + correction_file);
        json j;
        is >> j;
        const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
        CorrectionMatrix C(rows.size(), rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows.size())
                throw std::runtime_error("correction matrix is not square");
            for (std::size_t c = 0; c < rows[r].size(); ++c) C(r, c) = rows[r][c];
        }
        correction = C;
    }

    fs::create_directories(out);
    const int lo = frame >= 0 ? frame : 0;
    const int hi = frame >= 0 ? frame : static_cast<int>(seq.frames.size()) - 1;
    if (lo >= static_cast<int>(seq.frames.size())) throw DataMismatch("frame index out of range");
    char name[32];
    for (int i = lo; i <= hi; ++i) {
        HyperspectralCube cube = seq.frames[i];
        if (dark) cube = dark_calibrate(cube, *dark);
        if (correction) cube = spectral_correct(cube, *correction);
        const RgbImage img = to_false_color(cube, cmfs);
        std::snprintf(name, sizeof(name), "%05d.ppm", i);
        write_ppm(img, out / name);
    }
    std::cout << "wrote " << (hi - lo + 1) << " frame(s) to " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Material-based hyperspectral video tracking"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic hyperspectral scene");
    std::string synth_preset, synth_config;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--preset", synth_preset,
                      "Scene preset: linear, same-color-clutter, rotation");
    synth->add_option("--scene", synth_config, "Scene config JSON (overrides --preset)");
    synth->add_option("--seed", synth_seed, "RNG seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output sequence directory")->required();

    // build-library
    auto* bl = app.add_subcommand("build-library", "Build a spectral library from a sequence");
    std::string bl_seq, bl_out;
    int bl_r = 3, bl_atoms = 8, bl_stride = 10;
    bool bl_band_mean = false;
    std::uint64_t bl_seed = 0;
    bl->add_option("--seq", bl_seq, "Sequence directory")->required();
    bl->add_option("--per-cube-r", bl_r, "Endmembers extracted per cube")->capture_default_str();
    bl->add_option("--atoms", bl_atoms, "Library atom count (k-means clusters)")
        ->capture_default_str();
    bl->add_option("--frame-stride", bl_stride, "Use every Nth frame")->capture_default_str();
    bl->add_flag("--band-mean", bl_band_mean, "Replace spectra by their band mean first");
    bl->add_option("--seed", bl_seed, "RNG seed")->capture_default_str();
    bl->add_option("--out", bl_out, "Output library JSON")->required();

    // track
    auto* tr = app.add_subcommand("track", "Track a target through a sequence");
    std::string tr_seq, tr_lib, tr_init, tr_gt, tr_out, tr_config, tr_feature = "mht";
    std::uint64_t tr_seed = 0;
    TrackerConfig tcfg;
    tr->add_option("--seq", tr_seq, "Sequence directory")->required();
    tr->add_option("--library", tr_lib, "Spectral library JSON");
    tr->add_option("--init", tr_init, "Initial box x,y,w,h (top-left)");
    tr->add_option("--gt", tr_gt, "Ground truth file (frame 0 is used for init)");
    tr->add_option("--out", tr_out, "Output directory")->required();
    tr->add_option("--config", tr_config, "Config JSON (flags win over file values)");
    tr->add_option("--feature", tr_feature, "Feature mode: mht, sshmg-only, abundance-only")
        ->capture_default_str();
    bool tr_band_mean = false;
    tr->add_flag("--band-mean", tr_band_mean, "Grayscale ablation: band-mean input");
    tr->add_option("--seed", tr_seed, "RNG seed (tracking itself is deterministic)")
        ->capture_default_str();
    double tr_eta = -1, tr_lambda = -1, tr_padding = -1, tr_alpha = -1, tr_unmix_lambda = -2;
    int tr_admm = -1, tr_z = -1, tr_ntheta = -1, tr_nphi = -1, tr_R = -1;
    std::vector<double> tr_scales;
    tr->add_option("--eta", tr_eta, "Learning rate (default 0.0023)");
    tr->add_option("--filter-lambda", tr_lambda, "Filter ridge weight (default 0.01)");
    tr->add_option("--padding", tr_padding, "Search window linear pad (default sqrt(5))");
    tr->add_option("--admm-iters", tr_admm, "Filter ADMM iterations per frame (default 2)");
    tr->add_option("--scales", tr_scales, "Detection scale factors (default 0.985 1 1.015)");
    tr->add_option("--z", tr_z, "SSHMG cube edge (default 4)");
    tr->add_option("--n-theta", tr_ntheta, "SSHMG spatial bins (default 9)");
    tr->add_option("--n-phi", tr_nphi, "SSHMG spectral bins (default 4)");
    tr->add_option("--alpha", tr_alpha, "SSHMG truncation (default 0.2)");
    tr->add_option("--unmix-lambda", tr_unmix_lambda,
                   "Group-sparsity weight; negative = auto (default auto)");
    tr->add_option("--endmembers", tr_R, "Endmember count; 0 = HySime (default 0)");

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate tracking results against ground truth");
    std::string ev_results, ev_gt, ev_manifest, ev_out;
    int ev_jobs = 1;
    ev->add_option("--results", ev_results, "results.txt from track");
    ev->add_option("--gt", ev_gt, "Ground truth file");
    ev->add_option("--manifest", ev_manifest, "Dataset manifest JSON");
    ev->add_option("--jobs", ev_jobs, "Parallel sequences (capped by HYPERTRACK_THREADS)")
        ->capture_default_str();
    ev->add_option("--out", ev_out, "Output directory")->required();

    // features
    auto* fe = app.add_subcommand("features", "Dump an SSHMG feature map as JSON");
    std::string fe_seq, fe_out;
    int fe_frame = 0;
    SshmgParams fe_params;
    fe->add_option("--seq", fe_seq, "Sequence directory")->required();
    fe->add_option("--frame", fe_frame, "Frame index")->capture_default_str();
    fe->add_option("--z", fe_params.z, "Cube edge")->capture_default_str();
    fe->add_option("--n-theta", fe_params.n_theta, "Spatial bins")->capture_default_str();
    fe->add_option("--n-phi", fe_params.n_phi, "Spectral bins")->capture_default_str();
    fe->add_option("--alpha", fe_params.alpha, "Truncation threshold")->capture_default_str();
    fe->add_option("--out", fe_out, "Output JSON file")->required();

    // unmix
    auto* un = app.add_subcommand("unmix", "Per-material abundance maps for one frame");
    std::string un_seq, un_box, un_lib, un_out;
    int un_frame = 0, un_R = 0, un_cell = 1;
    bool un_pgm = false;
    AdmmOptions un_admm;
    double un_lambda = -1;
    un->add_option("--seq", un_seq, "Sequence directory")->required();
    un->add_option("--frame", un_frame, "Frame index")->capture_default_str();
    un->add_option("--box", un_box, "Target box x,y,w,h for endmember selection");
    un->add_option("--library", un_lib, "Spectral library JSON")->required();
    un->add_option("--endmembers", un_R, "Endmember count; 0 = HySime")->capture_default_str();
    un->add_option("--cell", un_cell, "Averaging cell size in pixels")->capture_default_str();
    un->add_option("--unmix-lambda", un_lambda, "Group-sparsity weight; negative = auto");
    un->add_flag("--pgm", un_pgm, "Also write per-channel PGM images");
    un->add_option("--out", un_out, "Output directory")->required();

    // colorize
    auto* co = app.add_subcommand("colorize", "False-color PPM rendering of a sequence");
    std::string co_seq, co_cmf = "data/cie_xyz_cmf_1nm.txt", co_dark, co_corr, co_out;
    int co_frame = -1;
    co->add_option("--seq", co_seq, "Sequence directory")->required();
    co->add_option("--frame", co_frame, "Single frame index (default: all frames)");
    co->add_option("--cmf", co_cmf, "CMF table file")->capture_default_str();
    co->add_option("--dark", co_dark, "Dark-frame sequence directory");
    co->add_option("--correction", co_corr, "Spectral correction matrix JSON");
    co->add_option("--out", co_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_preset, synth_config, synth_seed, synth_out);
        if (bl->parsed())
            return cmd_build_library(bl_seq, bl_r, bl_atoms, bl_stride, bl_band_mean, bl_seed,
                                     bl_out);
        if (tr->parsed()) {
            if (!tr_config.empty()) apply_config_file(tcfg, tr_config);
            if (tr_eta >= 0) tcfg.eta = tr_eta;
            if (tr_lambda >= 0) tcfg.filter_lambda = tr_lambda;
            if (tr_padding >= 0) tcfg.padding = tr_padding;
            if (tr_admm >= 0) tcfg.admm_iters = tr_admm;
            if (!tr_scales.empty()) tcfg.scales = tr_scales;
            if (tr_z >= 0) tcfg.sshmg.z = tr_z;
            if (tr_ntheta >= 0) tcfg.sshmg.n_theta = tr_ntheta;
            if (tr_nphi >= 0) tcfg.sshmg.n_phi = tr_nphi;
            if (tr_alpha >= 0) tcfg.sshmg.alpha = tr_alpha;
            if (tr_unmix_lambda >= -1) tcfg.unmix_lambda = tr_unmix_lambda;
            if (tr_R >= 0) tcfg.endmembers = tr_R;
            tcfg.band_mean_input = tr_band_mean;
            if (tr_feature == "sshmg-only") {
                tcfg.use_sshmg = true;
                tcfg.use_abundance = false;
            } else if (tr_feature == "abundance-only") {
                tcfg.use_sshmg = false;
                tcfg.use_abundance = true;
            } else if (tr_feature != "mht") {
                throw std::runtime_error("unknown --feature mode '" + tr_feature + "'");
            }
            return cmd_track(tr_seq, tr_lib, tr_init, tr_gt, tr_out, tcfg);
        }
        if (ev->parsed()) return cmd_eval(ev_results, ev_gt, ev_manifest, ev_out, ev_jobs);
        if (fe->parsed()) return cmd_features(fe_seq, fe_frame, fe_params, fe_out);
        if (un->parsed())
            return cmd_unmix(un_seq, un_frame, un_box, un_lib, un_R, un_cell, un_pgm, un_admm,
                             un_lambda, un_out);
        if (co->parsed()) return cmd_colorize(co_seq, co_frame, co_cmf, co_dark, co_corr, co_out);
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const DataMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataMismatch;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return 0;
}
