#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hypertrack/colorize.hpp"
#include "hypertrack/core.hpp"
#include "hypertrack/eval.hpp"
#include "hypertrack/features.hpp"
#include "hypertrack/tracker.hpp"
#include "hypertrack/unmixing.hpp"

namespace py = pybind11;
using namespace hypertrack;

namespace {

py::array_t<float> cube_to_numpy(const HyperspectralCube& cube) {
    py::array_t<float> out({cube.bands, cube.height, cube.width});
    std::copy(cube.data.begin(), cube.data.end(), out.mutable_data());
    return out;
}

HyperspectralCube cube_from_numpy(py::array_t<float, py::array::c_style | py::array::forcecast> a,
                                  std::vector<double> wavelengths) {
    if (a.ndim() != 3) throw std::runtime_error("expected a (bands, height, width) array");
    HyperspectralCube cube;
    cube.bands = static_cast<int>(a.shape(0));
    cube.height = static_cast<int>(a.shape(1));
    cube.width = static_cast<int>(a.shape(2));
    if (wavelengths.empty()) {
        wavelengths.resize(cube.bands);
        for (int k = 0; k < cube.bands; ++k) wavelengths[k] = k + 1.0;
    }
    cube.wavelengths_nm = std::move(wavelengths);
    cube.data.assign(a.data(), a.data() + a.size());
    cube.validate();
    return cube;
}

py::array_t<double> map_to_numpy(const FeatureMap& map) {
    py::array_t<double> out({map.channels, map.cells_y, map.cells_x});
    std::copy(map.values.begin(), map.values.end(), out.mutable_data());
    return out;
}

py::array_t<double> boxes_to_numpy(const Trajectory& boxes) {
    py::array_t<double> out({static_cast<py::ssize_t>(boxes.size()), py::ssize_t(4)});
    auto r = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < r.shape(0); ++i) {
        r(i, 0) = boxes[i].x();
        r(i, 1) = boxes[i].y();
        r(i, 2) = boxes[i].w;
        r(i, 3) = boxes[i].h;
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Material-based hyperspectral video tracking";

    py::class_<BoundingBox>(m, "BoundingBox")
        .def(py::init<>())
        .def(py::init([](double cx, double cy, double w, double h) {
                 return BoundingBox{cx, cy, w, h};
             }),
             py::arg("cx"), py::arg("cy"), py::arg("w"), py::arg("h"))
        .def_static("from_topleft", &BoundingBox::from_topleft, py::arg("x"), py::arg("y"),
                    py::arg("w"), py::arg("h"))
        .def_readwrite("cx", &BoundingBox::cx)
        .def_readwrite("cy", &BoundingBox::cy)
        .def_readwrite("w", &BoundingBox::w)
        .def_readwrite("h", &BoundingBox::h)
        .def_property_readonly("x", &BoundingBox::x)
        .def_property_readonly("y", &BoundingBox::y)
        .def("__repr__", [](const BoundingBox& b) {
            return "BoundingBox(cx=" + std::to_string(b.cx) + ", cy=" + std::to_string(b.cy) +
                   ", w=" + std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")";
        });

    py::class_<HyperspectralCube>(m, "Cube")
        .def(py::init(&cube_from_numpy), py::arg("data"),
             py::arg("wavelengths_nm") = std::vector<double>{})
        .def_readonly("width", &HyperspectralCube::width)
        .def_readonly("height", &HyperspectralCube::height)
        .def_readonly("bands", &HyperspectralCube::bands)
        .def_readonly("wavelengths_nm", &HyperspectralCube::wavelengths_nm)
        .def("to_numpy", &cube_to_numpy);

    py::class_<HyperspectralSequence>(m, "Sequence")
        .def(py::init<>())
        .def_readwrite("frames", &HyperspectralSequence::frames)
        .def_readwrite("frame_rate", &HyperspectralSequence::frame_rate)
        .def("__len__", [](const HyperspectralSequence& s) { return s.frames.size(); });

    m.def("load_sequence", &load_sequence, py::arg("path"));
    m.def("write_sequence", &write_sequence, py::arg("sequence"), py::arg("path"));
    m.def("load_groundtruth", [](const std::filesystem::path& p) {
        return boxes_to_numpy(load_groundtruth(p));
    });
    m.def("crop_cube", &crop_cube, py::arg("cube"), py::arg("box"), py::arg("pad_factor"));
    m.def("band_mean_cube", &band_mean_cube);

    // synthetic scenes
    py::class_<SceneObject> scene_obj(m, "SceneObject");
    py::enum_<SceneObject::Shape>(scene_obj, "Shape")
        .value("Rect", SceneObject::Shape::Rect)
        .value("Ellipse", SceneObject::Shape::Ellipse);
    scene_obj.def(py::init<>())
        .def_readwrite("centers", &SceneObject::centers)
        .def_readwrite("sizes", &SceneObject::sizes)
        .def_readwrite("spectrum", &SceneObject::spectrum)
        .def_readwrite("shape", &SceneObject::shape);

    py::class_<SceneConfig>(m, "SceneConfig")
        .def(py::init<>())
        .def_readwrite("frames", &SceneConfig::frames)
        .def_readwrite("width", &SceneConfig::width)
        .def_readwrite("height", &SceneConfig::height)
        .def_readwrite("bands", &SceneConfig::bands)
        .def_readwrite("wavelengths_nm", &SceneConfig::wavelengths_nm)
        .def_readwrite("objects", &SceneConfig::objects)
        .def_readwrite("background_spectra", &SceneConfig::background_spectra)
        .def_readwrite("background_block", &SceneConfig::background_block)
        .def_readwrite("noise_sigma", &SceneConfig::noise_sigma)
        .def_readwrite("illumination", &SceneConfig::illumination)
        .def_readwrite("frame_rate", &SceneConfig::frame_rate);

    m.def("synth_scene", [](const SceneConfig& cfg, std::uint64_t seed) {
        auto [seq, gt] = synth_scene(cfg, seed);
        return py::make_tuple(std::move(seq), boxes_to_numpy(gt));
    });

    // features
    py::class_<SshmgParams>(m, "SshmgParams")
        .def(py::init<>())
        .def_readwrite("z", &SshmgParams::z)
        .def_readwrite("n_theta", &SshmgParams::n_theta)
        .def_readwrite("n_phi", &SshmgParams::n_phi)
        .def_readwrite("alpha", &SshmgParams::alpha);

    m.def(
        "sshmg",
        [](const HyperspectralCube& cube, const SshmgParams& p) {
            return map_to_numpy(sshmg(cube, p));
        },
        py::arg("cube"), py::arg("params") = SshmgParams{},
        "SSHMG feature map as a (channels, cells_y, cells_x) array");

    // unmixing
    py::class_<SpectralLibrary>(m, "SpectralLibrary")
        .def(py::init([](Eigen::MatrixXd atoms, std::vector<double> wl) {
                 SpectralLibrary lib{std::move(atoms), std::move(wl)};
                 lib.validate();
                 return lib;
             }),
             py::arg("atoms"), py::arg("wavelengths_nm") = std::vector<double>{})
        .def_readonly("atoms", &SpectralLibrary::atoms)
        .def_readonly("wavelengths_nm", &SpectralLibrary::wavelengths_nm);
    m.def("load_library", &load_library);
    m.def("save_library", &save_library);

    py::class_<EndmemberSet>(m, "EndmemberSet")
        .def_readonly("spectra", &EndmemberSet::spectra)
        .def_readonly("source_indices", &EndmemberSet::source_indices);

    m.def("cube_to_matrix", &cube_to_matrix);
    m.def("vca", &vca, py::arg("X"), py::arg("R"), py::arg("seed") = 0);
    m.def("build_library", &build_library, py::arg("cubes"), py::arg("per_cube_R"), py::arg("M"),
          py::arg("seed") = 0);
    m.def(
        "clsunsal",
        [](const Eigen::MatrixXd& X, const SpectralLibrary& A, double lambda, double mu,
           int max_iters, double tol) {
            const ClsunsalResult r = clsunsal(X, A, lambda, AdmmOptions{mu, max_iters, tol});
            return py::make_tuple(r.S, r.converged, r.objective);
        },
        py::arg("X"), py::arg("library"), py::arg("lambda_"), py::arg("mu") = 0.1,
        py::arg("max_iters") = 200, py::arg("tol") = 1e-6);
    m.def("select_endmembers", &select_endmembers, py::arg("S"), py::arg("library"),
          py::arg("R"));
    m.def("hysime", [](const Eigen::MatrixXd& X) {
        const HysimeResult r = hysime(X);
        return py::make_tuple(r.r, r.degenerate);
    });
    m.def("simplex_ls", &simplex_ls, py::arg("E"), py::arg("x"));
    m.def("spu_abundances", [](const Eigen::MatrixXd& X, const EndmemberSet& E) {
        return spu_abundances(X, E).fractions;
    });
    m.def(
        "abundance_feature_map",
        [](const HyperspectralCube& cube, const EndmemberSet& E, int cell) {
            return map_to_numpy(abundance_feature_map(cube, E, cell));
        },
        py::arg("cube"), py::arg("endmembers"), py::arg("cell") = 4);

    // tracking
    py::class_<TrackerConfig>(m, "TrackerConfig")
        .def(py::init<>())
        .def_readwrite("sshmg", &TrackerConfig::sshmg)
        .def_readwrite("eta", &TrackerConfig::eta)
        .def_readwrite("filter_lambda", &TrackerConfig::filter_lambda)
        .def_readwrite("scales", &TrackerConfig::scales)
        .def_readwrite("padding", &TrackerConfig::padding)
        .def_readwrite("admm_iters", &TrackerConfig::admm_iters)
        .def_readwrite("unmix_lambda", &TrackerConfig::unmix_lambda)
        .def_readwrite("endmembers", &TrackerConfig::endmembers)
        .def_readwrite("use_sshmg", &TrackerConfig::use_sshmg)
        .def_readwrite("use_abundance", &TrackerConfig::use_abundance)
        .def_readwrite("band_mean_input", &TrackerConfig::band_mean_input);

    m.def(
        "track",
        [](const HyperspectralSequence& seq, const BoundingBox& init,
           const SpectralLibrary* lib, const TrackerConfig& cfg) {
            const TrackResult r = track(seq, init, lib, cfg);
            py::dict out;
            out["boxes"] = boxes_to_numpy(r.trajectory);
            out["weights"] = r.weights;
            out["seconds"] = r.seconds;
            return out;
        },
        py::arg("sequence"), py::arg("init_box"), py::arg("library") = nullptr,
        py::arg("config") = TrackerConfig{});

    // evaluation
    m.def("iou", &iou);
    m.def("precision_curve", [](const Trajectory& t, const Trajectory& g) {
        const PrecisionCurve c = precision_curve(t, g);
        return py::make_tuple(std::vector<double>(c.values.begin(), c.values.end()), c.at_20);
    });
    m.def("success_curve", [](const Trajectory& t, const Trajectory& g) {
        const SuccessCurve c = success_curve(t, g);
        return py::make_tuple(std::vector<double>(c.values.begin(), c.values.end()), c.auc);
    });

    // colorize
    m.def(
        "to_false_color",
        [](const HyperspectralCube& cube, const std::filesystem::path& cmf_file) {
            const RawCmfTable raw = load_cmf_table(cmf_file);
            const CmfTable cmfs = resample_cmfs(raw, cube.wavelengths_nm);
            const RgbImage img = to_false_color(cube, cmfs);
            py::array_t<float> out({img.height, img.width, 3});
            std::copy(img.data.begin(), img.data.end(), out.mutable_data());
            return out;
        },
        py::arg("cube"), py::arg("cmf_file"));
    m.def("dark_calibrate", &dark_calibrate);
    m.def("spectral_correct", &spectral_correct);
}
