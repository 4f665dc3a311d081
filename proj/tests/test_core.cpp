#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "hypertrack/core.hpp"
#include "oracles.hpp"

using namespace hypertrack;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hypertrack_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

SceneConfig small_scene(int frames) {
    SceneConfig cfg;
    cfg.frames = frames;
    cfg.width = 32;
    cfg.height = 24;
    cfg.bands = 4;
    cfg.wavelengths_nm = {470, 520, 570, 620};
    cfg.background_spectra = {{0.2, 0.3, 0.4, 0.5}};
    SceneObject obj;
    obj.spectrum = {0.8, 0.6, 0.4, 0.2};
    for (int t = 0; t < frames; ++t) {
        obj.centers.push_back({12.0, 12.0});
        obj.sizes.push_back({8.0, 6.0});
    }
    cfg.objects = {obj};
    return cfg;
}

}  // namespace

TEST_CASE("sequence round trip is bit exact") {
    auto [seq, gt] = synth_scene(small_scene(3), 42);
    (void)gt;
    const fs::path dir = temp_dir("roundtrip");
    write_sequence(seq, dir);
    const HyperspectralSequence loaded = load_sequence(dir);

    REQUIRE(loaded.frames.size() == 3);
    CHECK(loaded.frame_rate == seq.frame_rate);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded.frames[i].width == 32);
        CHECK(loaded.frames[i].height == 24);
        CHECK(loaded.frames[i].bands == 4);
        CHECK(loaded.frames[i].wavelengths_nm == seq.frames[i].wavelengths_nm);
        CHECK(loaded.frames[i].data == seq.frames[i].data);  // bit exact
    }
}

TEST_CASE("hsb payload is exactly W*H*K*4 bytes plus the 16-byte header") {
    HyperspectralCube cube;
    cube.width = 512;
    cube.height = 256;
    cube.bands = 16;
    for (int k = 0; k < 16; ++k) cube.wavelengths_nm.push_back(470.0 + 10.0 * k);
    cube.data.assign(static_cast<std::size_t>(512) * 256 * 16, 0.25f);

    HyperspectralSequence seq;
    seq.frames.push_back(cube);
    const fs::path dir = temp_dir("filesize");
    write_sequence(seq, dir);
    CHECK(fs::file_size(dir / "00000.hsb") == 512ull * 256 * 16 * 4 + 16);
}

TEST_CASE("truncated frame is reported with its index") {
    auto [seq, gt] = synth_scene(small_scene(3), 1);
    (void)gt;
    const fs::path dir = temp_dir("truncated");
    write_sequence(seq, dir);
    // chop one value off frame 2
    const fs::path victim = dir / "00002.hsb";
    const auto size = fs::file_size(victim);
    fs::resize_file(victim, size - 4);

    try {
        load_sequence(dir);
        FAIL("expected an error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("frame 2") != std::string::npos);
    }
}

TEST_CASE("missing frame file is reported with its index") {
    auto [seq, gt] = synth_scene(small_scene(2), 1);
    (void)gt;
    const fs::path dir = temp_dir("missing");
    write_sequence(seq, dir);
    fs::remove(dir / "00001.hsb");
    CHECK_THROWS_WITH_AS(load_sequence(dir), doctest::Contains("frame 1"), std::runtime_error);
}

TEST_CASE("empty directory reports no frames found") {
    const fs::path dir = temp_dir("empty");
    CHECK_THROWS_WITH_AS(load_sequence(dir), doctest::Contains("no frames found"),
                         std::runtime_error);
}

TEST_CASE("ground truth parsing") {
    const fs::path dir = temp_dir("gt");

    SUBCASE("top-left is converted to center") {
        std::ofstream(dir / "gt.txt") << "10,20,30,40\n";
        const auto boxes = load_groundtruth(dir / "gt.txt");
        REQUIRE(boxes.size() == 1);
        CHECK(boxes[0].cx == doctest::Approx(25.0));
        CHECK(boxes[0].cy == doctest::Approx(40.0));
        CHECK(boxes[0].w == doctest::Approx(30.0));
        CHECK(boxes[0].h == doctest::Approx(40.0));
    }
    SUBCASE("zero width is a parse error with the line number") {
        std::ofstream(dir / "gt.txt") << "1,1,5,5\n10,20,0,40\n";
        CHECK_THROWS_WITH_AS(load_groundtruth(dir / "gt.txt"), doctest::Contains("line 2"),
                             std::runtime_error);
    }
    SUBCASE("non-numeric is a parse error") {
        std::ofstream(dir / "gt.txt") << "a,b,c,d\n";
        CHECK_THROWS_AS(load_groundtruth(dir / "gt.txt"), std::runtime_error);
    }
    SUBCASE("500 lines give 500 boxes") {
        {
            std::ofstream os(dir / "gt.txt");
            for (int i = 0; i < 500; ++i) os << i << "," << i << ",10,10\n";
        }
        CHECK(load_groundtruth(dir / "gt.txt").size() == 500);
    }
    SUBCASE("write/load round trip") {
        const std::vector<BoundingBox> boxes = {BoundingBox::from_topleft(1.5, 2.25, 10, 12),
                                                BoundingBox::from_topleft(3, 4, 5, 6)};
        write_boxes(boxes, dir / "out.txt");
        const auto back = load_groundtruth(dir / "out.txt");
        REQUIRE(back.size() == 2);
        CHECK(back[0].cx == doctest::Approx(boxes[0].cx));
        CHECK(back[1].h == doctest::Approx(boxes[1].h));
    }
}

TEST_CASE("crop_cube") {
    const HyperspectralCube cube = oracles::random_cube(12, 10, 4, 7);

    SUBCASE("full frame with pad 1 is the identity") {
        const BoundingBox full = BoundingBox::from_topleft(0, 0, 12, 10);
        const HyperspectralCube out = crop_cube(cube, full, 1.0);
        CHECK(out.data == cube.data);
    }
    SUBCASE("corner crop replicates the border") {
        const BoundingBox corner{2.0, 2.0, 4.0, 4.0};
        const HyperspectralCube out = crop_cube(cube, corner, 2.0);
        REQUIRE(out.width == 8);
        REQUIRE(out.height == 8);
        // columns 0,1 and rows 0,1 replicate the frame edge
        for (int k = 0; k < 4; ++k) {
            for (int y = 2; y < 8; ++y) {
                CHECK(out.at(0, y, k) == cube.at(0, y - 2, k));
                CHECK(out.at(1, y, k) == cube.at(0, y - 2, k));
            }
            for (int x = 2; x < 8; ++x) {
                CHECK(out.at(x, 0, k) == cube.at(x - 2, 0, k));
                CHECK(out.at(x, 1, k) == cube.at(x - 2, 0, k));
            }
            CHECK(out.at(2, 2, k) == cube.at(0, 0, k));
        }
    }
    SUBCASE("matches the triple-loop oracle on interior and boundary boxes") {
        for (const double pad : {1.0, 1.5, 2.0})
            for (int bx = -2; bx < 10; bx += 3)
                for (int by = -2; by < 8; by += 3) {
                    const BoundingBox box = BoundingBox::from_topleft(bx, by, 5, 4);
                    const HyperspectralCube a = crop_cube(cube, box, pad);
                    const HyperspectralCube b = oracles::crop_reference(cube, box, pad);
                    CHECK(a.data == b.data);
                }
    }
    SUBCASE("box fully outside the frame errors") {
        CHECK_THROWS_AS(crop_cube(cube, BoundingBox::from_topleft(50, 50, 4, 4), 1.0),
                        std::runtime_error);
        CHECK_THROWS_AS(crop_cube(cube, BoundingBox::from_topleft(-10, 0, 4, 4), 1.0),
                        std::runtime_error);
    }
    SUBCASE("pad below one is rejected") {
        CHECK_THROWS_AS(crop_cube(cube, BoundingBox{5, 5, 2, 2}, 0.5), std::runtime_error);
    }
}

TEST_CASE("synth_scene") {
    SUBCASE("no noise and a static object give identical frames") {
        auto cfg = small_scene(4);
        cfg.noise_sigma = 0.0;
        auto [seq, gt] = synth_scene(cfg, 3);
        for (int t = 1; t < 4; ++t) CHECK(seq.frames[t].data == seq.frames[0].data);
        for (const auto& b : gt) {
            CHECK(b.cx == 12.0);
            CHECK(b.w == 8.0);
        }
    }
    SUBCASE("same seed twice is bit identical") {
        auto cfg = small_scene(3);
        cfg.noise_sigma = 0.02;
        auto [a, gta] = synth_scene(cfg, 99);
        auto [b, gtb] = synth_scene(cfg, 99);
        (void)gta;
        (void)gtb;
        for (int t = 0; t < 3; ++t) CHECK(a.frames[t].data == b.frames[t].data);
    }
    SUBCASE("equal-mean materials are invisible in the band mean but spectrally distinct") {
        SceneConfig cfg = small_scene(1);
        cfg.noise_sigma = 0.0;
        cfg.bands = 8;
        cfg.wavelengths_nm = {470, 490, 510, 530, 550, 570, 590, 610};
        std::vector<double> bg(8), obj(8);
        for (int k = 0; k < 8; ++k) {
            const double s = std::sin(2.0 * std::numbers::pi * k / 8.0);
            bg[k] = 0.4 - 0.15 * s;
            obj[k] = 0.4 + 0.15 * s;
        }
        cfg.background_spectra = {bg};
        cfg.objects[0].spectrum = obj;
        cfg.objects[0].sizes[0] = {8, 8};
        auto [seq, gt] = synth_scene(cfg, 5);
        (void)gt;
        const HyperspectralCube mean = band_mean_cube(seq.frames[0]);
        float lo = 1.0f, hi = 0.0f;
        for (float v : mean.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(hi - lo < 1e-6f);
        CHECK(spectral_angle(bg, obj) > 0.1);
    }
    SUBCASE("object leaving the canvas errors") {
        auto cfg = small_scene(2);
        cfg.objects[0].centers[1] = {200.0, 200.0};
        CHECK_THROWS_WITH_AS(synth_scene(cfg, 0), doctest::Contains("leaves the canvas"),
                             std::runtime_error);
    }
    SUBCASE("illumination scales pixels") {
        auto cfg = small_scene(2);
        cfg.noise_sigma = 0.0;
        cfg.illumination = {1.0, 0.5};
        auto [seq, gt] = synth_scene(cfg, 0);
        (void)gt;
        CHECK(seq.frames[1].at(0, 0, 0) == doctest::Approx(0.5 * seq.frames[0].at(0, 0, 0)));
    }
}

TEST_CASE("loaded cubes are validated") {
    auto [seq, gt] = synth_scene(small_scene(1), 5);
    (void)gt;
    const fs::path dir = temp_dir("badvalue");
    write_sequence(seq, dir);
    // poison one value with a NaN
    std::fstream fio(dir / "00000.hsb", std::ios::in | std::ios::out | std::ios::binary);
    fio.seekp(16);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    fio.write(reinterpret_cast<const char*>(&nan), 4);
    fio.close();
    CHECK_THROWS_WITH_AS(load_sequence(dir), doctest::Contains("non-finite"),
                         std::runtime_error);
}

TEST_CASE("rng determinism and gaussian sanity") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
    Rng g(5);
    double sum = 0, sum2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = g.gaussian();
        sum += v;
        sum2 += v * v;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("resize_cube identity and range preservation") {
    const HyperspectralCube cube = oracles::random_cube(8, 6, 3, 11);
    const HyperspectralCube same = resize_cube(cube, 8, 6);
    CHECK(same.data == cube.data);
    const HyperspectralCube small = resize_cube(cube, 4, 3);
    CHECK(small.width == 4);
    CHECK(small.height == 3);
    for (float v : small.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}
