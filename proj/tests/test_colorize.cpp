#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hypertrack/colorize.hpp"
#include "oracles.hpp"

using namespace hypertrack;
namespace fs = std::filesystem;

namespace {

RawCmfTable toy_table() {
    RawCmfTable t;
    for (int i = 0; i <= 40; ++i) {
        const double wl = 400.0 + 10.0 * i;
        t.wavelengths_nm.push_back(wl);
        t.xyz.push_back({0.5 + 0.01 * i, 1.0 - 0.01 * i, 0.2 + 0.005 * i});
    }
    return t;
}

}  // namespace

TEST_CASE("dark_calibrate") {
    const HyperspectralCube raw = oracles::random_cube(6, 5, 4, 1);
    SUBCASE("raw equals dark gives a zero cube") {
        const HyperspectralCube out = dark_calibrate(raw, raw);
        for (float v : out.data) CHECK(v == 0.0f);
    }
    SUBCASE("zero dark leaves the cube unchanged") {
        HyperspectralCube dark = raw;
        std::fill(dark.data.begin(), dark.data.end(), 0.0f);
        const HyperspectralCube out = dark_calibrate(raw, dark);
        CHECK(out.data == raw.data);
    }
    SUBCASE("pixels darker than the dark frame clamp to zero") {
        HyperspectralCube dark = raw;
        std::fill(dark.data.begin(), dark.data.end(), 0.5f);
        const HyperspectralCube out = dark_calibrate(raw, dark);
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            CHECK(out.data[i] >= 0.0f);
            if (raw.data[i] < 0.5f) CHECK(out.data[i] == 0.0f);
        }
    }
    SUBCASE("dimension mismatch errors") {
        CHECK_THROWS_AS(dark_calibrate(raw, oracles::random_cube(6, 5, 3, 2)),
                        std::runtime_error);
    }
}

TEST_CASE("spectral_correct") {
    const HyperspectralCube cube = oracles::random_cube(3, 3, 4, 3);
    SUBCASE("identity matrix is the identity map") {
        const HyperspectralCube out =
            spectral_correct(cube, Eigen::MatrixXd::Identity(4, 4));
        for (std::size_t i = 0; i < out.data.size(); ++i)
            CHECK(out.data[i] == doctest::Approx(cube.data[i]).epsilon(1e-12));
    }
    SUBCASE("zero matrix gives a zero cube") {
        const HyperspectralCube out = spectral_correct(cube, Eigen::MatrixXd::Zero(4, 4));
        for (float v : out.data) CHECK(v == 0.0f);
    }
    SUBCASE("random matrix matches the per-pixel loop oracle") {
        Rng rng(17);
        Eigen::MatrixXd C(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) C(i, j) = 0.5 * rng.uniform();
        const HyperspectralCube out = spectral_correct(cube, C);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x)
                for (int i = 0; i < 4; ++i) {
                    double expect = 0.0;
                    for (int j = 0; j < 4; ++j) expect += C(i, j) * cube.at(x, y, j);
                    expect = std::clamp(expect, 0.0, 1.0);
                    CHECK(static_cast<double>(out.at(x, y, i)) ==
                          doctest::Approx(expect).epsilon(1e-6));
                }
    }
    SUBCASE("shape mismatch errors") {
        CHECK_THROWS_AS(spectral_correct(cube, Eigen::MatrixXd::Identity(3, 3)),
                        std::runtime_error);
    }
}

TEST_CASE("resample_cmfs") {
    const RawCmfTable t = toy_table();
    SUBCASE("a wavelength on a knot returns the exact table row") {
        const CmfTable c = resample_cmfs(t, {500.0});
        CHECK(c.rows[0][0] == t.xyz[10][0]);
        CHECK(c.rows[0][1] == t.xyz[10][1]);
        CHECK(c.rows[0][2] == t.xyz[10][2]);
    }
    SUBCASE("midpoints interpolate to the mean of the neighbors") {
        const CmfTable c = resample_cmfs(t, {505.0});
        for (int ch = 0; ch < 3; ++ch)
            CHECK(c.rows[0][ch] ==
                  doctest::Approx(0.5 * (t.xyz[10][ch] + t.xyz[11][ch])).epsilon(1e-12));
    }
    SUBCASE("row order follows the band order") {
        const CmfTable c = resample_cmfs(t, {470, 520, 570});
        CHECK(c.rows.size() == 3);
        CHECK(c.rows[0][0] < c.rows[1][0]);
        CHECK(c.rows[1][0] < c.rows[2][0]);
    }
    SUBCASE("out-of-range wavelengths error") {
        CHECK_THROWS_AS(resample_cmfs(t, {399.0}), std::runtime_error);
        CHECK_THROWS_AS(resample_cmfs(t, {801.0}), std::runtime_error);
    }
}

TEST_CASE("xyz_image and false color") {
    const RawCmfTable t = toy_table();
    SUBCASE("a zero cube renders black") {
        HyperspectralCube cube = oracles::random_cube(4, 4, 4, 9);
        std::fill(cube.data.begin(), cube.data.end(), 0.0f);
        const CmfTable cmfs = resample_cmfs(t, cube.wavelengths_nm);
        const RgbImage img = to_false_color(cube, cmfs);
        for (float v : img.data) CHECK(v == 0.0f);
    }
    SUBCASE("a single-band cube gives the rank-1 outer product at the XYZ stage") {
        HyperspectralCube cube = oracles::random_cube(5, 4, 4, 10);
        for (int k = 0; k < 4; ++k)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 5; ++x)
                    if (k != 2) cube.at(x, y, k) = 0.0f;
        const CmfTable cmfs = resample_cmfs(t, cube.wavelengths_nm);
        const XyzImage xyz = xyz_image(cube, cmfs);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x)
                for (int c = 0; c < 3; ++c)
                    CHECK(xyz.at(x, y, c) ==
                          doctest::Approx(static_cast<double>(cube.at(x, y, 2)) *
                                          cmfs.rows[2][c])
                              .epsilon(1e-12));
        // rank-1: every pixel's XYZ is proportional to the same CMF row
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x) {
                const double scale = xyz.at(x, y, 0) / cmfs.rows[2][0];
                CHECK(xyz.at(x, y, 1) == doctest::Approx(scale * cmfs.rows[2][1]));
                CHECK(xyz.at(x, y, 2) == doctest::Approx(scale * cmfs.rows[2][2]));
            }
    }
    SUBCASE("the XYZ stage is linear in the cube") {
        const HyperspectralCube a = oracles::random_cube_quantized(4, 3, 4, 11);
        const HyperspectralCube b = oracles::random_cube_quantized(4, 3, 4, 12);
        const CmfTable cmfs = resample_cmfs(t, a.wavelengths_nm);
        HyperspectralCube mix = a;
        for (std::size_t i = 0; i < mix.data.size(); ++i)
            mix.data[i] = 0.25f * a.data[i] + 0.5f * b.data[i];
        const XyzImage xa = xyz_image(a, cmfs);
        const XyzImage xb = xyz_image(b, cmfs);
        const XyzImage xm = xyz_image(mix, cmfs);
        for (std::size_t i = 0; i < xm.data.size(); ++i)
            CHECK(xm.data[i] ==
                  doctest::Approx(0.25 * xa.data[i] + 0.5 * xb.data[i]).epsilon(1e-12));
    }
    SUBCASE("random cube matches the double-loop oracle at the XYZ stage") {
        const HyperspectralCube cube = oracles::random_cube(5, 5, 4, 13);
        const CmfTable cmfs = resample_cmfs(t, cube.wavelengths_nm);
        const XyzImage xyz = xyz_image(cube, cmfs);
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x)
                for (int c = 0; c < 3; ++c) {
                    double expect = 0.0;
                    for (int k = 0; k < 4; ++k)
                        expect += static_cast<double>(cube.at(x, y, k)) * cmfs.rows[k][c];
                    CHECK(xyz.at(x, y, c) == doctest::Approx(expect).epsilon(1e-12));
                }
    }
    SUBCASE("sRGB output stays in range") {
        const HyperspectralCube cube = oracles::random_cube(6, 6, 4, 14);
        const CmfTable cmfs = resample_cmfs(t, cube.wavelengths_nm);
        const RgbImage img = to_false_color(cube, cmfs);
        for (float v : img.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    SUBCASE("misaligned CMF table errors") {
        const HyperspectralCube cube = oracles::random_cube(4, 4, 4, 15);
        CmfTable bad;
        bad.rows.resize(3);
        CHECK_THROWS_AS(xyz_image(cube, bad), std::runtime_error);
    }
}

TEST_CASE("image writers") {
    const fs::path dir = fs::temp_directory_path() / "hypertrack_test_img";
    fs::create_directories(dir);
    SUBCASE("ppm header and size") {
        RgbImage img;
        img.width = 3;
        img.height = 2;
        img.data.assign(3 * 2 * 3, 0.5f);
        write_ppm(img, dir / "img.ppm");
        std::ifstream is(dir / "img.ppm", std::ios::binary);
        std::string magic;
        is >> magic;
        CHECK(magic == "P6");
        int w, h, maxval;
        is >> w >> h >> maxval;
        CHECK(w == 3);
        CHECK(h == 2);
        CHECK(maxval == 255);
    }
    SUBCASE("pgm channel dump") {
        FeatureMap m;
        m.resize(4, 3, 2);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x) m.at(x, y, 1) = 1.0;
        write_pgm_channel(m, 1, dir / "ch.pgm");
        std::ifstream is(dir / "ch.pgm", std::ios::binary);
        std::string magic;
        is >> magic;
        CHECK(magic == "P5");
        CHECK_THROWS_AS(write_pgm_channel(m, 5, dir / "bad.pgm"), std::runtime_error);
    }
}

TEST_CASE("bundled cmf table loads when present") {
    // the repo data file; resolved relative to this source file's tree
    const fs::path data = fs::path(__FILE__).parent_path().parent_path() / "data" /
                          "cie_xyz_cmf_1nm.txt";
    if (fs::exists(data)) {
        const RawCmfTable t = load_cmf_table(data);
        CHECK(t.wavelengths_nm.front() <= 470.0);
        CHECK(t.wavelengths_nm.back() >= 620.0);
        const CmfTable c = resample_cmfs(t, {470, 500, 550, 620});
        for (const auto& row : c.rows)
            for (double v : row) CHECK(v >= 0.0);
    }
}
