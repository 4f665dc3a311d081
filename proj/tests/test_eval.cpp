#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "hypertrack/eval.hpp"

using namespace hypertrack;

namespace {

Trajectory constant_boxes(int n, double x, double y, double w, double h) {
    Trajectory t;
    for (int i = 0; i < n; ++i) t.push_back(BoundingBox::from_topleft(x, y, w, h));
    return t;
}

}  // namespace

TEST_CASE("iou") {
    const BoundingBox a = BoundingBox::from_topleft(0, 0, 2, 2);
    SUBCASE("identical boxes give 1") { CHECK(iou(a, a) == 1.0); }
    SUBCASE("disjoint boxes give 0") {
        CHECK(iou(a, BoundingBox::from_topleft(10, 10, 2, 2)) == 0.0);
    }
    SUBCASE("the (0,0,2,2)/(1,0,2,2) pair gives exactly 1/3") {
        const BoundingBox b = BoundingBox::from_topleft(1, 0, 2, 2);
        CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(iou(a, b) == iou(b, a));
    }
    SUBCASE("touching boxes give 0") {
        CHECK(iou(a, BoundingBox::from_topleft(2, 0, 2, 2)) == 0.0);
    }
    SUBCASE("invalid box errors") {
        CHECK_THROWS_AS(iou(a, BoundingBox{0, 0, -1, 1}), std::runtime_error);
    }
}

TEST_CASE("precision curve") {
    SUBCASE("perfect trajectory gives a curve of ones") {
        const Trajectory gt = constant_boxes(5, 10, 10, 4, 4);
        const PrecisionCurve c = precision_curve(gt, gt);
        for (double v : c.values) CHECK(v == 1.0);
        CHECK(c.at_20 == 1.0);
    }
    SUBCASE("one exact and one 25px-off frame give 0.5 at 20px") {
        Trajectory gt = constant_boxes(2, 0, 0, 4, 4);
        Trajectory traj = gt;
        traj[1].cx += 25.0;
        const PrecisionCurve c = precision_curve(traj, gt);
        CHECK(c.at_20 == 0.5);
        CHECK(c.values[24] == 0.5);
        CHECK(c.values[25] == 1.0);
    }
    SUBCASE("all offsets beyond 50px give zero everywhere") {
        Trajectory gt = constant_boxes(3, 0, 0, 4, 4);
        Trajectory traj = constant_boxes(3, 51, 0, 4, 4);
        const PrecisionCurve c = precision_curve(traj, gt);
        for (double v : c.values) CHECK(v == 0.0);
    }
    SUBCASE("non-decreasing in the threshold") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> off(-60, 60);
        Trajectory gt = constant_boxes(40, 0, 0, 6, 6);
        Trajectory traj = gt;
        for (auto& b : traj) {
            b.cx += off(rng);
            b.cy += off(rng);
        }
        const PrecisionCurve c = precision_curve(traj, gt);
        for (std::size_t i = 1; i < c.values.size(); ++i) CHECK(c.values[i] >= c.values[i - 1]);
    }
    SUBCASE("length mismatch errors") {
        CHECK_THROWS_AS(precision_curve(constant_boxes(2, 0, 0, 1, 1),
                                        constant_boxes(3, 0, 0, 1, 1)),
                        std::runtime_error);
    }
}

TEST_CASE("success curve and AUC") {
    SUBCASE("perfect trajectory has AUC 20/21 from the strict inequality") {
        const Trajectory gt = constant_boxes(7, 5, 5, 10, 10);
        const SuccessCurve c = success_curve(gt, gt);
        for (int i = 0; i < 20; ++i) CHECK(c.values[i] == 1.0);
        CHECK(c.values[20] == 0.0);  // IoU 1 is not strictly greater than 1
        CHECK(c.auc == doctest::Approx(20.0 / 21.0).epsilon(1e-15));
    }
    SUBCASE("all-zero overlap gives AUC 0") {
        const Trajectory gt = constant_boxes(4, 0, 0, 2, 2);
        const Trajectory traj = constant_boxes(4, 50, 50, 2, 2);
        CHECK(success_curve(traj, gt).auc == 0.0);
    }
    SUBCASE("half perfect, half lost gives AUC 10/21") {
        Trajectory gt = constant_boxes(4, 0, 0, 2, 2);
        Trajectory traj = gt;
        traj[2] = BoundingBox::from_topleft(50, 50, 2, 2);
        traj[3] = BoundingBox::from_topleft(50, 50, 2, 2);
        CHECK(success_curve(traj, gt).auc == doctest::Approx(10.0 / 21.0).epsilon(1e-15));
    }
    SUBCASE("non-increasing in the threshold and AUC equals the sample mean") {
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> off(-4, 4);
        Trajectory gt = constant_boxes(30, 0, 0, 8, 8);
        Trajectory traj = gt;
        for (auto& b : traj) {
            b.cx += off(rng);
            b.cy += off(rng);
        }
        const SuccessCurve c = success_curve(traj, gt);
        double sum = 0.0;
        for (std::size_t i = 0; i < c.values.size(); ++i) {
            if (i > 0) CHECK(c.values[i] <= c.values[i - 1]);
            CHECK(c.values[i] >= 0.0);
            CHECK(c.values[i] <= 1.0);
            sum += c.values[i];
        }
        CHECK(c.auc == sum / 21.0);
    }
}

TEST_CASE("run_ope") {
    auto make_item = [](const std::string& name, int frames,
                        const std::vector<std::string>& attrs) {
        OpeSequence item;
        item.name = name;
        item.groundtruth = constant_boxes(frames, 10, 10, 6, 6);
        item.attributes = attrs;
        return item;
    };

    SUBCASE("a tracker that returns ground truth scores AUC 20/21") {
        const std::vector<OpeSequence> data = {make_item("seq0", 5, {})};
        const EvalReport r =
            run_ope(data, [&](const HyperspectralSequence&, const BoundingBox& init) {
                CHECK(init.cx == 13.0);
                return constant_boxes(5, 10, 10, 6, 6);
            });
        CHECK(r.success.auc == doctest::Approx(20.0 / 21.0).epsilon(1e-15));
        CHECK(r.precision.at_20 == 1.0);
    }
    SUBCASE("overall is the mean of per-sequence AUCs") {
        std::vector<OpeSequence> data = {make_item("good", 4, {"BC"}),
                                         make_item("bad", 4, {"BC", "IV"})};
        int call = 0;
        const EvalReport r2 =
            run_ope(data, [&](const HyperspectralSequence&, const BoundingBox&) {
                ++call;
                if (call == 1) return constant_boxes(4, 10, 10, 6, 6);
                return constant_boxes(4, 200, 200, 6, 6);
            });
        CHECK(r2.success.auc == doctest::Approx(0.5 * 20.0 / 21.0));
        CHECK(r2.per_attribute.at("BC").sequences == 2);
        CHECK(r2.per_attribute.at("IV").sequences == 1);
        CHECK(r2.per_attribute.at("IV").auc == doctest::Approx(0.0));
        CHECK(r2.per_attribute.at("BC").auc == doctest::Approx(0.5 * 20.0 / 21.0));
    }
    SUBCASE("attribute rows aggregate exactly the tagged sequences") {
        std::vector<OpeSequence> data;
        for (int i = 0; i < 6; ++i)
            data.push_back(make_item("seq" + std::to_string(i), 3,
                                     i < 2 ? std::vector<std::string>{"BC"}
                                           : std::vector<std::string>{"SV"}));
        const EvalReport r =
            run_ope(data, [](const HyperspectralSequence&, const BoundingBox&) {
                return constant_boxes(3, 10, 10, 6, 6);
            });
        CHECK(r.per_attribute.at("BC").sequences == 2);
        CHECK(r.per_attribute.at("SV").sequences == 4);
    }
    SUBCASE("a failing sequence is reported, not skipped") {
        std::vector<OpeSequence> data = {make_item("ok", 3, {}), make_item("boom", 3, {})};
        int call = 0;
        const EvalReport r =
            run_ope(data, [&](const HyperspectralSequence&, const BoundingBox&) -> Trajectory {
                if (++call == 2) throw std::runtime_error("tracker exploded");
                return constant_boxes(3, 10, 10, 6, 6);
            });
        REQUIRE(r.per_sequence.size() == 2);
        CHECK_FALSE(r.per_sequence[0].failed);
        CHECK(r.per_sequence[1].failed);
        CHECK(r.per_sequence[1].error.find("exploded") != std::string::npos);
        // aggregation covers the successful one only
        CHECK(r.success.auc == doctest::Approx(20.0 / 21.0));
    }
    SUBCASE("aggregation is permutation invariant") {
        std::vector<SequenceEval> evals;
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> off(-10, 10);
        for (int i = 0; i < 5; ++i) {
            Trajectory gt = constant_boxes(10, 0, 0, 8, 8);
            Trajectory traj = gt;
            for (auto& b : traj) {
                b.cx += off(rng);
                b.cy += off(rng);
            }
            evals.push_back(evaluate_sequence("s" + std::to_string(i), traj, gt, {"BC"}));
        }
        const EvalReport a = aggregate(evals);
        std::reverse(evals.begin(), evals.end());
        const EvalReport b = aggregate(evals);
        CHECK(a.success.auc == doctest::Approx(b.success.auc).epsilon(1e-12));
        CHECK(a.precision.at_20 == doctest::Approx(b.precision.at_20).epsilon(1e-12));
        for (std::size_t i = 0; i < a.success.values.size(); ++i)
            CHECK(a.success.values[i] == doctest::Approx(b.success.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("report serialization") {
    Trajectory gt = constant_boxes(4, 0, 0, 5, 5);
    const EvalReport r = aggregate({evaluate_sequence("seq", gt, gt, {"BC"})});
    const std::string json = report_to_json(r);
    CHECK(json.find("\"overall\"") != std::string::npos);
    CHECK(json.find("\"per_sequence\"") != std::string::npos);
    CHECK(json.find("\"per_attribute\"") != std::string::npos);
    CHECK(json.find("\"BC\"") != std::string::npos);
}
