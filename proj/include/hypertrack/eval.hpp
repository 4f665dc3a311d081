#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hypertrack/core.hpp"

namespace hypertrack {

// Intersection area over union area; 0 when disjoint.
double iou(const BoundingBox& a, const BoundingBox& b);

struct PrecisionCurve {
    std::array<double, 51> values{};  // thresholds 0..50 px, step 1
    double at_20 = 0.0;
};

struct SuccessCurve {
    std::array<double, 21> values{};  // thresholds 0..1, step 0.05
    double auc = 0.0;                 // mean of the 21 samples
};

PrecisionCurve precision_curve(const Trajectory& traj, const Trajectory& gt);

// success(t) counts frames with IoU strictly greater than t, so a perfect
// trajectory has success(1) = 0 and AUC = 20/21.
SuccessCurve success_curve(const Trajectory& traj, const Trajectory& gt);

struct SequenceEval {
    std::string name;
    std::vector<std::string> attributes;
    PrecisionCurve precision;
    SuccessCurve success;
    bool failed = false;
    std::string error;
};

struct AttributeEval {
    int sequences = 0;
    double auc = 0.0;
    double precision_at_20 = 0.0;
};

struct EvalReport {
    std::vector<SequenceEval> per_sequence;
    PrecisionCurve precision;  // averaged over successful sequences
    SuccessCurve success;
    std::map<std::string, AttributeEval> per_attribute;
};

SequenceEval evaluate_sequence(const std::string& name, const Trajectory& traj,
                               const Trajectory& gt,
                               const std::vector<std::string>& attributes = {});

// Average per-sequence curves; failed sequences are reported, not aggregated.
EvalReport aggregate(std::vector<SequenceEval> per_sequence);

struct OpeSequence {
    std::string name;
    HyperspectralSequence sequence;
    Trajectory groundtruth;
    std::vector<std::string> attributes;
};

using TrackerRunner =
    std::function<Trajectory(const HyperspectralSequence&, const BoundingBox& init)>;

// One-pass evaluation: each run initialized from ground truth frame 0. A
// failing sequence is recorded in the report rather than silently skipped.
EvalReport run_ope(const std::vector<OpeSequence>& dataset, const TrackerRunner& runner);

std::string report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& json_path);
void write_curves_csv(const EvalReport& report, const std::filesystem::path& csv_path);

}  // namespace hypertrack
