#include "hypertrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hypertrack {

using nlohmann::json;

double iou(const BoundingBox& a, const BoundingBox& b) {
    if (!a.valid() || !b.valid()) throw std::runtime_error("iou: invalid box");
    const double ix = std::max(0.0, std::min(a.x() + a.w, b.x() + b.w) - std::max(a.x(), b.x()));
    const double iy = std::max(0.0, std::min(a.y() + a.h, b.y() + b.h) - std::max(a.y(), b.y()));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

PrecisionCurve precision_curve(const Trajectory& traj, const Trajectory& gt) {
    if (traj.size() != gt.size())
        throw std::runtime_error("precision_curve: trajectory/ground-truth length mismatch");
    if (traj.empty()) throw std::runtime_error("precision_curve: empty trajectory");
    PrecisionCurve c;
    for (int t = 0; t <= 50; ++t) {
        int hits = 0;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            const double dx = traj[i].cx - gt[i].cx;
            const double dy = traj[i].cy - gt[i].cy;
            if (std::sqrt(dx * dx + dy * dy) <= t) ++hits;
        }
        c.values[t] = static_cast<double>(hits) / traj.size();
    }
    c.at_20 = c.values[20];
    return c;
}

SuccessCurve success_curve(const Trajectory& traj, const Trajectory& gt) {
    if (traj.size() != gt.size())
        throw std::runtime_error("success_curve: trajectory/ground-truth length mismatch");
    if (traj.empty()) throw std::runtime_error("success_curve: empty trajectory");
    std::vector<double> overlaps(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) overlaps[i] = iou(traj[i], gt[i]);

    SuccessCurve c;
    double sum = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double t = i / 20.0;
        int hits = 0;
        for (double o : overlaps)
            if (o > t) ++hits;
        c.values[i] = static_cast<double>(hits) / traj.size();
        sum += c.values[i];
    }
    c.auc = sum / 21.0;
    return c;
}

SequenceEval evaluate_sequence(const std::string& name, const Trajectory& traj,
                               const Trajectory& gt,
                               const std::vector<std::string>& attributes) {
    SequenceEval e;
    e.name = name;
    e.attributes = attributes;
    try {
        e.precision = precision_curve(traj, gt);
        e.success = success_curve(traj, gt);
    } catch (const std::exception& ex) {
        e.failed = true;
        e.error = ex.what();
    }
    return e;
}

EvalReport aggregate(std::vector<SequenceEval> per_sequence) {
    EvalReport r;
    r.per_sequence = std::move(per_sequence);

    int ok = 0;
    for (const auto& s : r.per_sequence) {
        if (s.failed) continue;
        ++ok;
        for (std::size_t i = 0; i < s.precision.values.size(); ++i)
            r.precision.values[i] += s.precision.values[i];
        for (std::size_t i = 0; i < s.success.values.size(); ++i)
            r.success.values[i] += s.success.values[i];
    }
    if (ok > 0) {
        for (auto& v : r.precision.values) v /= ok;
        for (auto& v : r.success.values) v /= ok;
        double sum = 0.0;
        for (double v : r.success.values) sum += v;
        r.success.auc = sum / 21.0;
        r.precision.at_20 = r.precision.values[20];
    }

    std::map<std::string, std::vector<const SequenceEval*>> by_attr;
    for (const auto& s : r.per_sequence) {
        if (s.failed) continue;
        for (const auto& a : s.attributes) by_attr[a].push_back(&s);
    }
    for (const auto& [attr, seqs] : by_attr) {
        AttributeEval ae;
        ae.sequences = static_cast<int>(seqs.size());
        for (const auto* s : seqs) {
            ae.auc += s->success.auc;
            ae.precision_at_20 += s->precision.at_20;
        }
        ae.auc /= seqs.size();
        ae.precision_at_20 /= seqs.size();
        r.per_attribute[attr] = ae;
    }
    return r;
}

EvalReport run_ope(const std::vector<OpeSequence>& dataset, const TrackerRunner& runner) {
    std::vector<SequenceEval> evals;
    for (const auto& item : dataset) {
        SequenceEval e;
        e.name = item.name;
        e.attributes = item.attributes;
        try {
            if (item.groundtruth.empty())
                throw std::runtime_error("sequence " + item.name + " has no ground truth");
            const Trajectory traj = runner(item.sequence, item.groundtruth.front());
            e = evaluate_sequence(item.name, traj, item.groundtruth, item.attributes);
        } catch (const std::exception& ex) {
            e.failed = true;
            e.error = ex.what();
        }
        evals.push_back(std::move(e));
    }
    return aggregate(std::move(evals));
}

namespace {

json curve_json(const PrecisionCurve& p, const SuccessCurve& s) {
    json j;
    j["precision_curve"] = std::vector<double>(p.values.begin(), p.values.end());
    j["success_curve"] = std::vector<double>(s.values.begin(), s.values.end());
    j["precision_at_20"] = p.at_20;
    j["auc"] = s.auc;
    return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json j;
    j["overall"] = curve_json(report.precision, report.success);
    json per_seq = json::object();
    for (const auto& s : report.per_sequence) {
        if (s.failed) {
            per_seq[s.name] = {{"failed", true}, {"error", s.error}};
        } else {
            per_seq[s.name] = curve_json(s.precision, s.success);
            per_seq[s.name]["attributes"] = s.attributes;
        }
    }
    j["per_sequence"] = per_seq;
    json per_attr = json::object();
    for (const auto& [attr, ae] : report.per_attribute)
        per_attr[attr] = {{"sequences", ae.sequences},
                          {"auc", ae.auc},
                          {"precision_at_20", ae.precision_at_20}};
    j["per_attribute"] = per_attr;
    return j.dump(2);
}

void write_report(const EvalReport& report, const std::filesystem::path& json_path) {
    std::ofstream os(json_path);
    if (!os) throw std::runtime_error("cannot write " + json_path.string());
    os << report_to_json(report) << "\n";
}

void write_curves_csv(const EvalReport& report, const std::filesystem::path& csv_path) {
    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("cannot write " + csv_path.string());
    os << "curve,threshold,value\n";
    for (std::size_t i = 0; i < report.precision.values.size(); ++i)
        os << "precision," << i << "," << report.precision.values[i] << "\n";
    for (std::size_t i = 0; i < report.success.values.size(); ++i)
        os << "success," << (i / 20.0) << "," << report.success.values[i] << "\n";
}

}  // namespace hypertrack
