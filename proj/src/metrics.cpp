#include "nnrep/metrics.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace nnrep {

using nlohmann::json;

RepairReport evaluate_repair(const Network& original, const Network& repaired,
                             const Eigen::MatrixXd& test_inputs,
                             const Eigen::MatrixXd& test_targets, const Predicate& p,
                             const Eigen::MatrixXd& repair_inputs) {
    if (test_inputs.rows() == 0) throw Error("evaluate_repair: empty test set");
    if (original.input_width() != repaired.input_width() ||
        original.output_width() != repaired.output_width())
        throw DimensionError("evaluate_repair: networks disagree on widths");

    const Eigen::MatrixXd y_orig = forward_outputs(original, test_inputs);
    const Eigen::MatrixXd y_rep = forward_outputs(repaired, test_inputs);
    const ViolationScan scan_orig = scan_violations(p, test_inputs, y_orig);
    const ViolationScan scan_rep = scan_violations(p, test_inputs, y_rep);

    RepairReport report;
    report.mae = (y_rep - y_orig).cwiseAbs().rowwise().mean().mean();
    if (test_targets.rows() == test_inputs.rows() && test_targets.cols() == y_rep.cols())
        report.mae_vs_targets = (y_rep - test_targets).cwiseAbs().rowwise().mean().mean();

    long orig_violating = 0, fixed = 0, orig_safe = 0, broken = 0;
    for (Eigen::Index n = 0; n < test_inputs.rows(); ++n) {
        const bool bad_orig = scan_orig.degrees[static_cast<size_t>(n)] > kEpsFeas;
        const bool bad_rep = scan_rep.degrees[static_cast<size_t>(n)] > kEpsFeas;
        if (bad_orig) {
            ++orig_violating;
            if (!bad_rep) ++fixed;
        } else {
            ++orig_safe;
            if (bad_rep) ++broken;
        }
    }
    if (orig_violating > 0)
        report.repair_efficacy_pct = 100.0 * static_cast<double>(fixed) / orig_violating;
    report.introduced_bugs_pct =
        orig_safe > 0 ? 100.0 * static_cast<double>(broken) / orig_safe : 0.0;

    report.violation_points.resize(static_cast<size_t>(test_inputs.rows()));
    for (Eigen::Index n = 0; n < test_inputs.rows(); ++n) {
        double nearest = std::numeric_limits<double>::infinity();
        for (Eigen::Index r = 0; r < repair_inputs.rows(); ++r)
            nearest = std::min(nearest, (test_inputs.row(n) - repair_inputs.row(r)).norm());
        report.violation_points[static_cast<size_t>(n)] =
            ViolationPoint{nearest, scan_rep.degrees[static_cast<size_t>(n)]};
    }
    return report;
}

std::string RepairReport::to_json() const {
    json doc;
    doc["mae"] = mae;
    doc["mae_vs_targets"] = mae_vs_targets;
    if (repair_efficacy_pct)
        doc["repair_efficacy_pct"] = *repair_efficacy_pct;
    else
        doc["repair_efficacy_pct"] = nullptr;
    doc["introduced_bugs_pct"] = introduced_bugs_pct;
    doc["runtime_s"] = runtime_s;
    doc["solver_status"] = solver_status;
    doc["violation_points"] = json::array();
    for (const ViolationPoint& vp : violation_points) {
        json jp;
        jp["distance"] = vp.distance;
        jp["degree"] = vp.degree;
        doc["violation_points"].push_back(std::move(jp));
    }
    return doc.dump(2) + "\n";
}

std::string RepairReport::violation_points_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "l2_distance_to_nearest_repair_input,violation_degree\n";
    for (const ViolationPoint& vp : violation_points)
        os << vp.distance << "," << vp.degree << "\n";
    return os.str();
}

} // namespace nnrep
