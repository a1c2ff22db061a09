#ifndef NNREP_METRICS_HPP
#define NNREP_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "nnrep/network.hpp"
#include "nnrep/predicate.hpp"

namespace nnrep {

struct ViolationPoint {
    double distance = 0.0; // L2 distance to the nearest repair-set input
    double degree = 0.0;   // violation degree under the repaired network
};

struct RepairReport {
    double mae = 0.0;                  // vs the original network's outputs (headline)
    double mae_vs_targets = 0.0;       // vs ground-truth targets, for reference
    std::optional<double> repair_efficacy_pct; // null when nothing violated originally
    double introduced_bugs_pct = 0.0;
    std::vector<ViolationPoint> violation_points;
    double runtime_s = 0.0;
    std::string solver_status;

    std::string to_json() const;
    std::string violation_points_csv() const;
};

// MAE / RE / IB over the test set, plus degree-vs-distance pairs. The
// repair-set inputs feed the distance computation; targets are optional
// (mae_vs_targets is 0 when absent).
RepairReport evaluate_repair(const Network& original, const Network& repaired,
                             const Eigen::MatrixXd& test_inputs,
                             const Eigen::MatrixXd& test_targets, const Predicate& p,
                             const Eigen::MatrixXd& repair_inputs);

} // namespace nnrep

#endif
