#ifndef NNREP_PREDICATE_HPP
#define NNREP_PREDICATE_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnrep/common.hpp"

namespace nnrep {

// a_x . x0 + a_y . y <= rhs. Either coefficient vector may be empty (all
// zeros) or shorter than the vector it applies to (trailing coefficients are
// zero); guards use a_y empty.
struct AffineConstraint {
    Eigen::VectorXd a_x;
    Eigen::VectorXd a_y;
    double rhs = 0.0;

    double lhs(const Eigen::VectorXd& x0, const Eigen::VectorXd& y) const;
    bool holds(const Eigen::VectorXd& x0, const Eigen::VectorXd& y, double eps = kEpsFeas) const {
        return lhs(x0, y) <= rhs + eps;
    }
    // max(0, lhs - rhs): positive slack of a violated constraint.
    double positive_slack(const Eigen::VectorXd& x0, const Eigen::VectorXd& y) const;
};

struct Disjunct {
    std::vector<AffineConstraint> guard; // over x0 only; empty = always active
    std::vector<AffineConstraint> body;
};

// Guarded disjunction of affine constraints. Semantics: for every group of
// disjuncts sharing a guard that is active at x0, at least one body in the
// group must hold:  Psi = AND_{active guards g} OR_{disjuncts with guard g} body.
class Predicate {
public:
    explicit Predicate(std::vector<Disjunct> disjuncts);

    const std::vector<Disjunct>& disjuncts() const { return disjuncts_; }

    // Indices of disjuncts_ partitioned into groups with structurally equal
    // guards, in first-appearance order.
    const std::vector<std::vector<int>>& guard_groups() const { return groups_; }

    bool guard_active(int group, const Eigen::VectorXd& x0, double eps = kEpsFeas) const;

private:
    std::vector<Disjunct> disjuncts_;
    std::vector<std::vector<int>> groups_;
};

// y in [y_min, y_max], entrywise.
Predicate make_global_bound(const Eigen::VectorXd& y_min, const Eigen::VectorXd& y_max);
Predicate make_global_bound(double y_min, double y_max);

// |y - x0[prev_output_index]| <= delta_max for scalar output y.
Predicate make_rate_bound(int prev_output_index, double delta_max);

// x0[guard_index] in guard_interval  =>  y <= y_low  OR  y >= y_high.
Predicate make_avoid_box(int guard_index, double guard_lo, double guard_hi, double y_low,
                         double y_high);

bool evaluate(const Predicate& p, const Eigen::VectorXd& x0, const Eigen::VectorXd& y,
              double eps = kEpsFeas);

struct ViolationDegree {
    double value = 0.0;
};

// 0 iff the predicate holds; otherwise the distance-style degree: for each
// active guard group, min over its disjuncts of the largest positive body
// slack, combined over groups by max.
ViolationDegree violation_degree(const Predicate& p, const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& y);

// Count of violating rows plus per-row degrees over batched (inputs, outputs);
// the OpenMP variant fills per-row slots independently.
struct ViolationScan {
    std::vector<double> degrees;
    long violations = 0;
};
ViolationScan scan_violations(const Predicate& p, const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& outputs);
ViolationScan scan_violations_serial(const Predicate& p, const Eigen::MatrixXd& inputs,
                                     const Eigen::MatrixXd& outputs);

// JSON schema:
// {"disjuncts":[{"guard":[{"a_x":[...],"rhs":r}],
//                "body":[{"a_x":[...],"a_y":[...],"rhs":r}]}]}
Predicate predicate_from_json(const std::string& text);
std::string predicate_to_json(const Predicate& p);
Predicate load_predicate(const std::string& path);
void save_predicate(const Predicate& p, const std::string& path);

} // namespace nnrep

#endif
