#ifndef NNREP_SOLVER_HPP
#define NNREP_SOLVER_HPP

#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "nnrep/model.hpp"
#include "nnrep/qp.hpp"

namespace nnrep {

enum class Branching { MostFractional, PseudoCost };

struct SolveParams {
    double time_limit_s = std::numeric_limits<double>::infinity();
    long node_limit = 0; // 0 = unlimited; preferred limit for reproducible runs
    double abs_gap = 1e-6;
    double rel_gap = 1e-4;
    double integrality_tol = 1e-5;
    Branching branching = Branching::MostFractional;
    bool deterministic = true;
    unsigned long seed = 0;
    bool log = false;          // BnB progress lines on stderr
    bool use_hint = true;      // seed an incumbent from the model's binary hint
    // Subtrees whose relaxation bound reaches this value are pruned as if an
    // incumbent with this objective existed. Verification uses it to stop
    // exploring regions whose best possible violation margin is below the
    // strictness epsilon.
    double cutoff = std::numeric_limits<double>::infinity();
    // Stop as soon as an incumbent at or below this objective is found
    // (status FeasibleTimeLimit). Verification stops at the first clearly
    // violating input instead of maximizing the violation.
    double target_objective = -std::numeric_limits<double>::infinity();
    QpSettings qp;
};

enum class SolveStatus { Optimal, FeasibleTimeLimit, Infeasible, InfeasibleOrUnbounded };

std::string to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::InfeasibleOrUnbounded;
    std::optional<Eigen::VectorXd> assignment;
    double objective = std::numeric_limits<double>::infinity();
    double best_bound = -std::numeric_limits<double>::infinity();
    long node_count = 0;
    double wall_time_s = 0.0;
};

// Best-first branch-and-bound over the model's binaries with a convex QP
// relaxation at every node. Ties in the node queue break by insertion order;
// branching ties break by lowest variable index. Binaries of an accepted
// incumbent are snapped to {0,1} and the continuous QP re-solved.
SolveResult solve(const MiqpModel& model, const SolveParams& params);

enum class FeasStatus { Feasible, Infeasible, Unknown };

struct FeasibilityResult {
    FeasStatus status = FeasStatus::Unknown;
    std::optional<Eigen::VectorXd> assignment;
    long node_count = 0;
};

// Zero-objective branch-and-bound; the first integral feasible node wins.
FeasibilityResult check_feasibility(const MiqpModel& model, const SolveParams& params);

// Pluggable MIQP engine interface; the built-in branch-and-bound is the
// default. External engines implement the same entry point.
class MiqpBackend {
public:
    virtual ~MiqpBackend() = default;
    virtual std::string name() const = 0;
    virtual SolveResult solve(const MiqpModel& model, const SolveParams& params) = 0;
};

class BuiltinBackend final : public MiqpBackend {
public:
    std::string name() const override { return "builtin-bnb"; }
    SolveResult solve(const MiqpModel& model, const SolveParams& params) override;
};

MiqpBackend& default_backend();

// Relaxes the model (binaries to [0,1]) into the QP kernel form. Exposed for
// tests and enumeration oracles.
QpProblem relax_model(const MiqpModel& model);

} // namespace nnrep

#endif
