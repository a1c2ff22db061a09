#ifndef NNREP_VERIFIER_HPP
#define NNREP_VERIFIER_HPP

#include <optional>
#include <string>
#include <vector>

#include "nnrep/encoder.hpp"
#include "nnrep/network.hpp"
#include "nnrep/predicate.hpp"
#include "nnrep/solver.hpp"

namespace nnrep {

enum class Verdict { Safe, Unsafe, Unknown };

std::string to_string(Verdict v);

// Raised when a repair step inside the loop comes back infeasible; the
// message names the iteration, sample counts and predicate shape.
class RepairInfeasibleError : public Error {
public:
    explicit RepairInfeasibleError(const std::string& msg) : Error(msg) {}
};

struct VerifyOutcome {
    Verdict verdict = Verdict::Unknown;
    std::vector<Eigen::VectorXd> witnesses; // inputs that violate the predicate exactly
    int cases_checked = 0;
};

struct VerifyParams {
    SolveParams solve;
    int extra_witnesses = 5; // diversification re-solves per feasible case
};

// Sound verification of net against p over the box: every negation case must
// be proven infeasible for a Safe verdict. Witnesses are validated against
// the exact forward pass; feasible cases whose witnesses all fail validation
// downgrade the verdict to Unknown rather than Safe.
VerifyOutcome verify(const Network& net, const InputBox& box, const Predicate& p,
                     const VerifyParams& params = {});

struct RepairLoopConfig {
    int layer = 1;
    RepairOptions options;
    SolveParams solve;
    VerifyParams verify;
    int max_iterations = 20;
};

struct RepairIterationRecord {
    int new_witnesses = 0;
    int total_samples = 0;
    SolveStatus solver_status = SolveStatus::InfeasibleOrUnbounded;
    double objective = 0.0;
};

struct RepairLoopResult {
    Network net;
    Verdict verdict = Verdict::Unknown;
    int iterations = 0; // repair calls performed
    std::vector<RepairIterationRecord> history;
    std::string diagnostic; // set when the loop aborts on infeasibility
};

// Repair/verify alternation: verify, feed witnesses (targets = the original
// network's outputs) back into the repair set, repair the current network,
// repeat. The cumulative sample set only grows. Throws Error on an
// infeasible repair step with a diagnostic of the offending samples.
RepairLoopResult repair_loop(const Network& net, const InputBox& box, const Predicate& p,
                             const Eigen::MatrixXd& repair_inputs,
                             const Eigen::MatrixXd& repair_targets,
                             const RepairLoopConfig& config);

} // namespace nnrep

#endif
