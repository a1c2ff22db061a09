#ifndef NNREP_ENCODER_HPP
#define NNREP_ENCODER_HPP

#include <optional>
#include <string>
#include <vector>

#include "nnrep/interval.hpp"
#include "nnrep/model.hpp"
#include "nnrep/network.hpp"
#include "nnrep/predicate.hpp"

namespace nnrep {

struct RepairOptions {
    double delta_max = 1.0;              // weight box half-width; also bounds the deviation scalar
    double l1_weight = 0.0;              // sparsity coefficient; 0 disables the l1 term
    std::optional<std::vector<int>> node_subset; // rows of the repair layer to modify; all if absent
};

// A repair MIQP plus everything needed to turn a solution back into layer
// parameters.
struct RepairEncoding {
    MiqpModel model;
    int repair_layer = 0;
    Eigen::MatrixXd w_init;
    Eigen::VectorXd b_init;
    std::vector<int> node_subset; // sorted; full range when no subset was given
};

// Builds the layer-repair MIQP:
//  - objective sum_n ||y_n - t_n||^2 + delta (+ l1 term via auxiliary pairs),
//  - output equality and big-M ReLU rows for layers repair_layer..L with
//    coefficients from `bounds` (widened),
//  - per-sample predicate rows with guards resolved on the constant inputs;
//    single-disjunct groups are pure linear rows, larger groups get one
//    selector binary per disjunct,
//  - |theta - theta_init| <= delta entrywise and delta <= delta_max.
// ReLU nodes whose widened pre-activation interval does not straddle zero are
// fixed (no binary). Samples are rows of `inputs`/`targets`; `bounds` must
// come from compute_bounds_table on the same net, layer and delta_max.
RepairEncoding encode_repair(const Network& net, int repair_layer,
                             const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                             const Predicate& p, const RepairOptions& opts,
                             const BoundsTable& bounds);

// Extracts the repaired layer parameters from a solver assignment.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> decode(const RepairEncoding& enc,
                                                   const Eigen::VectorXd& assignment);

// One model per way of falsifying the predicate: a case picks an active
// guard group, asserts its guard, and reverses one body constraint of every
// disjunct in the group. The model maximizes a shared violation margin s
// (objective -s); the case admits a violating input iff its optimum reaches
// the strictness epsilon.
struct VerificationCase {
    MiqpModel model;
    std::string description;
};

struct InputBox {
    Eigen::VectorXd lo, hi;
};

// Throws when the box is unbounded or the case count exceeds 64.
std::vector<VerificationCase> encode_verification(const Network& net, const InputBox& box,
                                                  const Predicate& p);

} // namespace nnrep

#endif
