#ifndef NNREP_MODEL_HPP
#define NNREP_MODEL_HPP

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnrep/common.hpp"

namespace nnrep {

enum class VarKind {
    Weight,      // repair-layer weight entry (layer, row, col)
    Bias,        // repair-layer bias entry (layer, row)
    Node,        // post-activation value (sample, layer, row)
    Output,      // output coordinate (sample, row)
    ReluBinary,  // activation indicator (sample, layer, row)
    Selector,    // disjunct selector (sample, row = disjunct index)
    Deviation,   // the single max-norm deviation scalar
    L1Pos,       // positive part of a repaired entry's deviation
    L1Neg,       // negative part
    Input,       // input coordinate (verification models only)
    Slack        // violation-margin variable (verification models only)
};

struct VarInfo {
    VarKind kind = VarKind::Node;
    int sample = -1;
    int layer = -1;
    int row = -1;
    int col = -1;
};

enum class RowTag : unsigned char {
    Structure,  // forward-pass equalities and big-M ReLU rows
    Predicate,  // safety constraint rows (bodies, selector covers, guards)
    Deviation,  // |theta - theta_init| <= delta
    Sparsity,   // l1 auxiliary splits
    Cut         // solver- or verifier-added cuts
};

// One two-sided linear constraint: lo <= sum coeff_k * x_{idx_k} <= hi.
struct LinearRow {
    std::vector<std::pair<int, double>> terms;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    RowTag tag = RowTag::Structure;
};

// Convex MIQP in the form
//   minimize  sum_i quad[i] * x_i^2 + lin . x + constant
//   s.t.      rows, var bounds, x_b in {0,1} for b in binaries.
// quad is entry-wise nonnegative, so the Hessian is diagonal PSD.
struct MiqpModel {
    int num_vars = 0;
    std::vector<VarInfo> var_info;
    std::vector<double> obj_quad;
    std::vector<double> obj_lin;
    double obj_const = 0.0;
    std::vector<LinearRow> rows;
    std::vector<double> var_lo, var_hi;
    std::vector<int> binaries;

    // Optional suggested values for binaries (e.g. the original activation
    // pattern); solvers may use them to seed a first incumbent.
    std::vector<std::pair<int, double>> binary_hint;

    int add_var(const VarInfo& info, double lo, double hi);
    void add_row(LinearRow row);

    // Variable index lookup by role; returns -1 when absent.
    int find_var(VarKind kind, int sample, int layer, int row, int col) const;

    double objective_value(const Eigen::VectorXd& x) const;
    // Largest constraint/bound violation at x.
    double max_infeasibility(const Eigen::VectorXd& x) const;

    std::string var_name(int idx) const;
    // LP-style plain-text export (objective, constraints, bounds, binaries).
    void write_lp(std::ostream& os) const;

    void validate() const;
};

} // namespace nnrep

#endif
