#ifndef NNREP_INTERVAL_HPP
#define NNREP_INTERVAL_HPP

#include <vector>

#include <Eigen/Dense>

#include "nnrep/common.hpp"
#include "nnrep/network.hpp"

namespace nnrep {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    bool contains(const Interval& other) const { return lo <= other.lo && hi >= other.hi; }
    double width() const { return hi - lo; }
};

// Entry-wise intervals around the repair layer's weights and bias. The
// original parameters lie inside every interval by construction.
struct WeightBox {
    Eigen::MatrixXd w_lo, w_hi;
    Eigen::VectorXd b_lo, b_hi;

    // l-infinity ball of radius delta_max around the layer's parameters.
    static WeightBox around(const Layer& layer, double delta_max);

    int rows() const { return static_cast<int>(w_lo.rows()); }
    int cols() const { return static_cast<int>(w_lo.cols()); }
};

// Pre-activation intervals for layers repair_layer..L+1, one block per
// sample. preact[n][i - repair_layer][j] bounds the pre-activation of node j
// in layer i for sample n; the last block (output layer) bounds the output
// itself. When repair_layer == L+1 each sample holds only the output block.
struct BoundsTable {
    int repair_layer = 0;
    std::vector<std::vector<std::vector<Interval>>> preact;

    const std::vector<Interval>& layer_bounds(int sample, int layer) const {
        return preact[static_cast<size_t>(sample)]
                     [static_cast<size_t>(layer - repair_layer)];
    }
    const std::vector<Interval>& output_bounds(int sample) const {
        return preact[static_cast<size_t>(sample)].back();
    }
};

// Bounds on theta_w * x_prev + theta_b over all (theta_w, theta_b) in box.
// x_prev holds the known per-sample activations of the layer feeding the
// repair layer (signed when that layer is the raw input).
std::vector<Interval> repair_layer_bounds(const Eigen::VectorXd& x_prev, const WeightBox& box);

// Bounds on W x + b over all x inside x_bounds (W, b fixed). The caller
// clamps both endpoints with max(0, .) before feeding the result to the next
// layer.
std::vector<Interval> propagate_bounds(const std::vector<Interval>& x_bounds,
                                       const Eigen::MatrixXd& W, const Eigen::VectorXd& b);

// Composes the two bound rules: per-sample interval-weight bounds at the
// repair layer, then ReLU-clamped propagation through the remaining layers.
// Samples are rows of `inputs`. The OpenMP variant fills per-sample blocks
// independently and is bit-identical to the serial reference.
BoundsTable compute_bounds_table(const Network& net, int repair_layer,
                                 const Eigen::MatrixXd& inputs, double delta_max);
BoundsTable compute_bounds_table_serial(const Network& net, int repair_layer,
                                        const Eigen::MatrixXd& inputs, double delta_max);

// Widening applied to interval endpoints before use as big-M coefficients.
inline double widen_lo(double lo) { return lo - (kBigMSlackAbs + kBigMSlackRel * std::abs(lo)); }
inline double widen_hi(double hi) { return hi + (kBigMSlackAbs + kBigMSlackRel * std::abs(hi)); }

} // namespace nnrep

#endif
