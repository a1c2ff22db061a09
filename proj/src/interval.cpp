#include "nnrep/interval.hpp"

#include <algorithm>
#include <cmath>

namespace nnrep {

WeightBox WeightBox::around(const Layer& layer, double delta_max) {
    if (delta_max < 0.0) throw Error("delta_max must be >= 0");
    WeightBox box;
    box.w_lo = layer.weights.array() - delta_max;
    box.w_hi = layer.weights.array() + delta_max;
    box.b_lo = layer.bias.array() - delta_max;
    box.b_hi = layer.bias.array() + delta_max;
    return box;
}

std::vector<Interval> repair_layer_bounds(const Eigen::VectorXd& x_prev, const WeightBox& box) {
    if (x_prev.size() != box.cols())
        throw DimensionError("repair_layer_bounds: x_prev size does not match box columns");
    if (!x_prev.allFinite()) throw Error("repair_layer_bounds: non-finite activation");
    std::vector<Interval> out(static_cast<size_t>(box.rows()));
    for (int j = 0; j < box.rows(); ++j) {
        double hi = box.b_hi[j];
        double lo = box.b_lo[j];
        for (int i = 0; i < box.cols(); ++i) {
            const double xp = std::max(0.0, x_prev[i]);
            const double xm = std::min(0.0, x_prev[i]);
            hi += box.w_hi(j, i) * xp + box.w_lo(j, i) * xm;
            lo += box.w_lo(j, i) * xp + box.w_hi(j, i) * xm;
        }
        out[static_cast<size_t>(j)] = Interval{lo, hi};
    }
    return out;
}

std::vector<Interval> propagate_bounds(const std::vector<Interval>& x_bounds,
                                       const Eigen::MatrixXd& W, const Eigen::VectorXd& b) {
    if (static_cast<Eigen::Index>(x_bounds.size()) != W.cols())
        throw DimensionError("propagate_bounds: bounds size does not match weight columns");
    for (const Interval& iv : x_bounds)
        if (iv.lo > iv.hi) throw Error("propagate_bounds: inverted input interval");
    std::vector<Interval> out(static_cast<size_t>(W.rows()));
    for (Eigen::Index j = 0; j < W.rows(); ++j) {
        double hi = b[j];
        double lo = b[j];
        for (Eigen::Index i = 0; i < W.cols(); ++i) {
            const double w = W(j, i);
            const double wp = std::max(0.0, w);
            const double wm = std::min(0.0, w);
            hi += x_bounds[static_cast<size_t>(i)].hi * wp + x_bounds[static_cast<size_t>(i)].lo * wm;
            lo += x_bounds[static_cast<size_t>(i)].lo * wp + x_bounds[static_cast<size_t>(i)].hi * wm;
        }
        out[static_cast<size_t>(j)] = Interval{lo, hi};
    }
    return out;
}

namespace {

std::vector<std::vector<Interval>> sample_bounds(const Network& net, int repair_layer,
                                                 const Eigen::VectorXd& x0,
                                                 const WeightBox& box) {
    // Fixed prefix forward pass up to the repair layer's input.
    Eigen::VectorXd x = x0;
    for (int l = 1; l < repair_layer; ++l)
        x = (net.layer(l).weights * x + net.layer(l).bias).cwiseMax(0.0);
    // Output-layer activations are not ReLU-clamped, but the loop above only
    // runs over hidden layers since repair_layer <= depth().

    std::vector<std::vector<Interval>> blocks;
    std::vector<Interval> cur = repair_layer_bounds(x, box);
    blocks.push_back(cur);
    for (int l = repair_layer + 1; l <= net.depth(); ++l) {
        for (Interval& iv : cur) {
            iv.lo = std::max(0.0, iv.lo);
            iv.hi = std::max(0.0, iv.hi);
        }
        cur = propagate_bounds(cur, net.layer(l).weights, net.layer(l).bias);
        blocks.push_back(cur);
    }
    return blocks;
}

} // namespace

BoundsTable compute_bounds_table_serial(const Network& net, int repair_layer,
                                        const Eigen::MatrixXd& inputs, double delta_max) {
    if (repair_layer < 1 || repair_layer > net.depth())
        throw DimensionError("compute_bounds_table: repair layer out of range");
    if (inputs.cols() != net.input_width())
        throw DimensionError("compute_bounds_table: input width mismatch");
    const WeightBox box = WeightBox::around(net.layer(repair_layer), delta_max);
    BoundsTable table;
    table.repair_layer = repair_layer;
    table.preact.resize(static_cast<size_t>(inputs.rows()));
    for (Eigen::Index n = 0; n < inputs.rows(); ++n)
        table.preact[static_cast<size_t>(n)] =
            sample_bounds(net, repair_layer, inputs.row(n).transpose(), box);
    return table;
}

BoundsTable compute_bounds_table(const Network& net, int repair_layer,
                                 const Eigen::MatrixXd& inputs, double delta_max) {
    if (repair_layer < 1 || repair_layer > net.depth())
        throw DimensionError("compute_bounds_table: repair layer out of range");
    if (inputs.cols() != net.input_width())
        throw DimensionError("compute_bounds_table: input width mismatch");
    const WeightBox box = WeightBox::around(net.layer(repair_layer), delta_max);
    BoundsTable table;
    table.repair_layer = repair_layer;
    table.preact.resize(static_cast<size_t>(inputs.rows()));
    const Eigen::Index n_rows = inputs.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index n = 0; n < n_rows; ++n)
        table.preact[static_cast<size_t>(n)] =
            sample_bounds(net, repair_layer, inputs.row(n).transpose(), box);
    return table;
}

} // namespace nnrep
