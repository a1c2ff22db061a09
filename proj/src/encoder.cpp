#include "nnrep/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace nnrep {

namespace {

// Affine expression over model variables: terms + constant.
struct Affine {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;
};

// Emits the three big-M inequalities for x = max(0, z) with z in [lb, ub]
// (already widened). Interval-stable nodes are fixed without a binary.
// Returns the binary index or -1.
int encode_relu(MiqpModel& model, const Affine& z, int x_var, double lb, double ub,
                const VarInfo& binary_info) {
    if (lb > 0.0) {
        // Always active: x = z.
        LinearRow eq;
        eq.terms = z.terms;
        eq.terms.emplace_back(x_var, -1.0);
        eq.lo = eq.hi = -z.constant;
        model.add_row(std::move(eq));
        return -1;
    }
    if (ub <= 0.0) {
        // Always inactive: x = 0.
        model.var_hi[static_cast<size_t>(x_var)] = 0.0;
        return -1;
    }
    const int phi = model.add_var(binary_info, 0.0, 1.0);
    model.binaries.push_back(phi);
    // x >= z
    LinearRow ge;
    ge.terms = z.terms;
    ge.terms.emplace_back(x_var, -1.0);
    ge.hi = -z.constant;
    model.add_row(std::move(ge));
    // x <= z - lb(1 - phi)
    LinearRow ub_row;
    ub_row.terms.emplace_back(x_var, 1.0);
    for (const auto& [idx, coeff] : z.terms) ub_row.terms.emplace_back(idx, -coeff);
    ub_row.terms.emplace_back(phi, -lb);
    ub_row.hi = z.constant - lb;
    model.add_row(std::move(ub_row));
    // x <= ub * phi
    LinearRow cap;
    cap.terms.emplace_back(x_var, 1.0);
    cap.terms.emplace_back(phi, -ub);
    cap.hi = 0.0;
    model.add_row(std::move(cap));
    return phi;
}

double dot_short(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& v) {
    if (coeffs.size() == 0) return 0.0;
    return coeffs.dot(v.head(coeffs.size()));
}

// Largest positive slack a_y . y - (rhs - a_x . x0) can attain over the
// output interval box, used as the predicate-side big-M.
double predicate_big_m(const AffineConstraint& c, const Eigen::VectorXd& x0,
                       const std::vector<Interval>& y_bounds) {
    double worst = -c.rhs + dot_short(c.a_x, x0);
    for (Eigen::Index k = 0; k < c.a_y.size(); ++k) {
        const Interval& iv = y_bounds[static_cast<size_t>(k)];
        worst += c.a_y[k] >= 0.0 ? c.a_y[k] * iv.hi : c.a_y[k] * iv.lo;
    }
    return widen_hi(std::max(0.0, worst));
}

} // namespace

RepairEncoding encode_repair(const Network& net, int repair_layer,
                             const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                             const Predicate& p, const RepairOptions& opts,
                             const BoundsTable& bounds) {
    const int L = net.hidden_count();
    const int depth = net.depth();
    if (repair_layer < 1 || repair_layer > depth)
        throw DimensionError("encode_repair: repair layer out of range");
    if (inputs.rows() == 0) throw Error("encode_repair: need at least one sample");
    if (inputs.rows() != targets.rows())
        throw DimensionError("encode_repair: inputs/targets row mismatch");
    if (inputs.cols() != net.input_width() || targets.cols() != net.output_width())
        throw DimensionError("encode_repair: sample width mismatch");
    if (bounds.repair_layer != repair_layer ||
        bounds.preact.size() != static_cast<size_t>(inputs.rows()))
        throw Error("encode_repair: bounds table does not match this instance");
    if (opts.delta_max < 0.0) throw Error("encode_repair: delta_max must be >= 0");
    for (const Disjunct& d : p.disjuncts())
        for (const AffineConstraint& c : d.body) {
            if (c.a_y.size() > net.output_width())
                throw DimensionError("encode_repair: predicate output coefficients exceed width");
            if (c.a_x.size() > net.input_width())
                throw DimensionError("encode_repair: predicate input coefficients exceed width");
        }

    const Layer& target_layer = net.layer(repair_layer);
    const int width = static_cast<int>(target_layer.weights.rows());
    const int fan_in = static_cast<int>(target_layer.weights.cols());

    std::vector<int> subset;
    if (opts.node_subset) {
        std::set<int> uniq(opts.node_subset->begin(), opts.node_subset->end());
        for (int j : uniq)
            if (j < 0 || j >= width)
                throw DimensionError("encode_repair: node subset index out of range");
        subset.assign(uniq.begin(), uniq.end());
        if (subset.empty()) throw Error("encode_repair: node subset is empty");
    } else {
        subset.resize(static_cast<size_t>(width));
        std::iota(subset.begin(), subset.end(), 0);
    }
    std::vector<bool> in_subset(static_cast<size_t>(width), false);
    for (int j : subset) in_subset[static_cast<size_t>(j)] = true;

    RepairEncoding enc;
    enc.repair_layer = repair_layer;
    enc.w_init = target_layer.weights;
    enc.b_init = target_layer.bias;
    enc.node_subset = subset;
    MiqpModel& model = enc.model;

    // Theta variables, bounded by the weight box that justified the big-Ms.
    Eigen::MatrixXi w_var = Eigen::MatrixXi::Constant(width, fan_in, -1);
    Eigen::VectorXi b_var = Eigen::VectorXi::Constant(width, -1);
    for (int j : subset) {
        for (int i = 0; i < fan_in; ++i) {
            const double w0 = target_layer.weights(j, i);
            w_var(j, i) = model.add_var({VarKind::Weight, -1, repair_layer, j, i},
                                        w0 - opts.delta_max, w0 + opts.delta_max);
        }
        const double b0 = target_layer.bias[j];
        b_var[j] = model.add_var({VarKind::Bias, -1, repair_layer, j, -1},
                                 b0 - opts.delta_max, b0 + opts.delta_max);
    }
    const int delta_var =
        model.add_var({VarKind::Deviation, -1, -1, -1, -1}, 0.0, opts.delta_max);
    model.obj_lin[static_cast<size_t>(delta_var)] = 1.0;

    // Per-sample blocks, ordered by sample index then node index.
    const int n_samples = static_cast<int>(inputs.rows());
    for (int n = 0; n < n_samples; ++n) {
        const Eigen::VectorXd x0 = inputs.row(n).transpose();
        const Activations act = forward(net, x0);
        const Eigen::VectorXd& x_prev = act.post[static_cast<size_t>(repair_layer - 1)];

        // Node variables for layers repair_layer..L, plus outputs.
        std::vector<Eigen::VectorXi> node_var(static_cast<size_t>(L + 1));
        for (int i = repair_layer; i <= L; ++i) {
            const std::vector<Interval>& bl = bounds.layer_bounds(n, i);
            Eigen::VectorXi vars(net.layer_width(i));
            for (int j = 0; j < net.layer_width(i); ++j) {
                const double post_hi = std::max(0.0, widen_hi(bl[static_cast<size_t>(j)].hi));
                vars[j] = model.add_var({VarKind::Node, n, i, j, -1}, 0.0, post_hi);
            }
            node_var[static_cast<size_t>(i)] = vars;
        }
        const std::vector<Interval>& yb = bounds.output_bounds(n);
        Eigen::VectorXi y_var(net.output_width());
        for (int k = 0; k < net.output_width(); ++k)
            y_var[k] = model.add_var({VarKind::Output, n, depth, k, -1},
                                     widen_lo(yb[static_cast<size_t>(k)].lo),
                                     widen_hi(yb[static_cast<size_t>(k)].hi));

        // Repair layer: variable theta times constant prefix activation.
        auto repair_preact = [&](int j) {
            Affine z;
            if (in_subset[static_cast<size_t>(j)]) {
                for (int i = 0; i < fan_in; ++i)
                    if (x_prev[i] != 0.0) z.terms.emplace_back(w_var(j, i), x_prev[i]);
                z.terms.emplace_back(b_var[j], 1.0);
            } else {
                z.constant = target_layer.weights.row(j).dot(x_prev) + target_layer.bias[j];
            }
            return z;
        };

        if (repair_layer == depth) {
            // Output-layer repair: y = theta_w x_prev + theta_b, no ReLU.
            for (int k = 0; k < net.output_width(); ++k) {
                Affine z = repair_preact(k);
                LinearRow eq;
                eq.terms.emplace_back(y_var[k], 1.0);
                for (const auto& [idx, coeff] : z.terms) eq.terms.emplace_back(idx, -coeff);
                eq.lo = eq.hi = z.constant;
                model.add_row(std::move(eq));
            }
        } else {
            const std::vector<Interval>& bl = bounds.layer_bounds(n, repair_layer);
            for (int j = 0; j < net.layer_width(repair_layer); ++j) {
                const double lb = widen_lo(bl[static_cast<size_t>(j)].lo);
                const double ub = widen_hi(bl[static_cast<size_t>(j)].hi);
                const int phi =
                    encode_relu(model, repair_preact(j), node_var[static_cast<size_t>(repair_layer)][j],
                                lb, ub, {VarKind::ReluBinary, n, repair_layer, j, -1});
                if (phi >= 0)
                    model.binary_hint.emplace_back(
                        phi, act.pattern[static_cast<size_t>(repair_layer - 1)][static_cast<size_t>(j)]
                                 ? 1.0
                                 : 0.0);
            }
            // Fixed weights, variable activations through the remaining layers.
            for (int i = repair_layer + 1; i <= L; ++i) {
                const Layer& lay = net.layer(i);
                const std::vector<Interval>& bi = bounds.layer_bounds(n, i);
                for (int j = 0; j < net.layer_width(i); ++j) {
                    Affine z;
                    z.constant = lay.bias[j];
                    for (int k = 0; k < static_cast<int>(lay.weights.cols()); ++k)
                        if (lay.weights(j, k) != 0.0)
                            z.terms.emplace_back(node_var[static_cast<size_t>(i - 1)][k],
                                                 lay.weights(j, k));
                    const double lb = widen_lo(bi[static_cast<size_t>(j)].lo);
                    const double ub = widen_hi(bi[static_cast<size_t>(j)].hi);
                    const int phi = encode_relu(model, z, node_var[static_cast<size_t>(i)][j], lb,
                                                ub, {VarKind::ReluBinary, n, i, j, -1});
                    if (phi >= 0)
                        model.binary_hint.emplace_back(
                            phi,
                            act.pattern[static_cast<size_t>(i - 1)][static_cast<size_t>(j)] ? 1.0
                                                                                            : 0.0);
                }
            }
            // Output equality: y = W_{L+1} x^L + b.
            const Layer& out = net.layer(depth);
            for (int k = 0; k < net.output_width(); ++k) {
                LinearRow eq;
                eq.terms.emplace_back(y_var[k], 1.0);
                for (int j = 0; j < static_cast<int>(out.weights.cols()); ++j)
                    if (out.weights(k, j) != 0.0)
                        eq.terms.emplace_back(node_var[static_cast<size_t>(L)][j],
                                              -out.weights(k, j));
                eq.lo = eq.hi = out.bias[k];
                model.add_row(std::move(eq));
            }
        }

        // Predicate rows: guards are resolved on the constant input.
        const auto& groups = p.guard_groups();
        for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
            if (!p.guard_active(g, x0)) continue;
            const std::vector<int>& members = groups[static_cast<size_t>(g)];
            if (members.size() == 1) {
                const Disjunct& d = p.disjuncts()[static_cast<size_t>(members.front())];
                for (const AffineConstraint& c : d.body) {
                    LinearRow row;
                    row.tag = RowTag::Predicate;
                    for (Eigen::Index k = 0; k < c.a_y.size(); ++k)
                        if (c.a_y[k] != 0.0) row.terms.emplace_back(y_var[k], c.a_y[k]);
                    row.hi = c.rhs - dot_short(c.a_x, x0);
                    model.add_row(std::move(row));
                }
                continue;
            }
            LinearRow cover;
            cover.tag = RowTag::Predicate;
            cover.lo = 1.0;
            double best_slack = std::numeric_limits<double>::infinity();
            int best_disjunct = -1;
            std::vector<int> selectors;
            for (int di : members) {
                const Disjunct& d = p.disjuncts()[static_cast<size_t>(di)];
                const int sel = model.add_var({VarKind::Selector, n, -1, di, -1}, 0.0, 1.0);
                model.binaries.push_back(sel);
                selectors.push_back(sel);
                cover.terms.emplace_back(sel, 1.0);
                double slack = 0.0;
                for (const AffineConstraint& c : d.body) {
                    const double m = predicate_big_m(c, x0, yb);
                    LinearRow row;
                    row.tag = RowTag::Predicate;
                    for (Eigen::Index k = 0; k < c.a_y.size(); ++k)
                        if (c.a_y[k] != 0.0) row.terms.emplace_back(y_var[k], c.a_y[k]);
                    row.terms.emplace_back(sel, m);
                    row.hi = c.rhs - dot_short(c.a_x, x0) + m;
                    model.add_row(std::move(row));
                    slack = std::max(slack, c.positive_slack(x0, act.y));
                }
                if (slack < best_slack) {
                    best_slack = slack;
                    best_disjunct = static_cast<int>(selectors.size()) - 1;
                }
            }
            model.add_row(std::move(cover));
            for (int s = 0; s < static_cast<int>(selectors.size()); ++s)
                model.binary_hint.emplace_back(selectors[static_cast<size_t>(s)],
                                               s == best_disjunct ? 1.0 : 0.0);
        }

        // Objective: ||y_n - t_n||^2.
        for (int k = 0; k < net.output_width(); ++k) {
            const double t = targets(n, k);
            model.obj_quad[static_cast<size_t>(y_var[k])] += 1.0;
            model.obj_lin[static_cast<size_t>(y_var[k])] += -2.0 * t;
            model.obj_const += t * t;
        }
    }

    // Deviation rows: |theta - theta_init| <= delta entrywise.
    auto add_deviation = [&](int var, double init) {
        LinearRow up;
        up.tag = RowTag::Deviation;
        up.terms.emplace_back(var, 1.0);
        up.terms.emplace_back(delta_var, -1.0);
        up.hi = init;
        model.add_row(std::move(up));
        LinearRow dn;
        dn.tag = RowTag::Deviation;
        dn.terms.emplace_back(var, 1.0);
        dn.terms.emplace_back(delta_var, 1.0);
        dn.lo = init;
        model.add_row(std::move(dn));
    };
    for (int j : subset) {
        for (int i = 0; i < fan_in; ++i) add_deviation(w_var(j, i), target_layer.weights(j, i));
        add_deviation(b_var[j], target_layer.bias[j]);
    }

    // Optional l1 sparsity term via nonnegative auxiliary pairs.
    if (opts.l1_weight > 0.0) {
        int entry = 0;
        auto add_l1 = [&](int var, double init) {
            const double inf = std::numeric_limits<double>::infinity();
            const int up = model.add_var({VarKind::L1Pos, -1, repair_layer, entry, -1}, 0.0, inf);
            const int dn = model.add_var({VarKind::L1Neg, -1, repair_layer, entry, -1}, 0.0, inf);
            ++entry;
            LinearRow split;
            split.tag = RowTag::Sparsity;
            split.terms.emplace_back(var, 1.0);
            split.terms.emplace_back(up, -1.0);
            split.terms.emplace_back(dn, 1.0);
            split.lo = split.hi = init;
            model.add_row(std::move(split));
            model.obj_lin[static_cast<size_t>(up)] = opts.l1_weight;
            model.obj_lin[static_cast<size_t>(dn)] = opts.l1_weight;
        };
        for (int j : subset) {
            for (int i = 0; i < fan_in; ++i) add_l1(w_var(j, i), target_layer.weights(j, i));
            add_l1(b_var[j], target_layer.bias[j]);
        }
    }

    model.validate();
    return enc;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> decode(const RepairEncoding& enc,
                                                   const Eigen::VectorXd& assignment) {
    if (assignment.size() != enc.model.num_vars)
        throw Error("decode: assignment does not cover all variables");
    Eigen::MatrixXd w = enc.w_init;
    Eigen::VectorXd b = enc.b_init;
    for (int i = 0; i < enc.model.num_vars; ++i) {
        const VarInfo& v = enc.model.var_info[static_cast<size_t>(i)];
        if (v.kind == VarKind::Weight)
            w(v.row, v.col) = assignment[i];
        else if (v.kind == VarKind::Bias)
            b[v.row] = assignment[i];
    }
    return {std::move(w), std::move(b)};
}

std::vector<VerificationCase> encode_verification(const Network& net, const InputBox& box,
                                                  const Predicate& p) {
    const int L = net.hidden_count();
    const int depth = net.depth();
    if (box.lo.size() != net.input_width() || box.hi.size() != net.input_width())
        throw DimensionError("encode_verification: box width mismatch");
    for (Eigen::Index i = 0; i < box.lo.size(); ++i) {
        if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]))
            throw Error("encode_verification: box must be bounded");
        if (box.lo[i] > box.hi[i]) throw Error("encode_verification: inverted box");
    }

    // Case count check up front.
    const auto& groups = p.guard_groups();
    size_t total_cases = 0;
    for (const std::vector<int>& members : groups) {
        size_t cases = 1;
        for (int di : members) cases *= p.disjuncts()[static_cast<size_t>(di)].body.size();
        total_cases += cases;
    }
    if (total_cases > 64)
        throw Error("encode_verification: predicate expands to " + std::to_string(total_cases) +
                    " negation cases (limit 64)");
    for (const Disjunct& d : p.disjuncts()) {
        for (const AffineConstraint& c : d.body)
            if (c.a_y.size() > net.output_width() || c.a_x.size() > net.input_width())
                throw DimensionError("encode_verification: predicate coefficients exceed width");
        for (const AffineConstraint& c : d.guard)
            if (c.a_x.size() > net.input_width())
                throw DimensionError("encode_verification: guard coefficients exceed width");
    }

    // Interval bounds through the fixed network, from the input box.
    std::vector<Interval> cur(static_cast<size_t>(net.input_width()));
    for (Eigen::Index i = 0; i < box.lo.size(); ++i)
        cur[static_cast<size_t>(i)] = Interval{box.lo[i], box.hi[i]};
    std::vector<std::vector<Interval>> preact;
    for (int l = 1; l <= depth; ++l) {
        cur = propagate_bounds(cur, net.layer(l).weights, net.layer(l).bias);
        preact.push_back(cur);
        for (Interval& iv : cur) {
            iv.lo = std::max(0.0, iv.lo);
            iv.hi = std::max(0.0, iv.hi);
        }
    }

    // Base model: network encoding with x0 variable in the box.
    MiqpModel base;
    Eigen::VectorXi x0_var(net.input_width());
    for (int i = 0; i < net.input_width(); ++i)
        x0_var[i] = base.add_var({VarKind::Input, -1, 0, i, -1}, box.lo[i], box.hi[i]);
    std::vector<Eigen::VectorXi> node_var(static_cast<size_t>(L + 1));
    Eigen::VectorXi prev = x0_var;
    for (int l = 1; l <= L; ++l) {
        const Layer& lay = net.layer(l);
        const std::vector<Interval>& bl = preact[static_cast<size_t>(l - 1)];
        Eigen::VectorXi vars(net.layer_width(l));
        for (int j = 0; j < net.layer_width(l); ++j) {
            const double post_hi = std::max(0.0, widen_hi(bl[static_cast<size_t>(j)].hi));
            vars[j] = base.add_var({VarKind::Node, 0, l, j, -1}, 0.0, post_hi);
            Affine z;
            z.constant = lay.bias[j];
            for (int k = 0; k < static_cast<int>(lay.weights.cols()); ++k)
                if (lay.weights(j, k) != 0.0) z.terms.emplace_back(prev[k], lay.weights(j, k));
            encode_relu(base, z, vars[j], widen_lo(bl[static_cast<size_t>(j)].lo),
                        widen_hi(bl[static_cast<size_t>(j)].hi), {VarKind::ReluBinary, 0, l, j, -1});
        }
        node_var[static_cast<size_t>(l)] = vars;
        prev = vars;
    }
    const std::vector<Interval>& yb = preact.back();
    Eigen::VectorXi y_var(net.output_width());
    const Layer& out = net.layer(depth);
    for (int k = 0; k < net.output_width(); ++k) {
        y_var[k] = base.add_var({VarKind::Output, 0, depth, k, -1},
                                widen_lo(yb[static_cast<size_t>(k)].lo),
                                widen_hi(yb[static_cast<size_t>(k)].hi));
        LinearRow eq;
        eq.terms.emplace_back(y_var[k], 1.0);
        for (int j = 0; j < static_cast<int>(out.weights.cols()); ++j)
            if (out.weights(k, j) != 0.0) eq.terms.emplace_back(prev[j], -out.weights(k, j));
        eq.lo = eq.hi = out.bias[k];
        base.add_row(std::move(eq));
    }

    auto add_affine_row = [&](MiqpModel& m, const AffineConstraint& c, double lo, double hi) {
        LinearRow row;
        row.tag = RowTag::Predicate;
        for (Eigen::Index i = 0; i < c.a_x.size(); ++i)
            if (c.a_x[i] != 0.0) row.terms.emplace_back(x0_var[static_cast<int>(i)], c.a_x[i]);
        for (Eigen::Index k = 0; k < c.a_y.size(); ++k)
            if (c.a_y[k] != 0.0) row.terms.emplace_back(y_var[static_cast<int>(k)], c.a_y[k]);
        row.lo = lo;
        row.hi = hi;
        m.add_row(std::move(row));
    };

    // Largest value a_x.x0 + a_y.y - rhs can attain over the interval boxes;
    // used to bound the margin variable.
    auto margin_cap = [&](const AffineConstraint& c) {
        double cap = -c.rhs;
        for (Eigen::Index i = 0; i < c.a_x.size(); ++i)
            cap += c.a_x[i] >= 0.0 ? c.a_x[i] * box.hi[i] : c.a_x[i] * box.lo[i];
        for (Eigen::Index k = 0; k < c.a_y.size(); ++k) {
            const Interval& iv = yb[static_cast<size_t>(k)];
            cap += c.a_y[k] >= 0.0 ? c.a_y[k] * widen_hi(iv.hi) : c.a_y[k] * widen_lo(iv.lo);
        }
        return cap;
    };

    // Enumerate the violation cases: guard held, every disjunct falsified by
    // one reversed body constraint. Each case maximizes a shared violation
    // margin s with s <= a.v - rhs for every reversed constraint, so the
    // case has a violating input iff the optimal margin exceeds the
    // strictness epsilon. The margin objective gives branch-and-bound a real
    // pruning bound, unlike a plain feasibility encoding.
    std::vector<VerificationCase> cases;
    const double inf = std::numeric_limits<double>::infinity();
    for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
        const std::vector<int>& members = groups[static_cast<size_t>(g)];
        std::vector<size_t> choice(members.size(), 0);
        while (true) {
            VerificationCase vc;
            vc.model = base;
            const Disjunct& rep = p.disjuncts()[static_cast<size_t>(members.front())];
            for (const AffineConstraint& gc : rep.guard)
                add_affine_row(vc.model, gc, -inf, gc.rhs);
            double cap = inf;
            for (size_t m = 0; m < members.size(); ++m)
                cap = std::min(cap,
                               margin_cap(p.disjuncts()[static_cast<size_t>(members[m])].body[choice[m]]));
            const int slack = vc.model.add_var({VarKind::Slack, -1, -1, 0, -1},
                                               -std::max(1.0, std::abs(cap)) - 1.0,
                                               std::max(cap, 0.0));
            vc.model.obj_lin[static_cast<size_t>(slack)] = -1.0; // maximize the margin
            std::string desc = "group " + std::to_string(g) + ": reverse";
            for (size_t m = 0; m < members.size(); ++m) {
                const Disjunct& d = p.disjuncts()[static_cast<size_t>(members[m])];
                const AffineConstraint& c = d.body[choice[m]];
                // a.v - s >= rhs i.e. s <= violation margin of this constraint.
                LinearRow row;
                row.tag = RowTag::Predicate;
                for (Eigen::Index i = 0; i < c.a_x.size(); ++i)
                    if (c.a_x[i] != 0.0)
                        row.terms.emplace_back(x0_var[static_cast<int>(i)], c.a_x[i]);
                for (Eigen::Index k = 0; k < c.a_y.size(); ++k)
                    if (c.a_y[k] != 0.0)
                        row.terms.emplace_back(y_var[static_cast<int>(k)], c.a_y[k]);
                row.terms.emplace_back(slack, -1.0);
                row.lo = c.rhs;
                vc.model.add_row(std::move(row));
                desc += " d" + std::to_string(members[m]) + "/c" + std::to_string(choice[m]);
            }
            vc.description = std::move(desc);
            vc.model.validate();
            cases.push_back(std::move(vc));
            // Advance the per-disjunct constraint choice.
            size_t m = 0;
            for (; m < members.size(); ++m) {
                if (++choice[m] < p.disjuncts()[static_cast<size_t>(members[m])].body.size()) break;
                choice[m] = 0;
            }
            if (m == members.size()) break;
        }
    }
    return cases;
}

} // namespace nnrep
