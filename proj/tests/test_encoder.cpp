#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "encoding_oracle.hpp"
#include "helpers.hpp"
#include "nnrep/encoder.hpp"
#include "nnrep/interval.hpp"

using namespace nnrep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int count_kind(const MiqpModel& m, VarKind kind) {
    int n = 0;
    for (const VarInfo& v : m.var_info)
        if (v.kind == kind) ++n;
    return n;
}

} // namespace

TEST_CASE("output-layer repair: structural variable count") {
    // 1 hidden layer, 2 nodes, repair layer 2 (the output layer): no ReLU
    // binaries, no selector group, vars = |w2| + |b2| + |y| + delta.
    MatrixXd w1(2, 1), w2(1, 2);
    w1 << 1.0, -1.0;
    w2 << 1.0, 1.0;
    const Network net({{w1, VectorXd::Zero(2)}, {w2, VectorXd::Zero(1)}});
    MatrixXd x(1, 1), t(1, 1);
    x << 1.0;
    t << 0.5;
    const Predicate p = make_global_bound(-2.0, 2.0);
    RepairOptions opts;
    opts.delta_max = 0.5;
    const BoundsTable bounds = compute_bounds_table(net, 2, x, opts.delta_max);
    const RepairEncoding enc = encode_repair(net, 2, x, t, p, opts, bounds);
    CHECK(enc.model.num_vars == 2 + 1 + 1 + 1);
    CHECK(enc.model.binaries.empty());
    CHECK(count_kind(enc.model, VarKind::Selector) == 0);
    CHECK(count_kind(enc.model, VarKind::ReluBinary) == 0);
}

TEST_CASE("encoding consistency: theta_init reproduces the forward pass") {
    std::mt19937_64 seeds(2024);
    for (int instance = 0; instance < 20; ++instance) {
        const unsigned long s = seeds();
        const Network net = test::random_network({3, 5, 5, 1}, s);
        const MatrixXd inputs = test::random_inputs(4, 3, s + 1);
        const MatrixXd targets = test::random_inputs(4, 1, s + 2);
        const Predicate p = make_global_bound(-4.0, 4.0);
        RepairOptions opts;
        opts.delta_max = 0.2;
        const int layer = 1 + static_cast<int>(s % 3);
        const BoundsTable bounds = compute_bounds_table(net, layer, inputs, opts.delta_max);
        const RepairEncoding enc = encode_repair(net, layer, inputs, targets, p, opts, bounds);

        const VectorXd assign = test::true_assignment(enc, net, inputs, p,
                                                      net.layer(layer).weights,
                                                      net.layer(layer).bias);
        CHECK(test::structural_infeasibility(enc.model, assign) <= 1e-8);
        // Outputs in the assignment equal the true forward pass.
        for (int i = 0; i < enc.model.num_vars; ++i) {
            const VarInfo& v = enc.model.var_info[static_cast<size_t>(i)];
            if (v.kind != VarKind::Output) continue;
            const VectorXd y = forward(net, inputs.row(v.sample).transpose()).y;
            CHECK(assign[i] == doctest::Approx(y[v.row]).epsilon(1e-8));
        }
        // Objective at theta_init: sum of squared losses, delta = 0.
        double expect = 0.0;
        for (int n = 0; n < inputs.rows(); ++n)
            expect += (forward(net, inputs.row(n).transpose()).y - targets.row(n).transpose())
                          .squaredNorm();
        CHECK(enc.model.objective_value(assign) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("encoding consistency: randomized weights inside the box (big-M soundness)") {
    const Network net = test::random_network({3, 4, 4, 1}, 5150);
    const MatrixXd inputs = test::random_inputs(3, 3, 5151);
    const MatrixXd targets = test::random_inputs(3, 1, 5152);
    const Predicate p = make_global_bound(-5.0, 5.0);
    RepairOptions opts;
    opts.delta_max = 0.25;
    const int layer = 2;
    const BoundsTable bounds = compute_bounds_table(net, layer, inputs, opts.delta_max);
    const RepairEncoding enc = encode_repair(net, layer, inputs, targets, p, opts, bounds);

    std::mt19937_64 rng(5153);
    std::uniform_real_distribution<double> uni(-opts.delta_max, opts.delta_max);
    for (int draw = 0; draw < 200; ++draw) {
        MatrixXd w = net.layer(layer).weights;
        VectorXd b = net.layer(layer).bias;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) += uni(rng);
            b[i] += uni(rng);
        }
        const VectorXd assign = test::true_assignment(enc, net, inputs, p, w, b);
        CHECK(test::structural_infeasibility(enc.model, assign) <= 1e-8);
    }
}

TEST_CASE("decode") {
    const Network net = test::random_network({2, 3, 1}, 31);
    const MatrixXd inputs = test::random_inputs(2, 2, 32);
    const MatrixXd targets = test::random_inputs(2, 1, 33);
    const Predicate p = make_global_bound(-3.0, 3.0);
    RepairOptions opts;
    opts.delta_max = 0.1;
    const BoundsTable bounds = compute_bounds_table(net, 1, inputs, opts.delta_max);
    const RepairEncoding enc = encode_repair(net, 1, inputs, targets, p, opts, bounds);

    SUBCASE("theta_init decodes to the original layer") {
        const VectorXd assign = test::true_assignment(enc, net, inputs, p,
                                                      net.layer(1).weights, net.layer(1).bias);
        const auto [w, b] = decode(enc, assign);
        CHECK(w == net.layer(1).weights);
        CHECK(b == net.layer(1).bias);
    }
    SUBCASE("uniform +0.05 perturbation decodes exactly") {
        MatrixXd w = net.layer(1).weights.array() + 0.05;
        VectorXd b = net.layer(1).bias.array() + 0.05;
        const VectorXd assign = test::true_assignment(enc, net, inputs, p, w, b);
        const auto [dw, db] = decode(enc, assign);
        CHECK((dw - net.layer(1).weights).cwiseAbs().minCoeff() == doctest::Approx(0.05));
        CHECK((dw - net.layer(1).weights).cwiseAbs().maxCoeff() == doctest::Approx(0.05));
        CHECK((db - net.layer(1).bias).cwiseAbs().maxCoeff() == doctest::Approx(0.05));
    }
    SUBCASE("incomplete assignment is rejected") {
        CHECK_THROWS_AS(decode(enc, VectorXd::Zero(3)), Error);
    }
}

TEST_CASE("inactive guards emit no selector binaries") {
    const Network net = test::random_network({2, 3, 1}, 41);
    // Guard on x0[0] in [10, 11]: never active for these samples.
    const Predicate p = make_avoid_box(0, 10.0, 11.0, -1.0, 1.0);
    const MatrixXd inputs = test::random_inputs(3, 2, 42); // entries in [-2, 2]
    const MatrixXd targets = test::random_inputs(3, 1, 43);
    RepairOptions opts;
    opts.delta_max = 0.1;
    const BoundsTable bounds = compute_bounds_table(net, 1, inputs, opts.delta_max);
    const RepairEncoding enc = encode_repair(net, 1, inputs, targets, p, opts, bounds);
    CHECK(count_kind(enc.model, VarKind::Selector) == 0);

    // An active guard produces one selector per disjunct in the group.
    const Predicate active = make_avoid_box(0, -5.0, 5.0, -0.2, 0.2);
    const RepairEncoding enc2 = encode_repair(net, 1, inputs, targets, active, opts, bounds);
    CHECK(count_kind(enc2.model, VarKind::Selector) == 2 * inputs.rows());
}

TEST_CASE("node subset: full subset equals full-layer encoding") {
    const Network net = test::random_network({3, 6, 1}, 51);
    const MatrixXd inputs = test::random_inputs(4, 3, 52);
    const MatrixXd targets = test::random_inputs(4, 1, 53);
    const Predicate p = make_global_bound(-4.0, 4.0);
    const BoundsTable bounds = compute_bounds_table(net, 1, inputs, 0.2);
    RepairOptions full;
    full.delta_max = 0.2;
    RepairOptions subset = full;
    subset.node_subset = std::vector<int>{0, 1, 2, 3, 4, 5};
    const RepairEncoding a = encode_repair(net, 1, inputs, targets, p, full, bounds);
    const RepairEncoding c = encode_repair(net, 1, inputs, targets, p, subset, bounds);
    CHECK(a.model.num_vars == c.model.num_vars);
    REQUIRE(a.model.rows.size() == c.model.rows.size());
    for (size_t r = 0; r < a.model.rows.size(); ++r) {
        CHECK(a.model.rows[r].lo == c.model.rows[r].lo);
        CHECK(a.model.rows[r].hi == c.model.rows[r].hi);
        CHECK(a.model.rows[r].terms == c.model.rows[r].terms);
    }
}

TEST_CASE("node subset: non-subset rows stay fixed") {
    const Network net = test::random_network({3, 6, 1}, 61);
    const MatrixXd inputs = test::random_inputs(4, 3, 62);
    const MatrixXd targets = test::random_inputs(4, 1, 63);
    const Predicate p = make_global_bound(-4.0, 4.0);
    RepairOptions opts;
    opts.delta_max = 0.2;
    opts.node_subset = std::vector<int>{1, 4};
    const BoundsTable bounds = compute_bounds_table(net, 1, inputs, opts.delta_max);
    const RepairEncoding enc = encode_repair(net, 1, inputs, targets, p, opts, bounds);
    CHECK(count_kind(enc.model, VarKind::Weight) == 2 * 3);
    CHECK(count_kind(enc.model, VarKind::Bias) == 2);
    CHECK_THROWS_AS([&] {
        RepairOptions bad;
        bad.node_subset = std::vector<int>{7};
        encode_repair(net, 1, inputs, targets, p, bad, bounds);
    }(), DimensionError);
}

TEST_CASE("l1 term adds auxiliary pairs into the objective") {
    const Network net = test::random_network({2, 2, 1}, 71);
    const MatrixXd inputs = test::random_inputs(1, 2, 72);
    const MatrixXd targets = test::random_inputs(1, 1, 73);
    const Predicate p = make_global_bound(-9.0, 9.0);
    RepairOptions opts;
    opts.delta_max = 0.3;
    opts.l1_weight = 0.5;
    const BoundsTable bounds = compute_bounds_table(net, 1, inputs, opts.delta_max);
    const RepairEncoding enc = encode_repair(net, 1, inputs, targets, p, opts, bounds);
    const int entries = 2 * 2 + 2; // weights + biases of layer 1
    CHECK(count_kind(enc.model, VarKind::L1Pos) == entries);
    CHECK(count_kind(enc.model, VarKind::L1Neg) == entries);
    // The perturbed assignment pays l1_weight * |delta| per entry.
    MatrixXd w = net.layer(1).weights.array() + 0.1;
    const VectorXd assign = test::true_assignment(enc, net, inputs, p, w, net.layer(1).bias);
    CHECK(test::structural_infeasibility(enc.model, assign) <= 1e-9);
    double loss = 0.0;
    {
        const Network upd = net.with_layer(1, w, net.layer(1).bias);
        loss = (forward(upd, inputs.row(0).transpose()).y - targets.row(0).transpose())
                   .squaredNorm();
    }
    const double expect = loss + 0.1 /*delta*/ + 0.5 * (0.1 * 4);
    CHECK(enc.model.objective_value(assign) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("bounds table mismatch is rejected") {
    const Network net = test::random_network({2, 3, 1}, 81);
    const MatrixXd inputs = test::random_inputs(2, 2, 82);
    const MatrixXd targets = test::random_inputs(2, 1, 83);
    const Predicate p = make_global_bound(-2.0, 2.0);
    RepairOptions opts;
    const BoundsTable wrong_layer = compute_bounds_table(net, 2, inputs, opts.delta_max);
    CHECK_THROWS_AS(encode_repair(net, 1, inputs, targets, p, opts, wrong_layer), Error);
}

TEST_CASE("verification cases: structure and negation") {
    // Identity-ish net: y = relu(x) - relu(-x) = x on [-1, 1].
    MatrixXd w1(2, 1), w2(1, 2);
    w1 << 1.0, -1.0;
    w2 << 1.0, -1.0;
    const Network net({{w1, VectorXd::Zero(2)}, {w2, VectorXd::Zero(1)}});
    InputBox box;
    box.lo = VectorXd::Constant(1, 0.0);
    box.hi = VectorXd::Constant(1, 1.0);

    SUBCASE("global bound explodes into one case per body constraint") {
        const auto cases = encode_verification(net, box, make_global_bound(-2.0, 2.0));
        CHECK(cases.size() == 2);
        for (const auto& c : cases) CHECK(c.model.num_vars > 0);
    }
    SUBCASE("avoid box has one case with guard rows") {
        const auto cases = encode_verification(net, box, make_avoid_box(0, 0.2, 0.6, -0.1, 0.4));
        CHECK(cases.size() == 1);
    }
    SUBCASE("unbounded box rejected") {
        InputBox bad = box;
        bad.hi[0] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(encode_verification(net, bad, make_global_bound(-1.0, 1.0)), Error);
    }
    SUBCASE("case explosion beyond 64 rejected") {
        // 7 unguarded disjuncts with 2 body constraints each: 2^7 = 128 cases.
        std::vector<Disjunct> ds;
        VectorXd ey(1);
        ey << 1.0;
        for (int i = 0; i < 7; ++i) {
            Disjunct d;
            d.body.push_back({VectorXd(), ey, static_cast<double>(i)});
            d.body.push_back({VectorXd(), -ey, static_cast<double>(i)});
            ds.push_back(d);
        }
        CHECK_THROWS_AS(encode_verification(net, box, Predicate(ds)), Error);
    }
}

TEST_CASE("LP export round trips through a text stream") {
    const Network net = test::random_network({2, 3, 1}, 91);
    const MatrixXd inputs = test::random_inputs(2, 2, 92);
    const MatrixXd targets = test::random_inputs(2, 1, 93);
    const Predicate p = make_avoid_box(0, -5.0, 5.0, -0.2, 0.2);
    RepairOptions opts;
    opts.delta_max = 0.2;
    const BoundsTable bounds = compute_bounds_table(net, 1, inputs, opts.delta_max);
    const RepairEncoding enc = encode_repair(net, 1, inputs, targets, p, opts, bounds);
    std::ostringstream os;
    enc.model.write_lp(os);
    const std::string lp = os.str();
    CHECK(lp.find("Minimize") != std::string::npos);
    CHECK(lp.find("Subject To") != std::string::npos);
    CHECK(lp.find("Bounds") != std::string::npos);
    CHECK(lp.find("Binaries") != std::string::npos);
    CHECK(lp.find("End") != std::string::npos);
    CHECK(lp.find("delta") != std::string::npos);
}
