#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "nnrep/interval.hpp"
#include "nnrep/encoder.hpp"
#include "nnrep/metrics.hpp"
#include "nnrep/solver.hpp"

using namespace nnrep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("identity repair: MAE 0, IB 0, RE null") {
    const Network net = test::random_network({2, 4, 1}, 1);
    const MatrixXd test_in = test::random_inputs(20, 2, 2);
    const MatrixXd test_tg = test::random_inputs(20, 1, 3);
    const Predicate p = make_global_bound(-100.0, 100.0); // nothing violates
    const RepairReport rep = evaluate_repair(net, net, test_in, test_tg, p, test_in);
    CHECK(rep.mae == 0.0);
    CHECK(rep.introduced_bugs_pct == 0.0);
    CHECK_FALSE(rep.repair_efficacy_pct.has_value());
    CHECK(rep.to_json().find("\"repair_efficacy_pct\": null") != std::string::npos);
}

TEST_CASE("hand-built 3-sample case: RE 100, IB 0") {
    // Original net: y = x (identity via two ReLUs). Repaired net: y = 0.5 x.
    MatrixXd w1(2, 1), w2(1, 2);
    w1 << 1.0, -1.0;
    w2 << 1.0, -1.0;
    const Network original({{w1, VectorXd::Zero(2)}, {w2, VectorXd::Zero(1)}});
    MatrixXd w2r(1, 2);
    w2r << 0.5, -0.5;
    const Network repaired = original.with_layer(2, w2r, VectorXd::Zero(1));

    // Bound |y| <= 1: original violates at x = 1.6 and x = -1.8, repaired
    // fixes both (0.8, 0.9) and breaks nothing.
    MatrixXd test_in(3, 1);
    test_in << 1.6, -1.8, 0.4;
    MatrixXd test_tg = MatrixXd::Zero(3, 1);
    const Predicate p = make_global_bound(-1.0, 1.0);
    const RepairReport rep = evaluate_repair(original, repaired, test_in, test_tg, p, test_in);
    REQUIRE(rep.repair_efficacy_pct.has_value());
    CHECK(*rep.repair_efficacy_pct == doctest::Approx(100.0));
    CHECK(rep.introduced_bugs_pct == doctest::Approx(0.0));
    CHECK(rep.mae == doctest::Approx((0.8 + 0.9 + 0.2) / 3.0));
}

TEST_CASE("violation points: degrees match the predicate module") {
    const Network original = test::random_network({2, 5, 1}, 7, 2.0);
    const Network repaired = test::random_network({2, 5, 1}, 8, 2.0);
    const MatrixXd test_in = test::random_inputs(40, 2, 9);
    const MatrixXd repair_in = test::random_inputs(6, 2, 10);
    const Predicate p = make_global_bound(-0.5, 0.5);
    const RepairReport rep =
        evaluate_repair(original, repaired, test_in, MatrixXd(0, 1), p, repair_in);
    REQUIRE(rep.violation_points.size() == 40);
    for (int n = 0; n < 40; ++n) {
        const VectorXd x0 = test_in.row(n).transpose();
        const double deg = violation_degree(p, x0, forward(repaired, x0).y).value;
        CHECK(rep.violation_points[static_cast<size_t>(n)].degree == doctest::Approx(deg));
        double nearest = 1e300;
        for (int r = 0; r < repair_in.rows(); ++r)
            nearest = std::min(nearest, (test_in.row(n) - repair_in.row(r)).norm());
        CHECK(rep.violation_points[static_cast<size_t>(n)].distance == doctest::Approx(nearest));
    }
    // CSV has one line per point plus the header.
    const std::string csv = rep.violation_points_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 41);
}

TEST_CASE("RE on the repair set is 100 whenever the solver returned an incumbent") {
    const Network net = test::random_network({2, 5, 1}, 20, 2.0);
    const MatrixXd inputs = test::random_inputs(8, 2, 21);
    const MatrixXd targets = MatrixXd::Zero(8, 1);
    const Predicate p = make_global_bound(-1.0, 1.0);

    // Make sure the fixture actually violates somewhere.
    const MatrixXd y0 = forward_outputs(net, inputs);
    const ViolationScan before = scan_violations(p, inputs, y0);
    REQUIRE(before.violations > 0);

    RepairOptions opts;
    opts.delta_max = 1.0;
    const BoundsTable bounds = compute_bounds_table(net, 1, inputs, opts.delta_max);
    const RepairEncoding enc = encode_repair(net, 1, inputs, targets, p, opts, bounds);
    SolveParams params;
    const SolveResult res = solve(enc.model, params);
    REQUIRE(res.assignment);
    const auto [w, b] = decode(enc, *res.assignment);
    const Network repaired = net.with_layer(1, w, b);
    const RepairReport rep = evaluate_repair(net, repaired, inputs, targets, p, inputs);
    REQUIRE(rep.repair_efficacy_pct.has_value());
    CHECK(*rep.repair_efficacy_pct == doctest::Approx(100.0));
}

TEST_CASE("input validation") {
    const Network a = test::random_network({2, 3, 1}, 30);
    const Network b = test::random_network({3, 3, 1}, 31);
    const Predicate p = make_global_bound(-1.0, 1.0);
    CHECK_THROWS_AS(evaluate_repair(a, b, MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 1), p,
                                    MatrixXd::Zero(1, 2)),
                    DimensionError);
    CHECK_THROWS_AS(evaluate_repair(a, a, MatrixXd(0, 2), MatrixXd(0, 1), p, MatrixXd::Zero(1, 2)),
                    Error);
}
