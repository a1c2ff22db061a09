#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "enumeration_oracle.hpp"
#include "helpers.hpp"
#include "nnrep/encoder.hpp"
#include "nnrep/interval.hpp"
#include "nnrep/solver.hpp"

using namespace nnrep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// min (x-0.5)^2 + y s.t. y >= x, y in {0,1}, x in [0,1].
MiqpModel toy_miqp() {
    MiqpModel m;
    const int x = m.add_var({VarKind::Node, 0, 0, 0, -1}, 0.0, 1.0);
    const int y = m.add_var({VarKind::ReluBinary, 0, 0, 0, -1}, 0.0, 1.0);
    m.binaries.push_back(y);
    m.obj_quad[static_cast<size_t>(x)] = 1.0;
    m.obj_lin[static_cast<size_t>(x)] = -1.0;
    m.obj_const = 0.25;
    m.obj_lin[static_cast<size_t>(y)] = 1.0;
    LinearRow row;
    row.terms = {{x, 1.0}, {y, -1.0}};
    row.hi = 0.0;
    m.add_row(std::move(row));
    return m;
}

RepairEncoding small_repair_instance(unsigned long seed, int samples, int width) {
    const Network net = test::random_network({2, width, 1}, seed);
    const MatrixXd inputs = test::random_inputs(samples, 2, seed + 1);
    const MatrixXd targets = test::random_inputs(samples, 1, seed + 2);
    const Predicate p = make_global_bound(-1.0, 1.0);
    RepairOptions opts;
    opts.delta_max = 0.5;
    const BoundsTable bounds = compute_bounds_table(net, 1, inputs, opts.delta_max);
    return encode_repair(net, 1, inputs, targets, p, opts, bounds);
}

} // namespace

TEST_CASE("toy MIQP: enumate y by hand") {
    // y = 1: min (x-0.5)^2 + 1 = 1. y = 0: x <= 0 -> x = 0, obj 0.25.
    const MiqpModel m = toy_miqp();
    SolveParams params;
    const SolveResult r = solve(m, params);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(0.25).epsilon(1e-6));
    REQUIRE(r.assignment);
    CHECK((*r.assignment)[1] == 0.0);
}

TEST_CASE("binaries fixed by constraints reduce to the QP result") {
    MiqpModel m = toy_miqp();
    LinearRow fix;
    fix.terms = {{1, 1.0}};
    fix.lo = fix.hi = 1.0;
    m.add_row(std::move(fix));
    SolveParams params;
    const SolveResult r = solve(m, params);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));

    const QpResult q = qp_solve([&] {
        QpProblem p = relax_model(m);
        p.var_lo[1] = 1.0;
        return p;
    }());
    CHECK(r.objective == doctest::Approx(q.objective).epsilon(1e-6));
}

TEST_CASE("repair encodings with <= 8 binaries match exhaustive enumeration") {
    for (unsigned long seed : {101ul, 202ul, 303ul}) {
        const RepairEncoding enc = small_repair_instance(seed, 2, 4);
        REQUIRE(enc.model.binaries.size() <= 8);
        SolveParams params;
        const SolveResult r = solve(enc.model, params);
        const double oracle = test::enumerate_optimum(enc.model);
        if (r.status == SolveStatus::Optimal) {
            CHECK(r.objective == doctest::Approx(oracle).epsilon(1e-5));
        } else {
            CHECK(r.status == SolveStatus::Infeasible);
            CHECK(oracle == std::numeric_limits<double>::infinity());
        }
    }
}

TEST_CASE("best bound never exceeds the incumbent at termination") {
    const RepairEncoding enc = small_repair_instance(404, 3, 4);
    SolveParams params;
    const SolveResult r = solve(enc.model, params);
    if (r.assignment) {
        CHECK(r.best_bound <= r.objective + 1e-9);
        const double gap_tol = std::max(params.abs_gap, params.rel_gap * std::abs(r.objective));
        if (r.status == SolveStatus::Optimal) CHECK(r.objective - r.best_bound <= gap_tol + 1e-12);
    }
}

TEST_CASE("returned assignments satisfy the model after binary snapping") {
    const RepairEncoding enc = small_repair_instance(505, 3, 5);
    SolveParams params;
    const SolveResult r = solve(enc.model, params);
    REQUIRE(r.assignment);
    VectorXd x = *r.assignment;
    for (int b : enc.model.binaries) {
        CHECK(std::min(std::abs(x[b]), std::abs(1.0 - x[b])) <= params.integrality_tol);
        x[b] = x[b] >= 0.5 ? 1.0 : 0.0;
    }
    CHECK(enc.model.max_infeasibility(x) <= 1e-6);
}

TEST_CASE("determinism: identical runs produce identical traces") {
    const RepairEncoding enc = small_repair_instance(606, 3, 6);
    SolveParams params;
    params.deterministic = true;
    params.seed = 1;
    const SolveResult a = solve(enc.model, params);
    const SolveResult b = solve(enc.model, params);
    CHECK(a.node_count == b.node_count);
    CHECK(a.objective == b.objective);
    CHECK(a.best_bound == b.best_bound);
    REQUIRE(a.assignment.has_value() == b.assignment.has_value());
    if (a.assignment) CHECK(*a.assignment == *b.assignment);
}

TEST_CASE("pseudo-cost branching reaches the same optimum") {
    const RepairEncoding enc = small_repair_instance(707, 3, 5);
    SolveParams most, pseudo;
    pseudo.branching = Branching::PseudoCost;
    const SolveResult a = solve(enc.model, most);
    const SolveResult b = solve(enc.model, pseudo);
    REQUIRE(a.status == b.status);
    if (a.assignment) CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
}

TEST_CASE("check_feasibility") {
    SUBCASE("contradictory constraints are infeasible") {
        MiqpModel m;
        const int x = m.add_var({VarKind::Node, 0, 0, 0, -1}, -10.0, 10.0);
        LinearRow a, b;
        a.terms = {{x, 1.0}};
        a.hi = 0.0;
        b.terms = {{x, 1.0}};
        b.lo = 1.0;
        m.add_row(std::move(a));
        m.add_row(std::move(b));
        SolveParams params;
        CHECK(check_feasibility(m, params).status == FeasStatus::Infeasible);
    }
    SUBCASE("feasible LP with no binaries resolves in the root") {
        MiqpModel m;
        const int x = m.add_var({VarKind::Node, 0, 0, 0, -1}, 0.0, 1.0);
        LinearRow a;
        a.terms = {{x, 1.0}};
        a.lo = 0.5;
        m.add_row(std::move(a));
        SolveParams params;
        const FeasibilityResult r = check_feasibility(m, params);
        REQUIRE(r.status == FeasStatus::Feasible);
        CHECK((*r.assignment)[x] >= 0.5 - 1e-7);
        CHECK(r.node_count <= 1);
    }
    SUBCASE("node limit yields Unknown, full search proves Infeasible") {
        // x - 0.5 z = 0.3 with x in [0.4, 0.45]: the relaxation admits
        // z in [0.2, 0.3] but both integral choices put x out of bounds.
        MiqpModel m;
        const int x = m.add_var({VarKind::Node, 0, 0, 0, -1}, 0.4, 0.45);
        const int z = m.add_var({VarKind::ReluBinary, 0, 0, 0, -1}, 0.0, 1.0);
        m.binaries.push_back(z);
        LinearRow row;
        row.terms = {{x, 1.0}, {z, -0.5}};
        row.lo = row.hi = 0.3;
        m.add_row(std::move(row));

        SolveParams tight;
        tight.node_limit = 1; // stop right after the fractional root
        CHECK(check_feasibility(m, tight).status == FeasStatus::Unknown);

        SolveParams full;
        CHECK(check_feasibility(m, full).status == FeasStatus::Infeasible);
    }
}

TEST_CASE("backend interface routes through the builtin engine") {
    MiqpBackend& backend = default_backend();
    CHECK(backend.name() == "builtin-bnb");
    const MiqpModel m = toy_miqp();
    SolveParams params;
    const SolveResult r = backend.solve(m, params);
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(0.25).epsilon(1e-6));
}
