#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nnrep/qp.hpp"

using namespace nnrep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem box_qp(const VectorXd& quad, const VectorXd& q, const VectorXd& lo,
                 const VectorXd& hi) {
    QpProblem p;
    p.quad = quad;
    p.q = q;
    p.A.resize(0, static_cast<int>(q.size()));
    p.row_lo.resize(0);
    p.row_hi.resize(0);
    p.var_lo = lo;
    p.var_hi = hi;
    return p;
}

// Long-run projected gradient on a box-constrained diagonal QP; independent
// of the operator-splitting path.
VectorXd projected_gradient(const QpProblem& p, int iters) {
    VectorXd x = 0.5 * (p.var_lo + p.var_hi);
    const double lipschitz = 2.0 * p.quad.maxCoeff() + 1e-9;
    const double step = 1.0 / std::max(lipschitz, 1e-6);
    for (int k = 0; k < iters; ++k) {
        const VectorXd grad = 2.0 * p.quad.cwiseProduct(x) + p.q;
        x = (x - step * grad).cwiseMax(p.var_lo).cwiseMin(p.var_hi);
    }
    return x;
}

double objective(const QpProblem& p, const VectorXd& x) {
    return p.quad.cwiseProduct(x).dot(x) + p.q.dot(x) + p.c0;
}

} // namespace

TEST_CASE("scalar box QP") {
    QpProblem p = box_qp(VectorXd::Constant(1, 1.0), VectorXd::Constant(1, -1.0),
                         VectorXd::Constant(1, 0.0), VectorXd::Constant(1, 1.0));
    p.c0 = 0.25; // (x - 0.5)^2
    const QpResult r = qp_solve(p);
    REQUIRE(r.status == QpStatus::Solved);
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("equality-constrained symmetric QP") {
    QpProblem p;
    p.quad = VectorXd::Constant(2, 1.0);
    p.q = VectorXd::Zero(2);
    p.A.resize(1, 2);
    std::vector<Eigen::Triplet<double>> t{{0, 0, 1.0}, {0, 1, 1.0}};
    p.A.setFromTriplets(t.begin(), t.end());
    p.row_lo = VectorXd::Constant(1, 1.0);
    p.row_hi = VectorXd::Constant(1, 1.0);
    p.var_lo = VectorXd::Constant(2, -kInf);
    p.var_hi = VectorXd::Constant(2, kInf);
    const QpResult r = qp_solve(p);
    REQUIRE(r.status == QpStatus::Solved);
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.objective == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("random 20-var box QPs match a projected-gradient oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uq(0.1, 2.0), ul(-2.0, 0.0), uh(0.2, 2.0),
        uc(-3.0, 3.0);
    for (int instance = 0; instance < 10; ++instance) {
        const int n = 20;
        VectorXd quad(n), q(n), lo(n), hi(n);
        for (int i = 0; i < n; ++i) {
            quad[i] = uq(rng);
            q[i] = uc(rng);
            lo[i] = ul(rng);
            hi[i] = lo[i] + uh(rng);
        }
        const QpProblem p = box_qp(quad, q, lo, hi);
        const QpResult r = qp_solve(p);
        REQUIRE(r.status == QpStatus::Solved);
        const VectorXd oracle = projected_gradient(p, 200000);
        CHECK(r.objective == doctest::Approx(objective(p, oracle)).epsilon(1e-5));
    }
}

TEST_CASE("KKT residual contract on structured instances") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int instance = 0; instance < 5; ++instance) {
        const int n = 15, m = 10;
        QpProblem p;
        p.quad = VectorXd::Zero(n);
        for (int i = 0; i < n / 2; ++i) p.quad[i] = std::abs(uni(rng)) + 0.05;
        p.q = VectorXd::NullaryExpr(n, [&] { return uni(rng); });
        std::vector<Eigen::Triplet<double>> trips;
        p.row_lo.resize(m);
        p.row_hi.resize(m);
        for (int r = 0; r < m; ++r) {
            for (int j = 0; j < 4; ++j)
                trips.emplace_back(r, static_cast<int>(rng() % n), uni(rng));
            const double c = uni(rng);
            p.row_lo[r] = c - 0.5;
            p.row_hi[r] = c + 1.5;
        }
        p.A.resize(m, n);
        p.A.setFromTriplets(trips.begin(), trips.end());
        p.var_lo = VectorXd::Constant(n, -2.0);
        p.var_hi = VectorXd::Constant(n, 2.0);
        const QpResult r = qp_solve(p);
        REQUIRE(r.status == QpStatus::Solved);
        CHECK(r.primal_residual <= 1e-7);
        CHECK(r.dual_residual <= 1e-6);
        CHECK(r.comp_residual <= 1e-6);
    }
}

TEST_CASE("infeasible constraints produce a separating certificate") {
    QpProblem p;
    p.quad = VectorXd::Zero(1);
    p.q = VectorXd::Constant(1, 1.0);
    p.A.resize(2, 1);
    std::vector<Eigen::Triplet<double>> t{{0, 0, 1.0}, {1, 0, 1.0}};
    p.A.setFromTriplets(t.begin(), t.end());
    p.row_lo.resize(2);
    p.row_hi.resize(2);
    p.row_lo << -kInf, 1.0;
    p.row_hi << 0.0, kInf;
    p.var_lo = VectorXd::Constant(1, -10.0);
    p.var_hi = VectorXd::Constant(1, 10.0);
    const QpResult r = qp_solve(p);
    REQUIRE(r.status == QpStatus::Infeasible);
    CHECK(r.infeas_evidence < 0.0);
}

TEST_CASE("warm-started bound updates reuse the workspace") {
    QpProblem p = box_qp(VectorXd::Constant(2, 1.0), VectorXd::Constant(2, -2.0),
                         VectorXd::Constant(2, 0.0), VectorXd::Constant(2, 2.0));
    QpSolver solver(p);
    const QpResult first = solver.solve();
    REQUIRE(first.status == QpStatus::Solved);
    CHECK(first.x[0] == doctest::Approx(1.0).epsilon(1e-7));
    // Tighten one variable to [0, 0.25].
    VectorXd lo = p.var_lo, hi = p.var_hi;
    hi[0] = 0.25;
    const QpResult second = solver.solve_with_bounds(lo, hi, true);
    REQUIRE(second.status == QpStatus::Solved);
    CHECK(second.x[0] == doctest::Approx(0.25).epsilon(1e-7));
    CHECK(second.x[1] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("negative curvature is rejected") {
    CHECK_THROWS_AS(qp_solve(box_qp(VectorXd::Constant(1, -1.0), VectorXd::Zero(1),
                                    VectorXd::Constant(1, 0.0), VectorXd::Constant(1, 1.0))),
                    Error);
}
