#ifndef NNREP_TEST_ENUMERATION_ORACLE_HPP
#define NNREP_TEST_ENUMERATION_ORACLE_HPP

#include <limits>

#include "nnrep/qp.hpp"
#include "nnrep/solver.hpp"

namespace nnrep::test {

// Exhaustive oracle: every binary assignment gets its own continuous QP; the
// minimum over feasible assignments is the exact MIQP optimum. Independent of
// the branch-and-bound search path.
inline double enumerate_optimum(const MiqpModel& model, const QpSettings& settings = {}) {
    const size_t k = model.binaries.size();
    if (k > 20) throw Error("enumeration oracle: too many binaries");
    QpProblem prob = relax_model(model);
    QpSolver solver(prob, settings);
    double best = std::numeric_limits<double>::infinity();
    const size_t combos = static_cast<size_t>(1) << k;
    for (size_t mask = 0; mask < combos; ++mask) {
        Eigen::VectorXd lo = prob.var_lo, hi = prob.var_hi;
        bool valid = true;
        for (size_t b = 0; b < k; ++b) {
            const int var = model.binaries[b];
            const double val = (mask >> b) & 1 ? 1.0 : 0.0;
            if (val < prob.var_lo[var] - 1e-12 || val > prob.var_hi[var] + 1e-12) {
                valid = false;
                break;
            }
            lo[var] = val;
            hi[var] = val;
        }
        if (!valid) continue;
        const QpResult res = solver.solve_with_bounds(lo, hi, true);
        if (res.status == QpStatus::Solved) best = std::min(best, res.objective);
    }
    return best;
}

} // namespace nnrep::test

#endif
