#ifndef NNREP_QP_HPP
#define NNREP_QP_HPP

#include <limits>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nnrep/common.hpp"

namespace nnrep {

// Convex QP:
//   minimize    sum_i quad[i] x_i^2 + q . x + c0
//   subject to  row_lo <= A x <= row_hi,  var_lo <= x <= var_hi.
// quad must be entrywise nonnegative (diagonal PSD Hessian).
struct QpProblem {
    Eigen::VectorXd quad;
    Eigen::VectorXd q;
    double c0 = 0.0;
    Eigen::SparseMatrix<double> A; // row-major not required; m x n
    Eigen::VectorXd row_lo, row_hi;
    Eigen::VectorXd var_lo, var_hi;

    int num_vars() const { return static_cast<int>(q.size()); }
    int num_rows() const { return static_cast<int>(A.rows()); }
};

struct QpSettings {
    double eps_abs = 1e-7;
    double eps_rel = 1e-9;
    double eps_infeas = 1e-6;
    int max_iter = 100000;
    int check_interval = 25;
    double sigma = 1e-6;
    double alpha = 1.6;
    double rho0 = 0.1;
    double rho_eq_scale = 1e3; // extra weight on equality rows
    bool adaptive_rho = true;
    bool polish = true;
    int scaling_iters = 10;
};

enum class QpStatus { Solved, Infeasible, DualInfeasible, MaxIterations };

struct QpResult {
    QpStatus status = QpStatus::MaxIterations;
    Eigen::VectorXd x;
    Eigen::VectorXd dual; // duals of the stacked rows [A; bound rows]
    double objective = std::numeric_limits<double>::infinity();
    double primal_residual = std::numeric_limits<double>::infinity();
    double dual_residual = std::numeric_limits<double>::infinity();
    double comp_residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool polished = false;
    // Separating evidence for Infeasible: the (negative) support value
    // u'max(dy,0) + l'min(dy,0) of the Farkas direction dy.
    double infeas_evidence = 0.0;
};

// Operator-splitting solver with cached KKT factorization. Variable bounds
// are folded in as identity rows internally, so branch-and-bound can change
// them between solves without refactorizing.
class QpSolver {
public:
    QpSolver(QpProblem prob, QpSettings settings = {});

    // Solve with the problem's own bounds.
    QpResult solve();
    // Solve with overridden variable bounds; warm starts from the previous
    // solution when warm == true.
    QpResult solve_with_bounds(const Eigen::VectorXd& var_lo, const Eigen::VectorXd& var_hi,
                               bool warm);

    const QpProblem& problem() const { return prob_; }

private:
    QpProblem prob_;
    QpSettings settings_;

    // Scaled data (Ruiz equilibration), stacked rows = [A; I_bounded].
    Eigen::SparseMatrix<double> a_stacked_;        // unscaled stacked matrix
    Eigen::SparseMatrix<double> a_scaled_;
    Eigen::VectorXd p_scaled_;                     // diagonal of scaled Hessian
    Eigen::VectorXd q_scaled_;
    Eigen::VectorXd d_scale_, e_scale_;            // var / row scalings
    double cost_scale_ = 1.0;
    std::vector<int> bound_row_of_var_;            // -1 when the var has no bound row
    Eigen::VectorXd rho_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> kkt_;
    bool factorized_ = false;
    double rho_bar_ = 0.1;

    // Warm-start state (scaled space).
    Eigen::VectorXd x_, y_, z_;
    bool have_state_ = false;

    void build_stacked();
    void scale();
    void factorize();
    void assemble_row_bounds(const Eigen::VectorXd& var_lo, const Eigen::VectorXd& var_hi,
                             Eigen::VectorXd& lo, Eigen::VectorXd& hi) const;
    QpResult run(const Eigen::VectorXd& lo_u, const Eigen::VectorXd& hi_u, bool warm);
    void compute_residuals(const Eigen::VectorXd& lo_u, const Eigen::VectorXd& hi_u,
                           QpResult& result) const;
    bool polish(const Eigen::VectorXd& lo_u, const Eigen::VectorXd& hi_u, QpResult& result) const;
};

QpResult qp_solve(const QpProblem& prob, const QpSettings& settings = {});

} // namespace nnrep

#endif
