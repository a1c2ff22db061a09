#include "nnrep/qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace nnrep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

} // namespace

QpSolver::QpSolver(QpProblem prob, QpSettings settings)
    : prob_(std::move(prob)), settings_(settings) {
    const int n = prob_.num_vars();
    if (prob_.quad.size() != n || prob_.var_lo.size() != n || prob_.var_hi.size() != n)
        throw DimensionError("qp: inconsistent problem dimensions");
    if (prob_.A.cols() != n || prob_.row_lo.size() != prob_.A.rows() ||
        prob_.row_hi.size() != prob_.A.rows())
        throw DimensionError("qp: inconsistent constraint dimensions");
    for (int i = 0; i < n; ++i)
        if (prob_.quad[i] < 0.0) throw Error("qp: Hessian must be PSD (nonnegative diagonal)");
    build_stacked();
    scale();
    rho_bar_ = settings_.rho0;
}

void QpSolver::build_stacked() {
    const int n = prob_.num_vars();
    const int m = prob_.num_rows();
    bound_row_of_var_.assign(static_cast<size_t>(n), -1);
    int extra = 0;
    for (int i = 0; i < n; ++i)
        if (prob_.var_lo[i] > -kInf || prob_.var_hi[i] < kInf)
            bound_row_of_var_[static_cast<size_t>(i)] = m + extra++;
    a_stacked_.resize(m + extra, n);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(prob_.A.nonZeros()) + static_cast<size_t>(extra));
    for (int k = 0; k < prob_.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(prob_.A, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < n; ++i)
        if (bound_row_of_var_[static_cast<size_t>(i)] >= 0)
            trips.emplace_back(bound_row_of_var_[static_cast<size_t>(i)], i, 1.0);
    a_stacked_.setFromTriplets(trips.begin(), trips.end());
    a_stacked_.makeCompressed();
}

void QpSolver::scale() {
    const int n = prob_.num_vars();
    const int m_all = static_cast<int>(a_stacked_.rows());
    d_scale_ = Eigen::VectorXd::Ones(n);
    e_scale_ = Eigen::VectorXd::Ones(m_all);
    a_scaled_ = a_stacked_;
    p_scaled_ = 2.0 * prob_.quad; // Hessian diagonal
    q_scaled_ = prob_.q;
    cost_scale_ = 1.0;

    for (int pass = 0; pass < settings_.scaling_iters; ++pass) {
        Eigen::VectorXd col_max = p_scaled_.cwiseAbs();
        Eigen::VectorXd row_max = Eigen::VectorXd::Zero(m_all);
        for (int k = 0; k < a_scaled_.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(a_scaled_, k); it; ++it) {
                const double a = std::abs(it.value());
                col_max[it.col()] = std::max(col_max[it.col()], a);
                row_max[it.row()] = std::max(row_max[it.row()], a);
            }
        Eigen::VectorXd dd(n), ee(m_all);
        for (int j = 0; j < n; ++j)
            dd[j] = col_max[j] > 1e-12 ? 1.0 / std::sqrt(col_max[j]) : 1.0;
        for (int i = 0; i < m_all; ++i)
            ee[i] = row_max[i] > 1e-12 ? 1.0 / std::sqrt(row_max[i]) : 1.0;
        // Apply.
        for (int k = 0; k < a_scaled_.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(a_scaled_, k); it; ++it)
                it.valueRef() *= ee[it.row()] * dd[it.col()];
        p_scaled_.array() *= dd.array().square();
        q_scaled_.array() *= dd.array();
        d_scale_.array() *= dd.array();
        e_scale_.array() *= ee.array();
    }
    // Cost normalization.
    const double p_mean = p_scaled_.size() > 0 ? p_scaled_.cwiseAbs().mean() : 0.0;
    const double denom = std::max({1.0, p_mean, inf_norm(q_scaled_)});
    cost_scale_ = 1.0 / denom;
    p_scaled_ *= cost_scale_;
    q_scaled_ *= cost_scale_;
}

void QpSolver::assemble_row_bounds(const Eigen::VectorXd& var_lo, const Eigen::VectorXd& var_hi,
                                   Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
    const int m = prob_.num_rows();
    const int m_all = static_cast<int>(a_stacked_.rows());
    lo.resize(m_all);
    hi.resize(m_all);
    lo.head(m) = prob_.row_lo;
    hi.head(m) = prob_.row_hi;
    for (int i = 0; i < prob_.num_vars(); ++i) {
        const int r = bound_row_of_var_[static_cast<size_t>(i)];
        if (r >= 0) {
            lo[r] = var_lo[i];
            hi[r] = var_hi[i];
        }
    }
}

void QpSolver::factorize() {
    const int n = prob_.num_vars();
    const int m_all = static_cast<int>(a_scaled_.rows());
    Eigen::SparseMatrix<double> kkt(n + m_all, n + m_all);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(a_scaled_.nonZeros()) + static_cast<size_t>(n + m_all));
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, p_scaled_[j] + settings_.sigma);
    for (int k = 0; k < a_scaled_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a_scaled_, k); it; ++it)
            trips.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                               it.value());
    for (int i = 0; i < m_all; ++i) trips.emplace_back(n + i, n + i, -1.0 / rho_[i]);
    kkt.setFromTriplets(trips.begin(), trips.end());
    kkt.makeCompressed();
    kkt_.compute(kkt.selfadjointView<Eigen::Lower>());
    if (kkt_.info() != Eigen::Success) throw NumericalError("qp: KKT factorization failed");
    factorized_ = true;
}

QpResult QpSolver::solve() { return solve_with_bounds(prob_.var_lo, prob_.var_hi, false); }

QpResult QpSolver::solve_with_bounds(const Eigen::VectorXd& var_lo,
                                     const Eigen::VectorXd& var_hi, bool warm) {
    Eigen::VectorXd lo_u, hi_u;
    assemble_row_bounds(var_lo, var_hi, lo_u, hi_u);
    return run(lo_u, hi_u, warm);
}

QpResult QpSolver::run(const Eigen::VectorXd& lo_u, const Eigen::VectorXd& hi_u, bool warm) {
    const int n = prob_.num_vars();
    const int m_all = static_cast<int>(a_scaled_.rows());

    // Scaled bounds.
    Eigen::VectorXd lo_s(m_all), hi_s(m_all);
    for (int i = 0; i < m_all; ++i) {
        lo_s[i] = lo_u[i] > -kInf ? lo_u[i] * e_scale_[i] : -kInf;
        hi_s[i] = hi_u[i] < kInf ? hi_u[i] * e_scale_[i] : kInf;
    }

    if (rho_.size() != m_all) {
        rho_.resize(m_all);
        for (int i = 0; i < m_all; ++i)
            rho_[i] = lo_u[i] == hi_u[i] ? settings_.rho_eq_scale * rho_bar_ : rho_bar_;
        factorized_ = false;
    }
    if (!factorized_) factorize();

    if (!warm || !have_state_) {
        x_ = Eigen::VectorXd::Zero(n);
        y_ = Eigen::VectorXd::Zero(m_all);
        z_ = Eigen::VectorXd::Zero(m_all);
        for (int i = 0; i < m_all; ++i)
            z_[i] = std::min(std::max(0.0, lo_s[i] > -kInf ? lo_s[i] : 0.0),
                             hi_s[i] < kInf ? hi_s[i] : kInf);
    } else {
        // Project the carried state into the new bounds.
        for (int i = 0; i < m_all; ++i)
            z_[i] = std::min(std::max(z_[i], lo_s[i]), hi_s[i]);
    }

    QpResult result;
    Eigen::VectorXd rhs(n + m_all), sol(n + m_all);
    Eigen::VectorXd x_prev, y_prev, dx = Eigen::VectorXd::Zero(n),
                            dy = Eigen::VectorXd::Zero(m_all);

    auto unscaled_state = [&](Eigen::VectorXd& xu, Eigen::VectorXd& yu, Eigen::VectorXd& zu) {
        xu = d_scale_.cwiseProduct(x_);
        yu = e_scale_.cwiseProduct(y_) / cost_scale_;
        zu = z_.cwiseQuotient(e_scale_);
    };

    // Finalize from the polish step when it meets the accuracy contract.
    auto finish_polished = [&](int iters) -> bool {
        if (!settings_.polish) return false;
        Eigen::VectorXd xu, yu, zu;
        unscaled_state(xu, yu, zu);
        QpResult cand;
        cand.x = xu;
        cand.dual = yu;
        if (!polish(lo_u, hi_u, cand)) return false;
        if (cand.primal_residual > std::max(settings_.eps_abs, 1e-9) ||
            cand.dual_residual > std::max(10.0 * settings_.eps_abs, 1e-8))
            return false;
        cand.status = QpStatus::Solved;
        cand.polished = true;
        cand.iterations = iters;
        result = cand;
        return true;
    };

    // The splitting iteration converges to moderate accuracy quickly, then
    // crawls; the active-set polish supplies the final digits. Iterate to a
    // loose tolerance, polish, and only keep iterating when polish fails.
    const double eps_loose = std::max(settings_.eps_abs, 1e-5);
    int iter = 0;
    int checks_since_polish = 0;
    bool reached_strict = false;
    for (; iter < settings_.max_iter; ++iter) {
        x_prev = x_;
        y_prev = y_;
        rhs.head(n) = settings_.sigma * x_ - q_scaled_;
        rhs.tail(m_all) = z_ - y_.cwiseQuotient(rho_);
        sol = kkt_.solve(rhs);
        const Eigen::VectorXd x_tilde = sol.head(n);
        const Eigen::VectorXd nu = sol.tail(m_all);
        const Eigen::VectorXd z_tilde = z_ + (nu - y_).cwiseQuotient(rho_);
        x_ = settings_.alpha * x_tilde + (1.0 - settings_.alpha) * x_;
        Eigen::VectorXd z_pre =
            settings_.alpha * z_tilde + (1.0 - settings_.alpha) * z_ + y_.cwiseQuotient(rho_);
        z_ = z_pre.cwiseMax(lo_s).cwiseMin(hi_s);
        y_ = rho_.cwiseProduct(z_pre - z_);
        dx = x_ - x_prev;
        dy = y_ - y_prev;

        if ((iter + 1) % settings_.check_interval != 0) continue;

        Eigen::VectorXd xu, yu, zu;
        unscaled_state(xu, yu, zu);
        const Eigen::VectorXd ax = a_stacked_ * xu;
        const Eigen::VectorXd px = (2.0 * prob_.quad).cwiseProduct(xu);
        const Eigen::VectorXd aty = a_stacked_.transpose() * yu;
        const double rp = inf_norm(ax - zu);
        const double rd = inf_norm(px + prob_.q + aty);
        const double scale_p = std::max(inf_norm(ax), inf_norm(zu));
        const double scale_d = std::max({inf_norm(px), inf_norm(prob_.q), inf_norm(aty)});
        const double eps_p = settings_.eps_abs + settings_.eps_rel * scale_p;
        const double eps_d = settings_.eps_abs + settings_.eps_rel * scale_d;
        const bool strict_ok = rp <= eps_p && rd <= eps_d;
        const bool loose_ok = rp <= eps_loose + settings_.eps_rel * scale_p &&
                              rd <= eps_loose + settings_.eps_rel * scale_d;

        if (loose_ok || strict_ok) {
            if (checks_since_polish == 0 || strict_ok) {
                if (finish_polished(iter + 1)) {
                    have_state_ = true;
                    return result;
                }
            }
            if (++checks_since_polish >= 8) checks_since_polish = 0;
            if (strict_ok) {
                reached_strict = true;
                break;
            }
        } else {
            checks_since_polish = 0;
        }

        // Primal infeasibility certificate (unscaled Farkas direction).
        Eigen::VectorXd dyu = e_scale_.cwiseProduct(dy) / cost_scale_;
        const double dy_norm = inf_norm(dyu);
        if (dy_norm > 1e-12) {
            const double at_dy = inf_norm(a_stacked_.transpose() * dyu);
            double support = 0.0;
            bool bounded_support = true;
            for (int i = 0; i < m_all && bounded_support; ++i) {
                const double d = dyu[i];
                if (d > settings_.eps_infeas * dy_norm) {
                    if (hi_u[i] >= kInf) bounded_support = false;
                    else support += hi_u[i] * d;
                } else if (d < -settings_.eps_infeas * dy_norm) {
                    if (lo_u[i] <= -kInf) bounded_support = false;
                    else support += lo_u[i] * d;
                }
            }
            if (bounded_support && at_dy <= settings_.eps_infeas * dy_norm &&
                support <= -settings_.eps_infeas * dy_norm) {
                result.status = QpStatus::Infeasible;
                result.iterations = iter + 1;
                result.infeas_evidence = support;
                result.dual = dyu;
                have_state_ = false; // divergent state is a poor warm start
                return result;
            }
        }
        // Dual infeasibility certificate (unbounded ray).
        Eigen::VectorXd dxu = d_scale_.cwiseProduct(dx);
        const double dx_norm = inf_norm(dxu);
        if (dx_norm > 1e-12) {
            const double eps = settings_.eps_infeas * dx_norm;
            const bool p_flat = inf_norm((2.0 * prob_.quad).cwiseProduct(dxu)) <= eps;
            const bool q_desc = prob_.q.dot(dxu) <= -eps;
            bool cone_ok = p_flat && q_desc;
            if (cone_ok) {
                const Eigen::VectorXd adx = a_stacked_ * dxu;
                for (int i = 0; i < m_all; ++i) {
                    const bool lo_fin = lo_u[i] > -kInf;
                    const bool hi_fin = hi_u[i] < kInf;
                    if (hi_fin && adx[i] > eps) { cone_ok = false; break; }
                    if (lo_fin && adx[i] < -eps) { cone_ok = false; break; }
                }
            }
            if (cone_ok) {
                result.status = QpStatus::DualInfeasible;
                result.iterations = iter + 1;
                have_state_ = false;
                return result;
            }
        }

        // Adaptive rho.
        if (settings_.adaptive_rho && (iter + 1) % (settings_.check_interval * 8) == 0) {
            const double rp_rel = rp / std::max({inf_norm(ax), inf_norm(zu), 1e-10});
            const double rd_rel =
                rd / std::max({inf_norm(px), inf_norm(prob_.q), inf_norm(aty), 1e-10});
            const double ratio = std::sqrt(rp_rel / std::max(rd_rel, 1e-16));
            if (ratio > 5.0 || ratio < 0.2) {
                rho_bar_ = std::clamp(rho_bar_ * ratio, 1e-6, 1e6);
                for (int i = 0; i < m_all; ++i)
                    rho_[i] = lo_u[i] == hi_u[i] ? settings_.rho_eq_scale * rho_bar_ : rho_bar_;
                factorize();
            }
        }
    }

    have_state_ = true;
    result.status = reached_strict ? QpStatus::Solved : QpStatus::MaxIterations;
    result.iterations = iter + (reached_strict ? 1 : 0);

    Eigen::VectorXd xu, yu, zu;
    unscaled_state(xu, yu, zu);
    result.x = xu;
    result.dual = yu;
    result.objective = prob_.quad.cwiseProduct(xu).dot(xu) + prob_.q.dot(xu) + prob_.c0;
    compute_residuals(lo_u, hi_u, result);

    // One last polish attempt; a stalled iteration often still identifies the
    // right active set.
    if (result.status == QpStatus::MaxIterations && settings_.polish) {
        QpResult cand = result;
        if (polish(lo_u, hi_u, cand) &&
            cand.primal_residual <= std::max(settings_.eps_abs, 1e-9) &&
            cand.dual_residual <= std::max(10.0 * settings_.eps_abs, 1e-8)) {
            cand.status = QpStatus::Solved;
            cand.polished = true;
            cand.iterations = result.iterations;
            result = cand;
        }
    }
    return result;
}

void QpSolver::compute_residuals(const Eigen::VectorXd& lo_u, const Eigen::VectorXd& hi_u,
                                 QpResult& result) const {
    const Eigen::VectorXd ax = a_stacked_ * result.x;
    result.primal_residual = std::max(inf_norm((lo_u - ax).cwiseMax(0.0)),
                                      inf_norm((ax - hi_u).cwiseMax(0.0)));
    result.dual_residual = inf_norm((2.0 * prob_.quad).cwiseProduct(result.x) + prob_.q +
                                    a_stacked_.transpose() * result.dual);
    double comp = 0.0;
    for (int i = 0; i < static_cast<int>(a_stacked_.rows()); ++i) {
        const double yv = result.dual[i];
        if (yv > 1e-12 && hi_u[i] < kInf)
            comp = std::max(comp, yv * std::abs(hi_u[i] - ax[i]));
        else if (yv < -1e-12 && lo_u[i] > -kInf)
            comp = std::max(comp, -yv * std::abs(ax[i] - lo_u[i]));
    }
    result.comp_residual = comp;
}

bool QpSolver::polish(const Eigen::VectorXd& lo_u, const Eigen::VectorXd& hi_u,
                      QpResult& result) const {
    const int n = prob_.num_vars();
    const int m_all = static_cast<int>(a_stacked_.rows());
    const double act_tol = 1e-7;

    // Active rows from the ADMM solution: z at a bound with matching dual
    // sign, plus all equality rows.
    const Eigen::VectorXd ax0 = a_stacked_ * result.x;
    std::vector<int> active;
    std::vector<double> target;
    for (int i = 0; i < m_all; ++i) {
        if (lo_u[i] == hi_u[i]) {
            active.push_back(i);
            target.push_back(lo_u[i]);
        } else if (lo_u[i] > -kInf &&
                   (result.dual[i] < -1e-10 || ax0[i] - lo_u[i] < act_tol * (1.0 + std::abs(lo_u[i])))) {
            active.push_back(i);
            target.push_back(lo_u[i]);
        } else if (hi_u[i] < kInf &&
                   (result.dual[i] > 1e-10 || hi_u[i] - ax0[i] < act_tol * (1.0 + std::abs(hi_u[i])))) {
            active.push_back(i);
            target.push_back(hi_u[i]);
        }
    }
    const int ma = static_cast<int>(active.size());

    // Regularized KKT for the equality-constrained QP on the active set;
    // iterative refinement against the unregularized system recovers the
    // accuracy (dependent active rows are common at degenerate vertices).
    const double reg = 1e-6;
    Eigen::SparseMatrix<double> kkt(n + ma, n + ma);
    std::vector<Eigen::Triplet<double>> trips;
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, 2.0 * prob_.quad[j] + reg);
    for (int r = 0; r < ma; ++r) trips.emplace_back(n + r, n + r, -reg);
    // Rows of a_stacked_ for the active set.
    Eigen::SparseMatrix<double, Eigen::RowMajor> arow(a_stacked_);
    for (int r = 0; r < ma; ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(arow, active[static_cast<size_t>(r)]);
             it; ++it)
            trips.emplace_back(n + r, static_cast<int>(it.col()), it.value());
    kkt.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fac;
    fac.compute(kkt.selfadjointView<Eigen::Lower>());
    if (fac.info() != Eigen::Success) return false;

    Eigen::VectorXd rhs(n + ma);
    rhs.head(n) = -prob_.q;
    for (int r = 0; r < ma; ++r) rhs[n + r] = target[static_cast<size_t>(r)];

    // Solve with iterative refinement against the unregularized system.
    Eigen::VectorXd t = fac.solve(rhs);
    for (int pass = 0; pass < 8; ++pass) {
        Eigen::VectorXd resid = rhs;
        const Eigen::VectorXd xs = t.head(n);
        const Eigen::VectorXd nu = t.tail(ma);
        Eigen::VectorXd px = (2.0 * prob_.quad).cwiseProduct(xs);
        Eigen::VectorXd atnu = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd axs(ma);
        for (int r = 0; r < ma; ++r) {
            double ar = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(arow, active[static_cast<size_t>(r)]);
                 it; ++it) {
                ar += it.value() * xs[it.col()];
                atnu[it.col()] += it.value() * nu[r];
            }
            axs[r] = ar;
        }
        resid.head(n) -= px + atnu;
        resid.tail(ma) -= axs;
        if (inf_norm(resid) < 1e-14) break;
        t += fac.solve(resid);
    }

    QpResult pol;
    pol.x = t.head(n);
    pol.dual = Eigen::VectorXd::Zero(m_all);
    for (int r = 0; r < ma; ++r) pol.dual[active[static_cast<size_t>(r)]] = t[n + r];
    const Eigen::VectorXd ax = a_stacked_ * pol.x;
    double rp = 0.0;
    for (int i = 0; i < m_all; ++i) {
        if (lo_u[i] > -kInf) rp = std::max(rp, lo_u[i] - ax[i]);
        if (hi_u[i] < kInf) rp = std::max(rp, ax[i] - hi_u[i]);
    }
    pol.primal_residual = std::max(rp, 0.0);
    pol.dual_residual = inf_norm((2.0 * prob_.quad).cwiseProduct(pol.x) + prob_.q +
                                 a_stacked_.transpose() * pol.dual);
    double comp = 0.0;
    for (int i = 0; i < m_all; ++i) {
        const double yv = pol.dual[i];
        if (yv > 1e-12 && hi_u[i] < kInf) comp = std::max(comp, yv * std::abs(hi_u[i] - ax[i]));
        else if (yv < -1e-12 && lo_u[i] > -kInf)
            comp = std::max(comp, -yv * std::abs(ax[i] - lo_u[i]));
    }
    pol.comp_residual = comp;
    pol.objective = prob_.quad.cwiseProduct(pol.x).dot(pol.x) + prob_.q.dot(pol.x) + prob_.c0;
    pol.infeas_evidence = 0.0;
    if (!pol.x.allFinite()) return false;
    result = pol;
    return true;
}

QpResult qp_solve(const QpProblem& prob, const QpSettings& settings) {
    QpSolver solver(prob, settings);
    return solver.solve();
}

} // namespace nnrep
