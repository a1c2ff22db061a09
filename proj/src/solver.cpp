#include "nnrep/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <queue>
#include <vector>

namespace nnrep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
    std::vector<std::pair<int, double>> fixings;
    double bound = -kInf; // subtree lower bound inherited from the parent
    long seq = 0;
    // Pseudo-cost bookkeeping.
    int branch_var = -1;
    double branch_dir = 0.0;
    double parent_relax = -kInf;
    double parent_value = 0.0;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq > b.seq;
    }
};

struct PseudoCost {
    double up_sum = 0.0, down_sum = 0.0;
    int up_cnt = 0, down_cnt = 0;
};

class BranchAndBound {
public:
    BranchAndBound(const MiqpModel& model, const SolveParams& params, bool feasibility_mode)
        : model_(model),
          params_(params),
          feas_mode_(feasibility_mode),
          prob_(relax_model(model)),
          qp_([&] {
              QpProblem p = prob_;
              if (feasibility_mode) {
                  p.quad.setZero();
                  p.q.setZero();
                  p.c0 = 0.0;
              }
              return p;
          }(), params.qp),
          pseudo_(model.binaries.size()) {}

    SolveResult run() {
        const auto t0 = std::chrono::steady_clock::now();
        auto elapsed = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        };

        SolveResult result;
        bool numerical_trouble = false;

        // Hint heuristic: one QP with every binary fixed to its suggested value.
        if (params_.use_hint && !model_.binary_hint.empty() &&
            model_.binary_hint.size() == model_.binaries.size()) {
            std::vector<std::pair<int, double>> fix;
            for (const auto& [var, val] : model_.binary_hint)
                fix.emplace_back(var, val >= 0.5 ? 1.0 : 0.0);
            try_assignment(fix, result);
            if (incumbent_obj_ <= params_.target_objective) {
                result.status = SolveStatus::FeasibleTimeLimit;
                finish(result, elapsed());
                return result;
            }
        }

        std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
        long seq = 0;
        Node root;
        root.seq = seq++;
        open.push(root);

        while (!open.empty()) {
            Node node = open.top();

            // The queue minimum is the global lower bound on open subtrees.
            if (!feas_mode_)
                result.best_bound =
                    std::max(result.best_bound, std::min(node.bound, incumbent_obj_));

            if (incumbent_obj_ < kInf) {
                const double gap_tol =
                    std::max(params_.abs_gap, params_.rel_gap * std::abs(incumbent_obj_));
                if (incumbent_obj_ - result.best_bound <= gap_tol && !feas_mode_) {
                    result.status = SolveStatus::Optimal;
                    finish(result, elapsed());
                    return result;
                }
            }
            if (params_.node_limit > 0 && result.node_count >= params_.node_limit) break;
            if (elapsed() > params_.time_limit_s) break;

            open.pop();

            // Bound pruning without solving (against the incumbent or the
            // external cutoff).
            const double prune_at = std::min(incumbent_obj_, params_.cutoff);
            if (!feas_mode_ && node.bound >= prune_at - params_.abs_gap) continue;

            const QpResult relax = solve_fixed(node.fixings, true);
            ++result.node_count;
            maybe_log(result);

            if (relax.status == QpStatus::Infeasible) {
                update_pseudo(node, node.bound); // infeasible child: no cost info
                continue;
            }
            if (relax.status == QpStatus::DualInfeasible) {
                // PSD objective over our bounded models should not reach this;
                // treat the subtree as unresolvable.
                numerical_trouble = true;
                continue;
            }
            double node_relax = node.bound;
            const bool trustworthy = relax.status == QpStatus::Solved;
            if (trustworthy) {
                node_relax = std::max(node.bound, relax.objective);
                update_pseudo(node, relax.objective);
                if (!feas_mode_ && node_relax >= prune_at - params_.abs_gap) continue;
            } else {
                numerical_trouble = true;
            }

            // Integrality check over free binaries.
            int most_frac_var = -1, lowest_free = -1;
            double most_frac = -1.0;
            bool integral = true;
            std::vector<bool> fixed(model_.binaries.size(), false);
            for (size_t b = 0; b < model_.binaries.size(); ++b) {
                const int var = model_.binaries[b];
                for (const auto& [fv, _] : node.fixings)
                    if (fv == var) fixed[b] = true;
                if (fixed[b]) continue;
                if (lowest_free < 0) lowest_free = static_cast<int>(b);
                const double v = relax.x[var];
                const double dist = std::min(std::abs(v), std::abs(1.0 - v));
                if (dist > params_.integrality_tol) integral = false;
                const double score = branch_score(b, v);
                if (score > most_frac + 1e-15) {
                    most_frac = score;
                    most_frac_var = static_cast<int>(b);
                }
            }

            if (integral && trustworthy) {
                // Snap and re-solve before accepting the incumbent.
                std::vector<std::pair<int, double>> fix = node.fixings;
                for (size_t b = 0; b < model_.binaries.size(); ++b) {
                    if (fixed[b]) continue;
                    fix.emplace_back(model_.binaries[b],
                                     relax.x[model_.binaries[b]] >= 0.5 ? 1.0 : 0.0);
                }
                const bool accepted = try_assignment(fix, result);
                if (feas_mode_ && incumbent_obj_ < kInf) {
                    result.status = SolveStatus::Optimal;
                    finish(result, elapsed());
                    return result;
                }
                if (incumbent_obj_ <= params_.target_objective) {
                    result.status = SolveStatus::FeasibleTimeLimit;
                    finish(result, elapsed());
                    return result;
                }
                if (accepted || lowest_free < 0) continue; // fathomed
                if (incumbent_obj_ <= node_relax + params_.abs_gap) continue;
                // Tolerance artifact: force exactness by branching.
                branch(node, lowest_free, node_relax, relax, open, seq);
                continue;
            }
            if (!trustworthy) {
                // Keep exploring: branch on the first free binary if any.
                if (lowest_free < 0) continue;
                branch(node, lowest_free, node_relax, relax, open, seq);
                continue;
            }

            // Rounding heuristic.
            if (heuristic_enabled()) {
                std::vector<std::pair<int, double>> fix = node.fixings;
                for (size_t b = 0; b < model_.binaries.size(); ++b) {
                    if (fixed[b]) continue;
                    fix.emplace_back(model_.binaries[b],
                                     relax.x[model_.binaries[b]] >= 0.5 ? 1.0 : 0.0);
                }
                try_assignment(fix, result);
                if (feas_mode_ && incumbent_obj_ < kInf) {
                    result.status = SolveStatus::Optimal;
                    finish(result, elapsed());
                    return result;
                }
                if (incumbent_obj_ <= params_.target_objective) {
                    result.status = SolveStatus::FeasibleTimeLimit;
                    finish(result, elapsed());
                    return result;
                }
            }

            branch(node, most_frac_var, node_relax, relax, open, seq);
        }

        // Loop left: either the tree is exhausted or a limit tripped.
        const bool exhausted = open.empty();
        if (feas_mode_) {
            if (incumbent_obj_ < kInf)
                result.status = SolveStatus::Optimal;
            else if (exhausted)
                result.status =
                    numerical_trouble ? SolveStatus::InfeasibleOrUnbounded : SolveStatus::Infeasible;
            else
                result.status = SolveStatus::InfeasibleOrUnbounded; // unknown: limit hit
        } else if (exhausted) {
            if (incumbent_obj_ < kInf) {
                result.best_bound = incumbent_obj_;
                result.status = SolveStatus::Optimal;
            } else {
                result.status = numerical_trouble ? SolveStatus::InfeasibleOrUnbounded
                                                  : SolveStatus::Infeasible;
            }
        } else {
            result.status = incumbent_obj_ < kInf ? SolveStatus::FeasibleTimeLimit
                                                  : SolveStatus::InfeasibleOrUnbounded;
        }
        finish(result, elapsed());
        return result;
    }

private:
    QpResult solve_fixed(const std::vector<std::pair<int, double>>& fixings, bool warm) {
        Eigen::VectorXd lo = prob_.var_lo, hi = prob_.var_hi;
        for (const auto& [var, val] : fixings) {
            lo[var] = val;
            hi[var] = val;
        }
        return qp_.solve_with_bounds(lo, hi, warm);
    }

    // Fix the listed binaries, solve the continuous QP, and accept the point
    // as incumbent when it satisfies the full model.
    bool try_assignment(const std::vector<std::pair<int, double>>& fixings, SolveResult& result) {
        if (fixings.size() < model_.binaries.size()) return false;
        QpResult res = solve_fixed(fixings, true);
        if (res.status != QpStatus::Solved) return false;
        Eigen::VectorXd x = res.x;
        for (const auto& [var, val] : fixings) x[var] = val;
        if (model_.max_infeasibility(x) > 1e-6) return false;
        const double obj = feas_mode_ ? 0.0 : model_.objective_value(x);
        if (obj < incumbent_obj_ - 1e-12 || (feas_mode_ && incumbent_obj_ == kInf)) {
            incumbent_obj_ = obj;
            result.objective = obj;
            result.assignment = std::move(x);
            if (params_.log)
                std::cerr << "BnB n=" << result.node_count << " inc=" << incumbent_obj_
                          << " bnd=" << result.best_bound
                          << " gap=" << incumbent_obj_ - result.best_bound << "\n";
            return true;
        }
        return false;
    }

    void branch(const Node& node, int branch_idx, double node_relax, const QpResult& relax,
                std::priority_queue<Node, std::vector<Node>, NodeOrder>& open, long& seq) {
        if (branch_idx < 0) return;
        const int var = model_.binaries[static_cast<size_t>(branch_idx)];
        const double v = relax.x.size() > var ? relax.x[var] : 0.5;
        const double first = v >= 0.5 ? 1.0 : 0.0;
        for (const double val : {first, 1.0 - first}) {
            Node child;
            child.fixings = node.fixings;
            child.fixings.emplace_back(var, val);
            child.bound = node_relax;
            child.seq = seq++;
            child.branch_var = branch_idx;
            child.branch_dir = val;
            child.parent_relax = node_relax;
            child.parent_value = v;
            open.push(std::move(child));
        }
    }

    double branch_score(size_t b, double value) const {
        const double frac = std::min(std::abs(value), std::abs(1.0 - value));
        if (params_.branching == Branching::PseudoCost) {
            const PseudoCost& pc = pseudo_[b];
            if (pc.up_cnt > 0 && pc.down_cnt > 0) {
                const double up = std::max(pc.up_sum / pc.up_cnt * (1.0 - value), 1e-8);
                const double dn = std::max(pc.down_sum / pc.down_cnt * value, 1e-8);
                return up * dn;
            }
        }
        return frac;
    }

    void update_pseudo(const Node& node, double child_relax) {
        if (node.branch_var < 0 || child_relax == -kInf || node.parent_relax == -kInf) return;
        const double degradation = std::max(0.0, child_relax - node.parent_relax);
        PseudoCost& pc = pseudo_[static_cast<size_t>(node.branch_var)];
        if (node.branch_dir >= 0.5) {
            const double f = std::max(1.0 - node.parent_value, 1e-6);
            pc.up_sum += degradation / f;
            ++pc.up_cnt;
        } else {
            const double f = std::max(node.parent_value, 1e-6);
            pc.down_sum += degradation / f;
            ++pc.down_cnt;
        }
    }

    bool heuristic_enabled() const { return model_.binaries.size() <= 512; }

    void maybe_log(const SolveResult& result) {
        if (!params_.log || result.node_count % 50 != 0) return;
        std::cerr << "BnB n=" << result.node_count
                  << " inc=" << (incumbent_obj_ < kInf ? std::to_string(incumbent_obj_) : "inf")
                  << " bnd=" << result.best_bound
                  << " gap=" << incumbent_obj_ - result.best_bound << "\n";
    }

    void finish(SolveResult& result, double wall) {
        result.wall_time_s = params_.deterministic ? 0.0 : wall;
        if (result.status == SolveStatus::Optimal && !feas_mode_)
            result.best_bound = std::max(result.best_bound,
                                         incumbent_obj_ - std::max(params_.abs_gap,
                                                                   params_.rel_gap *
                                                                       std::abs(incumbent_obj_)));
        if (params_.log)
            std::cerr << "BnB n=" << result.node_count
                      << " inc=" << (incumbent_obj_ < kInf ? std::to_string(incumbent_obj_) : "inf")
                      << " bnd=" << result.best_bound << " gap="
                      << incumbent_obj_ - result.best_bound << " done\n";
    }

    const MiqpModel& model_;
    SolveParams params_;
    bool feas_mode_;
    QpProblem prob_;
    QpSolver qp_;
    std::vector<PseudoCost> pseudo_;
    double incumbent_obj_ = kInf;
};

} // namespace

QpProblem relax_model(const MiqpModel& model) {
    QpProblem prob;
    const int n = model.num_vars;
    prob.quad = Eigen::Map<const Eigen::VectorXd>(model.obj_quad.data(), n);
    prob.q = Eigen::Map<const Eigen::VectorXd>(model.obj_lin.data(), n);
    prob.c0 = model.obj_const;
    prob.var_lo = Eigen::Map<const Eigen::VectorXd>(model.var_lo.data(), n);
    prob.var_hi = Eigen::Map<const Eigen::VectorXd>(model.var_hi.data(), n);
    const int m = static_cast<int>(model.rows.size());
    prob.A.resize(m, n);
    std::vector<Eigen::Triplet<double>> trips;
    prob.row_lo.resize(m);
    prob.row_hi.resize(m);
    for (int r = 0; r < m; ++r) {
        const LinearRow& row = model.rows[static_cast<size_t>(r)];
        for (const auto& [idx, coeff] : row.terms) trips.emplace_back(r, idx, coeff);
        prob.row_lo[r] = row.lo;
        prob.row_hi[r] = row.hi;
    }
    prob.A.setFromTriplets(trips.begin(), trips.end());
    prob.A.makeCompressed();
    return prob;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::FeasibleTimeLimit: return "feasible_time_limit";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::InfeasibleOrUnbounded: return "infeasible_or_unbounded";
    }
    return "?";
}

SolveResult solve(const MiqpModel& model, const SolveParams& params) {
    model.validate();
    BranchAndBound bnb(model, params, false);
    return bnb.run();
}

FeasibilityResult check_feasibility(const MiqpModel& model, const SolveParams& params) {
    model.validate();
    BranchAndBound bnb(model, params, true);
    const SolveResult res = bnb.run();
    FeasibilityResult out;
    out.node_count = res.node_count;
    if (res.status == SolveStatus::Optimal && res.assignment) {
        out.status = FeasStatus::Feasible;
        out.assignment = res.assignment;
    } else if (res.status == SolveStatus::Infeasible) {
        out.status = FeasStatus::Infeasible;
    } else {
        out.status = FeasStatus::Unknown;
    }
    return out;
}

SolveResult BuiltinBackend::solve(const MiqpModel& model, const SolveParams& params) {
    return nnrep::solve(model, params);
}

MiqpBackend& default_backend() {
    static BuiltinBackend backend;
    return backend;
}

} // namespace nnrep
