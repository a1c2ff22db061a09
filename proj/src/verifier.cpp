#include "nnrep/verifier.hpp"

#include <algorithm>
#include <sstream>

#include "nnrep/interval.hpp"

namespace nnrep {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Safe: return "safe";
        case Verdict::Unsafe: return "unsafe";
        case Verdict::Unknown: return "unknown";
    }
    return "?";
}

namespace {

Eigen::VectorXd extract_input(const MiqpModel& model, const Eigen::VectorXd& assignment,
                              int width) {
    Eigen::VectorXd x0(width);
    for (int i = 0; i < model.num_vars; ++i) {
        const VarInfo& v = model.var_info[static_cast<size_t>(i)];
        if (v.kind == VarKind::Input) x0[v.row] = assignment[i];
    }
    return x0;
}

// Excludes the assignment's ReLU sign pattern from the model. Returns false
// when the model has no binaries to cut on.
bool add_pattern_cut(MiqpModel& model, const Eigen::VectorXd& assignment) {
    LinearRow cut;
    cut.tag = RowTag::Cut;
    int ones = 0;
    for (int b : model.binaries) {
        if (assignment[b] >= 0.5) {
            cut.terms.emplace_back(b, -1.0);
            ++ones;
        } else {
            cut.terms.emplace_back(b, 1.0);
        }
    }
    if (cut.terms.empty()) return false;
    cut.lo = 1.0 - ones;
    model.add_row(std::move(cut));
    return true;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return a.size() < b.size();
}

} // namespace

VerifyOutcome verify(const Network& net, const InputBox& box, const Predicate& p,
                     const VerifyParams& params) {
    std::vector<VerificationCase> cases = encode_verification(net, box, p);
    VerifyOutcome outcome;
    bool saw_unknown = false;
    SolveParams solve_params = params.solve;
    // Regions whose best possible violation margin stays below the strictness
    // epsilon cannot refute the (epsilon-relaxed) predicate; a margin of 1e-3
    // is already a clear witness, no need to maximize further.
    solve_params.cutoff = -kEpsStrict;
    solve_params.target_objective = -1e-3;
    for (VerificationCase& vc : cases) {
        ++outcome.cases_checked;
        MiqpModel model = vc.model;
        bool case_found_witness = false;
        for (int attempt = 0; attempt <= params.extra_witnesses; ++attempt) {
            const SolveResult res = solve(model, solve_params);
            const bool margin_reached =
                res.assignment && -res.objective >= kEpsStrict * (1.0 - 1e-9);
            if (!margin_reached) {
                // Exhausted: no input attains the margin. Anything else is a
                // resource limit and leaves the case undecided.
                if (res.status != SolveStatus::Infeasible && res.status != SolveStatus::Optimal)
                    saw_unknown = true;
                break;
            }
            const Eigen::VectorXd x0 = extract_input(model, *res.assignment, net.input_width());
            const Activations act = forward(net, x0);
            if (!evaluate(p, x0, act.y)) {
                outcome.witnesses.push_back(x0);
                case_found_witness = true;
            } else if (!case_found_witness) {
                // The model sees a violation but exact evaluation does not:
                // margin at the tolerance boundary. Not safe, not refutable.
                saw_unknown = true;
            }
            if (!add_pattern_cut(model, *res.assignment)) break;
        }
    }
    std::sort(outcome.witnesses.begin(), outcome.witnesses.end(), lex_less);
    outcome.witnesses.erase(std::unique(outcome.witnesses.begin(), outcome.witnesses.end(),
                                        [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
                                            return a.size() == b.size() && a == b;
                                        }),
                            outcome.witnesses.end());
    if (!outcome.witnesses.empty())
        outcome.verdict = Verdict::Unsafe;
    else
        outcome.verdict = saw_unknown ? Verdict::Unknown : Verdict::Safe;
    return outcome;
}

RepairLoopResult repair_loop(const Network& net, const InputBox& box, const Predicate& p,
                             const Eigen::MatrixXd& repair_inputs,
                             const Eigen::MatrixXd& repair_targets,
                             const RepairLoopConfig& config) {
    if (repair_inputs.rows() != repair_targets.rows())
        throw DimensionError("repair_loop: inputs/targets row mismatch");

    Eigen::MatrixXd inputs = repair_inputs;
    Eigen::MatrixXd targets = repair_targets;
    RepairLoopResult result{net, Verdict::Unknown, 0, {}, {}};

    while (true) {
        const VerifyOutcome outcome = verify(result.net, box, p, config.verify);
        if (outcome.verdict == Verdict::Safe) {
            result.verdict = Verdict::Safe;
            return result;
        }
        if (outcome.verdict == Verdict::Unknown) {
            result.verdict = Verdict::Unknown;
            result.diagnostic = "verifier could not decide a negation case";
            return result;
        }
        int fresh = 0;
        for (const Eigen::VectorXd& w : outcome.witnesses) {
            bool duplicate = false;
            for (Eigen::Index r = 0; r < inputs.rows() && !duplicate; ++r)
                duplicate = (inputs.row(r).transpose() - w).lpNorm<Eigen::Infinity>() == 0.0;
            if (duplicate) continue;
            inputs.conservativeResize(inputs.rows() + 1, Eigen::NoChange);
            targets.conservativeResize(targets.rows() + 1, Eigen::NoChange);
            inputs.row(inputs.rows() - 1) = w.transpose();
            // Targets for verifier-found samples: the original network's output.
            targets.row(targets.rows() - 1) = forward(net, w).y.transpose();
            ++fresh;
        }
        if (result.iterations >= config.max_iterations) {
            result.verdict = Verdict::Unknown;
            result.diagnostic = "iteration cap reached with outstanding counterexamples";
            return result;
        }

        const BoundsTable bounds = compute_bounds_table(result.net, config.layer, inputs,
                                                        config.options.delta_max);
        const RepairEncoding enc = encode_repair(result.net, config.layer, inputs, targets, p,
                                                 config.options, bounds);
        const SolveResult sres = solve(enc.model, config.solve);
        RepairIterationRecord record;
        record.new_witnesses = fresh;
        record.total_samples = static_cast<int>(inputs.rows());
        record.solver_status = sres.status;
        record.objective = sres.objective;
        if (!sres.assignment) {
            std::ostringstream msg;
            msg << "repair step " << result.iterations + 1 << " " << to_string(sres.status)
                << " with " << inputs.rows() << " samples (" << fresh
                << " from the verifier) against a " << p.disjuncts().size()
                << "-disjunct predicate at layer " << config.layer
                << "; delta_max=" << config.options.delta_max;
            result.history.push_back(record);
            throw RepairInfeasibleError(msg.str());
        }
        const auto [w, b] = decode(enc, *sres.assignment);
        result.net = result.net.with_layer(config.layer, w, b);
        ++result.iterations;
        result.history.push_back(record);
    }
}

} // namespace nnrep
