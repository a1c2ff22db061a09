#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nnrep/pipeline.hpp"

namespace fs = std::filesystem;
using nnrep::Verdict;

namespace {

struct SharedFlags {
    std::string config_path;
    std::string out_dir;
    long seed = -1;
    bool deterministic = false;
    int jobs = 1;
    double time_limit = -1.0;
};

void add_shared(CLI::App* cmd, SharedFlags& shared, bool need_config) {
    auto* opt = cmd->add_option("--config", shared.config_path, "run config JSON");
    if (need_config) opt->required();
    cmd->add_option("--out-dir", shared.out_dir, "output directory override");
    cmd->add_option("--seed", shared.seed, "RNG seed override");
    cmd->add_flag("--deterministic", shared.deterministic, "reproducible mode");
    cmd->add_option("--jobs", shared.jobs, "concurrent trials for sweeps");
    cmd->add_option("--time-limit", shared.time_limit, "solver wall-clock limit [s]");
}

void apply_overrides(nnrep::RunConfig& cfg, const SharedFlags& shared) {
    if (!shared.out_dir.empty()) cfg.out_dir = shared.out_dir;
    if (shared.seed >= 0) cfg.solver.seed = static_cast<unsigned long>(shared.seed);
    if (shared.deterministic) cfg.solver.deterministic = true;
    if (shared.time_limit > 0) cfg.solver.time_limit_s = shared.time_limit;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"layer-wise ReLU network repair via MIQP"};
    app.require_subcommand(1);

    SharedFlags shared;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic repair experiment");
    nnrep::GenDataConfig gen_cfg;
    gen->add_option("--kind", gen_cfg.kind, "global | rate | avoid");
    gen->add_option("--seed", gen_cfg.seed, "generator seed");
    gen->add_option("--dt", gen_cfg.dt, "sliding window length");
    gen->add_option("--hidden", gen_cfg.hidden, "hidden layer widths");
    gen->add_option("--train", gen_cfg.n_train, "training samples");
    gen->add_option("--repair", gen_cfg.n_repair, "repair samples");
    gen->add_option("--test", gen_cfg.n_test, "test samples");
    gen->add_option("--fit-iterations", gen_cfg.fit_iterations, "GD iterations");
    gen->add_option("--learning-rate", gen_cfg.learning_rate, "GD step size");
    gen->add_option("--delta-max", gen_cfg.delta_max, "delta_max in the emitted config");
    gen->add_option("--out-dir", gen_cfg.out_dir, "output directory")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "train a toy network on a dataset");
    std::string fit_data, fit_out = "network.json";
    std::vector<int> fit_hidden = {32, 32, 32};
    unsigned long fit_seed = 1;
    int fit_iters = 3000;
    double fit_lr = 0.01;
    fit->add_option("--data", fit_data, "dataset JSON")->required();
    fit->add_option("--hidden", fit_hidden, "hidden layer widths");
    fit->add_option("--seed", fit_seed, "init seed");
    fit->add_option("--iterations", fit_iters, "GD iterations");
    fit->add_option("--learning-rate", fit_lr, "GD step size");
    fit->add_option("--out", fit_out, "output network path");

    // repair
    auto* rep = app.add_subcommand("repair", "repair a layer against a predicate");
    add_shared(rep, shared, true);
    std::string verify_box_path;
    rep->add_option("--verify-box", verify_box_path, "input box JSON; runs the repair/verify loop");
    std::string node_subset_flag;
    rep->add_option("--node-subset", node_subset_flag, "e.g. random:3:7 or 0,2,5");
    bool export_lp = false;
    rep->add_flag("--export-lp", export_lp, "write the MIQP in LP format");

    // verify
    auto* ver = app.add_subcommand("verify", "verify a network over an input box");
    std::string ver_net, ver_box, ver_pred;
    ver->add_option("--network", ver_net, "network JSON")->required();
    ver->add_option("--box", ver_box, "box JSON")->required();
    ver->add_option("--predicate", ver_pred, "predicate JSON file or inline spec")->required();
    std::string ver_out = "verify_outcome.json";
    ver->add_option("--out", ver_out, "outcome JSON path");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a repair against a test set");
    std::string ev_orig, ev_rep, ev_test, ev_repair_data, ev_pred, ev_out_dir = ".";
    ev->add_option("--original", ev_orig, "original network")->required();
    ev->add_option("--repaired", ev_rep, "repaired network")->required();
    ev->add_option("--test-data", ev_test, "test dataset")->required();
    ev->add_option("--repair-data", ev_repair_data, "repair dataset (for distances)")->required();
    ev->add_option("--predicate", ev_pred, "predicate JSON file or inline spec")->required();
    ev->add_option("--out-dir", ev_out_dir, "output directory");

    // sweep-partial
    auto* sweep = app.add_subcommand("sweep-partial", "random k-node repair sweep");
    add_shared(sweep, shared, true);
    int sweep_k = 10, sweep_trials = 35;
    sweep->add_option("--k", sweep_k, "nodes per trial");
    sweep->add_option("--trials", sweep_trials, "number of trials");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const nnrep::GenDataResult res = nnrep::generate_experiment(gen_cfg);
            std::cout << "wrote " << res.config_path << "\n"
                      << "train mse " << res.train_mse << ", repair violations "
                      << res.repair_violations << ", test violations " << res.test_violations
                      << "\n";
            return 0;
        }
        if (*fit) {
            const nnrep::Dataset data = nnrep::load_dataset(fit_data);
            const nnrep::FitResult res =
                nnrep::fit_toy_network(data, fit_hidden, fit_seed, fit_iters, fit_lr);
            nnrep::save_network(res.net, fit_out);
            std::cout << "training mse " << res.mse << ", wrote " << fit_out << "\n";
            return 0;
        }
        if (*rep) {
            nnrep::RunConfig cfg = nnrep::load_run_config(shared.config_path);
            apply_overrides(cfg, shared);
            if (!verify_box_path.empty()) cfg.verify_box = nnrep::load_box(verify_box_path);
            if (!node_subset_flag.empty()) {
                cfg.node_subset.reset();
                if (node_subset_flag.rfind("random:", 0) == 0) {
                    cfg.node_subset_spec = node_subset_flag;
                } else {
                    std::vector<int> subset;
                    std::stringstream ss(node_subset_flag);
                    std::string tok;
                    while (std::getline(ss, tok, ',')) subset.push_back(std::stoi(tok));
                    cfg.node_subset = subset;
                }
            }
            if (export_lp) cfg.export_lp = true;
            try {
                const nnrep::RepairRun run = nnrep::run_repair(cfg);
                std::cout << "status " << run.report.solver_status << ", report in " << cfg.out_dir
                          << "\n";
                return run.exit_code;
            } catch (const nnrep::RepairInfeasibleError& e) {
                std::cerr << "infeasible: " << e.what() << "\n";
                return 2;
            }
        }
        if (*ver) {
            const nnrep::Network net = nnrep::load_network(ver_net);
            const nnrep::InputBox box = nnrep::load_box(ver_box);
            const nnrep::Predicate pred = nnrep::predicate_from_spec(
                ver_pred.front() == '{' ? ver_pred : "\"" + ver_pred + "\"",
                fs::current_path().string());
            const nnrep::VerifyOutcome outcome = nnrep::verify(net, box, pred);
            nlohmann::json doc;
            doc["verdict"] = nnrep::to_string(outcome.verdict);
            doc["cases_checked"] = outcome.cases_checked;
            doc["witnesses"] = nlohmann::json::array();
            for (const Eigen::VectorXd& w : outcome.witnesses) {
                nlohmann::json jw = nlohmann::json::array();
                for (Eigen::Index i = 0; i < w.size(); ++i) jw.push_back(w[i]);
                doc["witnesses"].push_back(std::move(jw));
            }
            std::ofstream out(ver_out);
            out << doc.dump(2) << "\n";
            std::cout << "verdict " << nnrep::to_string(outcome.verdict) << " ("
                      << outcome.cases_checked << " cases)\n";
            return outcome.verdict == Verdict::Safe ? 0
                   : outcome.verdict == Verdict::Unsafe ? 2 : 3;
        }
        if (*ev) {
            const nnrep::Network original = nnrep::load_network(ev_orig);
            const nnrep::Network repaired = nnrep::load_network(ev_rep);
            const nnrep::Dataset test = nnrep::load_dataset(ev_test);
            const nnrep::Dataset repair_data = nnrep::load_dataset(ev_repair_data);
            const nnrep::Predicate pred = nnrep::predicate_from_spec(
                ev_pred.front() == '{' ? ev_pred : "\"" + ev_pred + "\"",
                fs::current_path().string());
            nnrep::RepairReport report = nnrep::evaluate_repair(
                original, repaired, test.inputs, test.targets, pred, repair_data.inputs);
            report.solver_status = "eval";
            fs::create_directories(ev_out_dir);
            std::ofstream((fs::path(ev_out_dir) / "report.json")) << report.to_json();
            std::ofstream((fs::path(ev_out_dir) / "violation_points.csv"))
                << report.violation_points_csv();
            std::cout << "mae " << report.mae << ", ib " << report.introduced_bugs_pct << "%\n";
            return 0;
        }
        if (*sweep) {
            nnrep::RunConfig cfg = nnrep::load_run_config(shared.config_path);
            apply_overrides(cfg, shared);
            const std::vector<nnrep::SweepTrial> trials =
                nnrep::run_sweep_partial(cfg, sweep_k, sweep_trials, shared.jobs);
            fs::create_directories(cfg.out_dir);
            std::ofstream((fs::path(cfg.out_dir) / "sweep.json")) << nnrep::sweep_to_json(trials);
            std::ofstream((fs::path(cfg.out_dir) / "sweep.csv")) << nnrep::sweep_to_csv(trials);
            std::cout << "trial status objective mae efficacy changed\n";
            for (const nnrep::SweepTrial& st : trials) {
                std::cout << st.trial << " " << st.status << " " << st.objective << " " << st.mae
                          << " ";
                if (st.repair_efficacy_pct) std::cout << *st.repair_efficacy_pct;
                else std::cout << "-";
                std::cout << " " << st.changed_weights << "\n";
            }
            return 0;
        }
    } catch (const nnrep::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const nnrep::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
