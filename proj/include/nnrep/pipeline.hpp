#ifndef NNREP_PIPELINE_HPP
#define NNREP_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "nnrep/encoder.hpp"
#include "nnrep/metrics.hpp"
#include "nnrep/network.hpp"
#include "nnrep/predicate.hpp"
#include "nnrep/solver.hpp"
#include "nnrep/verifier.hpp"

namespace nnrep {

struct Dataset {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;
};

// JSON schema: {"inputs":[[...]],"targets":[[...]]}
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

// ---------------------------------------------------------------------------
// Repair runs

struct RunConfig {
    std::string network_path;
    std::string repair_data_path;
    std::string test_data_path;
    // Either a predicate file path or a constructor shorthand (see
    // predicate_from_spec); exactly one is set.
    std::string predicate_json; // raw JSON text of the "predicate" config entry
    int layer = 1;
    std::optional<std::vector<int>> node_subset;
    std::string node_subset_spec; // original spec string ("random:k:seed" or list)
    double delta_max = 1.0;
    double l1_weight = 0.0;
    SolveParams solver;
    std::optional<InputBox> verify_box;
    int verify_max_iterations = 20;
    std::string out_dir = ".";
    bool export_lp = false;
};

// Loads a run config; relative paths resolve against the config's directory.
RunConfig load_run_config(const std::string& path);

// Builds a predicate from either {"path": file} or a shorthand object:
//   {"kind":"global","y_min":a,"y_max":b}
//   {"kind":"rate","prev_output_index":i,"delta_max":d}
//   {"kind":"avoid_box","guard_index":g,"guard_lo":a,"guard_hi":b,
//    "y_low":lo,"y_high":hi}
Predicate predicate_from_spec(const std::string& spec_json, const std::string& base_dir);

struct RepairRun {
    int exit_code = 1; // 0 feasible, 2 infeasible, 3 unknown/no incumbent
    SolveResult solve;
    RepairReport report;
    std::optional<Network> repaired;
    Verdict loop_verdict = Verdict::Unknown; // meaningful when a verify box is set
    int loop_iterations = 0;
};

// Full repair pipeline: bounds -> encode -> solve -> decode -> evaluate.
// Writes repaired_network.json, report.json, violation_points.csv and
// solver_log.txt into out_dir. With a verify box it runs the repair/verify
// loop instead of a single solve.
RepairRun run_repair(const RunConfig& config);

// ---------------------------------------------------------------------------
// Synthetic experiment generation

struct GenDataConfig {
    std::string kind = "global"; // global | rate | avoid
    unsigned long seed = 1;
    int dt = 10;
    std::vector<int> hidden = {32, 32, 32};
    int n_train = 2000;
    int n_repair = 150;
    int n_test = 2000;
    int fit_iterations = 4000;
    double learning_rate = 0.02;
    double delta_max = 0.25; // recorded in the emitted run config
    std::string out_dir = ".";
};

struct GenDataResult {
    std::string network_path, train_path, repair_path, test_path, predicate_path, config_path;
    int repair_violations = 0;
    int test_violations = 0;
    double train_mse = 0.0;
};

// Deterministic given the seed: multi-sine trajectories, sliding-window
// flattening (input width = dt * feature count), a toy-trained network and a
// predicate tuned so the repair split contains violating samples. Also emits
// a ready-to-run repair config.
GenDataResult generate_experiment(const GenDataConfig& config);

// ---------------------------------------------------------------------------
// Toy trainer

struct FitResult {
    Network net;
    double mse = 0.0;
};

// Full-batch gradient descent on sum-of-squares loss with a fixed iteration
// budget. Throws NumericalError when the loss diverges.
FitResult fit_toy_network(const Dataset& data, const std::vector<int>& hidden,
                          unsigned long seed, int iterations, double learning_rate);

// ---------------------------------------------------------------------------
// Partial-node repair sweep

struct SweepTrial {
    int trial = 0;
    std::vector<int> subset;
    std::string status;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double mae = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> repair_efficacy_pct;
    int changed_weights = 0;
};

// `trials` independent k-node random subsets; infeasible trials are recorded,
// not fatal. Runs up to `jobs` trials concurrently; output order is by trial
// index regardless of scheduling.
std::vector<SweepTrial> run_sweep_partial(const RunConfig& config, int k, int trials, int jobs);

std::string sweep_to_json(const std::vector<SweepTrial>& trials);
std::string sweep_to_csv(const std::vector<SweepTrial>& trials);

// Box JSON: {"lo":[...],"hi":[...]}
InputBox load_box(const std::string& path);

} // namespace nnrep

#endif
