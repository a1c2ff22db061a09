#include "nnrep/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nnrep/interval.hpp"

namespace nnrep {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json parse_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw SchemaError(std::string("cannot open ") + what + " file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(std::string(what) + " JSON parse error in " + path + ": " + e.what());
    }
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw SchemaError(std::string(what) + " must be a non-empty array of rows");
    const size_t rows = j.size();
    const size_t cols = j[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw SchemaError(std::string(what) + " has ragged rows");
        for (size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number())
                throw SchemaError(std::string(what) + " entries must be numbers");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    if (!m.allFinite()) throw SchemaError(std::string(what) + " contains non-finite values");
    return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot open file for writing: " + path);
    out << text;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).string();
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error("quantile of empty set");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(values.size() - 1, lo + 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

} // namespace

Dataset load_dataset(const std::string& path) {
    const json doc = parse_file(path, "dataset");
    if (!doc.contains("inputs") || !doc.contains("targets"))
        throw SchemaError("dataset must have \"inputs\" and \"targets\": " + path);
    Dataset ds;
    ds.inputs = matrix_from_json(doc["inputs"], "inputs");
    ds.targets = matrix_from_json(doc["targets"], "targets");
    if (ds.inputs.rows() != ds.targets.rows())
        throw SchemaError("dataset inputs/targets row mismatch: " + path);
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    json doc;
    doc["inputs"] = matrix_to_json(ds.inputs);
    doc["targets"] = matrix_to_json(ds.targets);
    write_text(path, doc.dump() + "\n");
}

InputBox load_box(const std::string& path) {
    const json doc = parse_file(path, "box");
    if (!doc.contains("lo") || !doc.contains("hi"))
        throw SchemaError("box must have \"lo\" and \"hi\": " + path);
    InputBox box;
    const json& jl = doc["lo"];
    const json& jh = doc["hi"];
    box.lo.resize(static_cast<Eigen::Index>(jl.size()));
    box.hi.resize(static_cast<Eigen::Index>(jh.size()));
    for (size_t i = 0; i < jl.size(); ++i) box.lo[static_cast<Eigen::Index>(i)] = jl[i].get<double>();
    for (size_t i = 0; i < jh.size(); ++i) box.hi[static_cast<Eigen::Index>(i)] = jh[i].get<double>();
    return box;
}

Predicate predicate_from_spec(const std::string& spec_json, const std::string& base_dir) {
    json spec;
    try {
        spec = json::parse(spec_json);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("predicate spec parse error: ") + e.what());
    }
    if (spec.is_string()) return load_predicate(resolve(base_dir, spec.get<std::string>()));
    if (!spec.is_object()) throw SchemaError("predicate spec must be an object or path string");
    if (spec.contains("path")) return load_predicate(resolve(base_dir, spec["path"].get<std::string>()));
    if (spec.contains("disjuncts")) return predicate_from_json(spec.dump());
    const std::string kind = spec.value("kind", "");
    if (kind == "global") {
        if (spec["y_min"].is_array()) {
            Eigen::VectorXd lo(spec["y_min"].size()), hi(spec["y_max"].size());
            for (size_t i = 0; i < spec["y_min"].size(); ++i) lo[static_cast<Eigen::Index>(i)] = spec["y_min"][i].get<double>();
            for (size_t i = 0; i < spec["y_max"].size(); ++i) hi[static_cast<Eigen::Index>(i)] = spec["y_max"][i].get<double>();
            return make_global_bound(lo, hi);
        }
        return make_global_bound(spec["y_min"].get<double>(), spec["y_max"].get<double>());
    }
    if (kind == "rate")
        return make_rate_bound(spec["prev_output_index"].get<int>(), spec["delta_max"].get<double>());
    if (kind == "avoid_box")
        return make_avoid_box(spec["guard_index"].get<int>(), spec["guard_lo"].get<double>(),
                              spec["guard_hi"].get<double>(), spec["y_low"].get<double>(),
                              spec["y_high"].get<double>());
    throw SchemaError("unknown predicate kind: " + kind);
}

RunConfig load_run_config(const std::string& path) {
    const json doc = parse_file(path, "config");
    const std::string base = fs::path(path).parent_path().string();
    RunConfig cfg;
    if (!doc.contains("network") || !doc.contains("repair_data") || !doc.contains("predicate"))
        throw SchemaError("config needs \"network\", \"repair_data\" and \"predicate\"");
    cfg.network_path = resolve(base, doc["network"].get<std::string>());
    cfg.repair_data_path = resolve(base, doc["repair_data"].get<std::string>());
    if (doc.contains("test_data"))
        cfg.test_data_path = resolve(base, doc["test_data"].get<std::string>());
    cfg.predicate_json = doc["predicate"].dump();
    cfg.layer = doc.value("layer", 1);
    cfg.delta_max = doc.value("delta_max", 1.0);
    cfg.l1_weight = doc.value("l1_weight", 0.0);
    cfg.out_dir = resolve(base, doc.value("out_dir", "."));
    cfg.export_lp = doc.value("export_lp", false);
    cfg.verify_max_iterations = doc.value("verify_max_iterations", 20);
    if (doc.contains("node_subset")) {
        const json& ns = doc["node_subset"];
        if (ns.is_array()) {
            std::vector<int> subset;
            for (const json& v : ns) subset.push_back(v.get<int>());
            cfg.node_subset = subset;
            cfg.node_subset_spec = ns.dump();
        } else {
            cfg.node_subset_spec = ns.get<std::string>();
        }
    }
    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        cfg.solver.time_limit_s = s.value("time_limit_s", cfg.solver.time_limit_s);
        cfg.solver.node_limit = s.value("node_limit", cfg.solver.node_limit);
        cfg.solver.abs_gap = s.value("abs_gap", cfg.solver.abs_gap);
        cfg.solver.rel_gap = s.value("rel_gap", cfg.solver.rel_gap);
        cfg.solver.integrality_tol = s.value("integrality_tol", cfg.solver.integrality_tol);
        cfg.solver.deterministic = s.value("deterministic", cfg.solver.deterministic);
        cfg.solver.seed = s.value("seed", cfg.solver.seed);
        cfg.solver.log = s.value("log", cfg.solver.log);
        const std::string branching = s.value("branching", "most_fractional");
        if (branching == "pseudo_cost")
            cfg.solver.branching = Branching::PseudoCost;
        else if (branching != "most_fractional")
            throw SchemaError("unknown branching rule: " + branching);
        if (s.contains("qp_eps_abs")) cfg.solver.qp.eps_abs = s["qp_eps_abs"].get<double>();
        if (s.contains("qp_max_iter")) cfg.solver.qp.max_iter = s["qp_max_iter"].get<int>();
    }
    if (doc.contains("verify_box")) {
        const json& vb = doc["verify_box"];
        if (vb.is_string()) {
            cfg.verify_box = load_box(resolve(base, vb.get<std::string>()));
        } else {
            InputBox box;
            box.lo.resize(static_cast<Eigen::Index>(vb["lo"].size()));
            box.hi.resize(static_cast<Eigen::Index>(vb["hi"].size()));
            for (size_t i = 0; i < vb["lo"].size(); ++i)
                box.lo[static_cast<Eigen::Index>(i)] = vb["lo"][i].get<double>();
            for (size_t i = 0; i < vb["hi"].size(); ++i)
                box.hi[static_cast<Eigen::Index>(i)] = vb["hi"][i].get<double>();
            cfg.verify_box = box;
        }
    }
    return cfg;
}

namespace {

std::vector<int> resolve_node_subset(const RunConfig& cfg, int layer_width) {
    if (cfg.node_subset) return *cfg.node_subset;
    if (cfg.node_subset_spec.rfind("random:", 0) == 0) {
        // random:k:seed
        const std::string rest = cfg.node_subset_spec.substr(7);
        const size_t colon = rest.find(':');
        if (colon == std::string::npos)
            throw SchemaError("node_subset random spec must be random:k:seed");
        const int k = std::stoi(rest.substr(0, colon));
        const unsigned long seed = std::stoul(rest.substr(colon + 1));
        if (k < 1 || k > layer_width)
            throw SchemaError("node_subset k out of range for layer width " +
                              std::to_string(layer_width));
        std::vector<int> all(static_cast<size_t>(layer_width));
        std::iota(all.begin(), all.end(), 0);
        std::mt19937_64 rng(seed);
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(static_cast<size_t>(k));
        std::sort(all.begin(), all.end());
        return all;
    }
    return {};
}

void write_solver_log(const std::string& path, const SolveResult& res) {
    std::ostringstream os;
    os.precision(17);
    os << "status " << to_string(res.status) << "\n";
    os << "nodes " << res.node_count << "\n";
    os << "objective " << res.objective << "\n";
    os << "best_bound " << res.best_bound << "\n";
    os << "gap " << res.objective - res.best_bound << "\n";
    os << "wall_time_s " << res.wall_time_s << "\n";
    write_text(path, os.str());
}

} // namespace

RepairRun run_repair(const RunConfig& config) {
    const Network net = load_network(config.network_path);
    const Dataset repair_data = load_dataset(config.repair_data_path);
    const Predicate pred = predicate_from_spec(config.predicate_json, ".");
    Dataset test_data = repair_data;
    if (!config.test_data_path.empty()) test_data = load_dataset(config.test_data_path);

    if (config.layer < 1 || config.layer > net.depth())
        throw SchemaError("config layer out of range for this network");

    fs::create_directories(config.out_dir);

    RepairOptions opts;
    opts.delta_max = config.delta_max;
    opts.l1_weight = config.l1_weight;
    const std::vector<int> subset = resolve_node_subset(config, net.layer_width(config.layer));
    if (!subset.empty()) opts.node_subset = subset;

    RepairRun run;
    const auto t0 = std::chrono::steady_clock::now();

    if (config.verify_box) {
        RepairLoopConfig loop;
        loop.layer = config.layer;
        loop.options = opts;
        loop.solve = config.solver;
        loop.verify.solve = config.solver;
        loop.max_iterations = config.verify_max_iterations;
        RepairLoopResult lres =
            repair_loop(net, *config.verify_box, pred, repair_data.inputs, repair_data.targets, loop);
        run.loop_verdict = lres.verdict;
        run.loop_iterations = lres.iterations;
        run.repaired = lres.net;
        run.solve.status = lres.verdict == Verdict::Safe ? SolveStatus::Optimal
                                                         : SolveStatus::InfeasibleOrUnbounded;
        run.exit_code = lres.verdict == Verdict::Safe ? 0 : 3;
    } else {
        const BoundsTable bounds =
            compute_bounds_table(net, config.layer, repair_data.inputs, config.delta_max);
        const RepairEncoding enc = encode_repair(net, config.layer, repair_data.inputs,
                                                 repair_data.targets, pred, opts, bounds);
        if (config.export_lp) {
            std::ofstream lp(fs::path(config.out_dir) / "model.lp");
            enc.model.write_lp(lp);
        }
        run.solve = solve(enc.model, config.solver);
        if (run.solve.assignment) {
            const auto [w, b] = decode(enc, *run.solve.assignment);
            run.repaired = net.with_layer(config.layer, w, b);
            run.exit_code = 0;
        } else if (run.solve.status == SolveStatus::Infeasible) {
            run.exit_code = 2;
        } else {
            run.exit_code = 3;
        }
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (run.repaired) {
        save_network(*run.repaired, (fs::path(config.out_dir) / "repaired_network.json").string());
        run.report = evaluate_repair(net, *run.repaired, test_data.inputs, test_data.targets,
                                     pred, repair_data.inputs);
    } else {
        run.report = evaluate_repair(net, net, test_data.inputs, test_data.targets, pred,
                                     repair_data.inputs);
    }
    run.report.solver_status = config.verify_box ? to_string(run.loop_verdict)
                                                 : to_string(run.solve.status);
    run.report.runtime_s = config.solver.deterministic ? 0.0 : wall;
    write_text((fs::path(config.out_dir) / "report.json").string(), run.report.to_json());
    write_text((fs::path(config.out_dir) / "violation_points.csv").string(),
               run.report.violation_points_csv());
    write_solver_log((fs::path(config.out_dir) / "solver_log.txt").string(), run.solve);
    return run;
}

FitResult fit_toy_network(const Dataset& data, const std::vector<int>& hidden,
                          unsigned long seed, int iterations, double learning_rate) {
    if (data.inputs.rows() == 0) throw Error("fit: empty dataset");
    const int n = static_cast<int>(data.inputs.rows());
    const int d_in = static_cast<int>(data.inputs.cols());
    const int d_out = static_cast<int>(data.targets.cols());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<int> widths;
    widths.push_back(d_in);
    for (int h : hidden) {
        if (h < 1) throw SchemaError("fit: hidden widths must be positive");
        widths.push_back(h);
    }
    widths.push_back(d_out);

    std::vector<Eigen::MatrixXd> w(widths.size() - 1);
    std::vector<Eigen::VectorXd> b(widths.size() - 1);
    for (size_t l = 0; l < w.size(); ++l) {
        const int rows = widths[l + 1], cols = widths[l];
        const double scale = std::sqrt(2.0 / cols);
        w[l].resize(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) w[l](i, j) = scale * gauss(rng);
        b[l] = Eigen::VectorXd::Zero(rows);
    }

    const Eigen::MatrixXd& x = data.inputs;
    const Eigen::MatrixXd& t = data.targets;
    const int depth = static_cast<int>(w.size());
    std::vector<Eigen::MatrixXd> acts(static_cast<size_t>(depth) + 1);
    std::vector<Eigen::MatrixXd> pre(static_cast<size_t>(depth));
    double mse = 0.0;
    for (int it = 0; it < iterations; ++it) {
        acts[0] = x;
        for (int l = 0; l < depth; ++l) {
            pre[static_cast<size_t>(l)] =
                (acts[static_cast<size_t>(l)] * w[static_cast<size_t>(l)].transpose()).rowwise() +
                b[static_cast<size_t>(l)].transpose();
            acts[static_cast<size_t>(l) + 1] = l + 1 < depth
                                                   ? pre[static_cast<size_t>(l)].cwiseMax(0.0)
                                                   : pre[static_cast<size_t>(l)];
        }
        const Eigen::MatrixXd diff = acts[static_cast<size_t>(depth)] - t;
        mse = diff.squaredNorm() / n;
        if (!std::isfinite(mse))
            throw NumericalError("fit: loss diverged (NaN); lower the step size");
        Eigen::MatrixXd grad = 2.0 / n * diff;
        for (int l = depth - 1; l >= 0; --l) {
            const Eigen::MatrixXd gw = grad.transpose() * acts[static_cast<size_t>(l)];
            const Eigen::VectorXd gb = grad.colwise().sum().transpose();
            if (l > 0) {
                grad = (grad * w[static_cast<size_t>(l)])
                           .cwiseProduct((pre[static_cast<size_t>(l - 1)].array() > 0.0)
                                             .cast<double>()
                                             .matrix());
            }
            w[static_cast<size_t>(l)] -= learning_rate * gw;
            b[static_cast<size_t>(l)] -= learning_rate * gb;
        }
    }

    std::vector<Layer> layers;
    for (size_t l = 0; l < w.size(); ++l) layers.push_back({w[l], b[l]});
    return {Network(std::move(layers)), mse};
}

namespace {

// Multi-sine limb trajectories sampled at 20 Hz; amplitudes sized so the
// control target shows occasional fast transitions.
struct Trajectory {
    std::vector<std::array<double, 4>> features;
    std::vector<double> control;
};

Trajectory synth_trajectory(int steps, unsigned long seed, bool fast_component) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Trajectory out;
    out.features.resize(static_cast<size_t>(steps));
    out.control.resize(static_cast<size_t>(steps));
    const double h = 0.05;
    const double two_pi = 2.0 * M_PI;
    for (int k = 0; k < steps; ++k) {
        const double t = k * h;
        const double j0 = 0.05 * gauss(rng);
        const double j1 = 0.05 * gauss(rng);
        const double j2 = 0.05 * gauss(rng);
        const double j3 = 0.05 * gauss(rng);
        const double f0 = 8.0 * std::sin(two_pi * 1.0 * t) +
                          2.5 * std::sin(two_pi * 2.3 * t + 0.7) + j0;
        const double f1 = 5.0 * std::cos(two_pi * 1.0 * t + 0.4) +
                          1.5 * std::sin(two_pi * 3.1 * t) + j1;
        const double f2 = 6.0 * std::sin(two_pi * 1.1 * t + 1.2) +
                          2.0 * std::sin(two_pi * 2.9 * t + 2.1) + j2;
        const double f3 = 4.0 * std::cos(two_pi * 1.3 * t) +
                          1.2 * std::cos(two_pi * 3.7 * t + 0.5) + j3;
        out.features[static_cast<size_t>(k)] = {f0, f1, f2, f3};
        double ctrl = 6.0 * std::sin(two_pi * 1.0 * t - 0.8) +
                      3.0 * std::sin(two_pi * 2.1 * t + 0.3) + 0.04 * f0 * f2 / 10.0 +
                      0.02 * gauss(rng);
        if (fast_component) ctrl += 2.5 * std::sin(two_pi * 3.5 * t + 1.1);
        out.control[static_cast<size_t>(k)] = ctrl;
    }
    return out;
}

} // namespace

GenDataResult generate_experiment(const GenDataConfig& config) {
    if (config.kind != "global" && config.kind != "rate" && config.kind != "avoid")
        throw SchemaError("gen-data kind must be global, rate or avoid");
    const bool with_prev_controls = config.kind == "rate";
    const int dt = config.dt;
    if (dt < 1) throw SchemaError("gen-data: dt must be >= 1");
    const int n_features = 4;
    const int width = dt * (n_features + (with_prev_controls ? 1 : 0));

    const int pool_extra = 1000;
    const int n_pool = config.n_repair + config.n_test + pool_extra;
    const int steps = dt + config.n_train + n_pool + 1;
    const Trajectory traj = synth_trajectory(steps, config.seed, config.kind != "global");

    // Limb features scaled to roughly unit range; the previous-control block
    // stays in output units so rate predicates can reference it directly.
    auto window = [&](int k) {
        Eigen::VectorXd x(width);
        for (int f = 0; f < n_features; ++f)
            for (int j = 0; j < dt; ++j)
                x[f * dt + j] =
                    0.1 * traj.features[static_cast<size_t>(k - dt + 1 + j)][static_cast<size_t>(f)];
        if (with_prev_controls)
            for (int j = 0; j < dt; ++j)
                x[n_features * dt + j] = traj.control[static_cast<size_t>(k - dt + j)];
        return x;
    };
    // x0[prev_output_index] is the control one step back.
    const int prev_output_index = n_features * dt + dt - 1;

    const int first_window = dt;
    Dataset train;
    train.inputs.resize(config.n_train, width);
    train.targets.resize(config.n_train, 1);
    for (int i = 0; i < config.n_train; ++i) {
        train.inputs.row(i) = window(first_window + i).transpose();
        train.targets(i, 0) = traj.control[static_cast<size_t>(first_window + i)];
    }
    Eigen::MatrixXd pool_inputs(n_pool, width);
    Eigen::VectorXd pool_targets(n_pool);
    const int pool_start = first_window + config.n_train;
    for (int i = 0; i < n_pool; ++i) {
        pool_inputs.row(i) = window(pool_start + i).transpose();
        pool_targets[i] = traj.control[static_cast<size_t>(pool_start + i)];
    }

    FitResult fit = fit_toy_network(train, config.hidden, config.seed + 17,
                                    config.fit_iterations, config.learning_rate);

    const Eigen::MatrixXd pool_outputs = forward_outputs(fit.net, pool_inputs);

    // Tune the predicate on the pooled network outputs so violations exist.
    json pred_spec;
    Predicate pred = make_global_bound(-1e9, 1e9);
    if (config.kind == "global") {
        std::vector<double> ys(pool_outputs.data(), pool_outputs.data() + pool_outputs.rows());
        const double hi = std::round(quantile(ys, 0.96) * 100.0) / 100.0;
        const double lo = std::floor(quantile(ys, 0.0)) - 5.0;
        pred = make_global_bound(lo, hi);
        pred_spec = {{"kind", "global"}, {"y_min", lo}, {"y_max", hi}};
    } else if (config.kind == "rate") {
        const double delta = 2.0;
        pred = make_rate_bound(prev_output_index, delta);
        pred_spec = {{"kind", "rate"}, {"prev_output_index", prev_output_index},
                     {"delta_max", delta}};
    } else {
        const int guard_index = dt - 1; // current upper-limb angle
        std::vector<double> guards, ys;
        for (Eigen::Index i = 0; i < pool_inputs.rows(); ++i)
            guards.push_back(pool_inputs(i, guard_index));
        const double g_lo = std::round(quantile(guards, 0.40) * 100.0) / 100.0;
        const double g_hi = std::round(quantile(guards, 0.55) * 100.0) / 100.0;
        for (Eigen::Index i = 0; i < pool_inputs.rows(); ++i)
            if (pool_inputs(i, guard_index) >= g_lo && pool_inputs(i, guard_index) <= g_hi)
                ys.push_back(pool_outputs(i, 0));
        if (ys.size() < 10) throw Error("gen-data: avoid-box guard region too sparse");
        const double y_lo = std::round(quantile(ys, 0.35) * 100.0) / 100.0;
        const double y_hi = std::round(quantile(ys, 0.65) * 100.0) / 100.0;
        if (!(y_lo < y_hi)) throw Error("gen-data: degenerate avoid box");
        pred = make_avoid_box(guard_index, g_lo, g_hi, y_lo, y_hi);
        pred_spec = {{"kind", "avoid_box"}, {"guard_index", guard_index}, {"guard_lo", g_lo},
                     {"guard_hi", g_hi}, {"y_low", y_lo}, {"y_high", y_hi}};
    }

    // Shuffle the pool, then make sure the repair split has violations.
    std::vector<int> order(static_cast<size_t>(n_pool));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed + 31);
    std::shuffle(order.begin(), order.end(), rng);

    const ViolationScan pool_scan = scan_violations(pred, pool_inputs, pool_outputs);
    std::vector<int> repair_idx(order.begin(), order.begin() + config.n_repair);
    std::vector<int> test_idx(order.begin() + config.n_repair,
                              order.begin() + config.n_repair + config.n_test);
    auto violations_in = [&](const std::vector<int>& idx) {
        int count = 0;
        for (int i : idx)
            if (pool_scan.degrees[static_cast<size_t>(i)] > kEpsFeas) ++count;
        return count;
    };
    if (violations_in(repair_idx) == 0) {
        // Swap violating leftovers into the repair split.
        std::vector<int> leftovers(order.begin() + config.n_repair + config.n_test, order.end());
        int cursor = static_cast<int>(repair_idx.size()) - 1;
        for (int i : leftovers) {
            if (pool_scan.degrees[static_cast<size_t>(i)] > kEpsFeas && cursor >= 0) {
                repair_idx[static_cast<size_t>(cursor--)] = i;
                if (violations_in(repair_idx) >= 3) break;
            }
        }
        if (violations_in(repair_idx) == 0)
            throw Error("gen-data: could not assemble a violating repair split; adjust the seed");
    }

    auto subset_dataset = [&](const std::vector<int>& idx) {
        Dataset ds;
        ds.inputs.resize(static_cast<Eigen::Index>(idx.size()), width);
        ds.targets.resize(static_cast<Eigen::Index>(idx.size()), 1);
        for (size_t i = 0; i < idx.size(); ++i) {
            ds.inputs.row(static_cast<Eigen::Index>(i)) = pool_inputs.row(idx[i]);
            ds.targets(static_cast<Eigen::Index>(i), 0) = pool_targets[idx[i]];
        }
        return ds;
    };
    const Dataset repair = subset_dataset(repair_idx);
    const Dataset test = subset_dataset(test_idx);

    fs::create_directories(config.out_dir);
    GenDataResult result;
    const fs::path out(config.out_dir);
    result.network_path = (out / "network.json").string();
    result.train_path = (out / "train.json").string();
    result.repair_path = (out / "repair.json").string();
    result.test_path = (out / "test.json").string();
    result.predicate_path = (out / "predicate.json").string();
    result.config_path = (out / "config.json").string();
    result.repair_violations = violations_in(repair_idx);
    result.test_violations = violations_in(test_idx);
    result.train_mse = fit.mse;

    save_network(fit.net, result.network_path);
    save_dataset(train, result.train_path);
    save_dataset(repair, result.repair_path);
    save_dataset(test, result.test_path);
    save_predicate(pred, result.predicate_path);

    json cfg;
    cfg["network"] = "network.json";
    cfg["repair_data"] = "repair.json";
    cfg["test_data"] = "test.json";
    cfg["predicate"] = pred_spec;
    cfg["layer"] = static_cast<int>(config.hidden.size()); // last hidden layer
    cfg["delta_max"] = config.delta_max;
    cfg["l1_weight"] = 0.0;
    cfg["out_dir"] = "out";
    cfg["solver"] = {{"deterministic", true}, {"seed", 1},      {"node_limit", 40},
                     {"abs_gap", 1e-6},       {"rel_gap", 1e-4}, {"log", false}};
    json meta;
    meta["kind"] = config.kind;
    meta["seed"] = config.seed;
    meta["dt"] = dt;
    meta["input_width"] = width;
    meta["hidden"] = config.hidden;
    meta["train_mse"] = fit.mse;
    meta["repair_violations"] = result.repair_violations;
    meta["test_violations"] = result.test_violations;
    meta["predicate"] = pred_spec;
    cfg["meta"] = meta;
    write_text(result.config_path, cfg.dump(2) + "\n");
    return result;
}

std::vector<SweepTrial> run_sweep_partial(const RunConfig& config, int k, int trials, int jobs) {
    const Network net = load_network(config.network_path);
    const Dataset repair_data = load_dataset(config.repair_data_path);
    const Predicate pred = predicate_from_spec(config.predicate_json, ".");
    Dataset test_data = repair_data;
    if (!config.test_data_path.empty()) test_data = load_dataset(config.test_data_path);
    const int width = net.layer_width(config.layer);
    if (k < 1 || k > width) throw SchemaError("sweep: k out of range for layer width");
    if (trials < 1) throw SchemaError("sweep: trials must be >= 1");

    std::vector<SweepTrial> results(static_cast<size_t>(trials));
    const int n_jobs = std::max(1, jobs);
#pragma omp parallel for schedule(dynamic) num_threads(n_jobs)
    for (int trial = 0; trial < trials; ++trial) {
        SweepTrial st;
        st.trial = trial;
        std::vector<int> all(static_cast<size_t>(width));
        std::iota(all.begin(), all.end(), 0);
        std::mt19937_64 rng(config.solver.seed + static_cast<unsigned long>(trial) * 7919 + 1);
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(static_cast<size_t>(k));
        std::sort(all.begin(), all.end());
        st.subset = all;
        try {
            RepairOptions opts;
            opts.delta_max = config.delta_max;
            opts.l1_weight = config.l1_weight;
            opts.node_subset = all;
            const BoundsTable bounds = compute_bounds_table_serial(
                net, config.layer, repair_data.inputs, config.delta_max);
            const RepairEncoding enc = encode_repair(net, config.layer, repair_data.inputs,
                                                     repair_data.targets, pred, opts, bounds);
            const SolveResult sres = solve(enc.model, config.solver);
            st.status = to_string(sres.status);
            if (sres.assignment) {
                st.objective = sres.objective;
                const auto [w, b] = decode(enc, *sres.assignment);
                const Network repaired = net.with_layer(config.layer, w, b);
                int changed = 0;
                const Layer& orig = net.layer(config.layer);
                for (Eigen::Index r = 0; r < w.rows(); ++r)
                    for (Eigen::Index c = 0; c < w.cols(); ++c)
                        if (std::abs(w(r, c) - orig.weights(r, c)) > 1e-9) ++changed;
                for (Eigen::Index r = 0; r < b.size(); ++r)
                    if (std::abs(b[r] - orig.bias[r]) > 1e-9) ++changed;
                st.changed_weights = changed;
                const Eigen::MatrixXd y_new = forward_outputs_serial(repaired, test_data.inputs);
                const Eigen::MatrixXd y_old = forward_outputs_serial(net, test_data.inputs);
                st.mae = (y_new - y_old).cwiseAbs().rowwise().mean().mean();
                // Repair efficacy on the repair set itself.
                const Eigen::MatrixXd yr =
                    forward_outputs_serial(repaired, repair_data.inputs);
                const Eigen::MatrixXd yo = forward_outputs_serial(net, repair_data.inputs);
                const ViolationScan before = scan_violations_serial(pred, repair_data.inputs, yo);
                const ViolationScan after = scan_violations_serial(pred, repair_data.inputs, yr);
                long fixed = 0;
                for (size_t i = 0; i < before.degrees.size(); ++i)
                    if (before.degrees[i] > kEpsFeas && after.degrees[i] <= kEpsFeas) ++fixed;
                if (before.violations > 0)
                    st.repair_efficacy_pct =
                        100.0 * static_cast<double>(fixed) / before.violations;
            }
        } catch (const std::exception& e) {
            st.status = std::string("error: ") + e.what();
        }
        results[static_cast<size_t>(trial)] = std::move(st);
    }
    return results;
}

std::string sweep_to_json(const std::vector<SweepTrial>& trials) {
    json doc = json::array();
    for (const SweepTrial& st : trials) {
        json jt;
        jt["trial"] = st.trial;
        jt["subset"] = st.subset;
        jt["status"] = st.status;
        if (std::isfinite(st.objective)) jt["objective"] = st.objective;
        else jt["objective"] = nullptr;
        if (std::isfinite(st.mae)) jt["mae"] = st.mae;
        else jt["mae"] = nullptr;
        if (st.repair_efficacy_pct) jt["repair_efficacy_pct"] = *st.repair_efficacy_pct;
        else jt["repair_efficacy_pct"] = nullptr;
        jt["changed_weights"] = st.changed_weights;
        doc.push_back(std::move(jt));
    }
    return doc.dump(2) + "\n";
}

std::string sweep_to_csv(const std::vector<SweepTrial>& trials) {
    std::ostringstream os;
    os.precision(17);
    os << "trial,status,objective,mae,repair_efficacy_pct,changed_weights\n";
    for (const SweepTrial& st : trials) {
        os << st.trial << "," << st.status << ",";
        if (std::isfinite(st.objective)) os << st.objective;
        os << ",";
        if (std::isfinite(st.mae)) os << st.mae;
        os << ",";
        if (st.repair_efficacy_pct) os << *st.repair_efficacy_pct;
        os << "," << st.changed_weights << "\n";
    }
    return os.str();
}

} // namespace nnrep
