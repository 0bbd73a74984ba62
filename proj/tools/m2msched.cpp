// m2msched: experiment runner for the multiclass M2M uplink scheduler.
//
//   m2msched validate <config>
//   m2msched run <config|scenario> [--policy P]... [--seed N] [--replications N] [--out DIR]
//   m2msched sweep <config|scenario> --var lambda_ed1 --from A --to B --steps K [--out DIR]
//   m2msched optimize <config|scenario> [--resolution N] [--ed] [--out DIR]
//   m2msched trace <config|scenario> [--replication N] [--out FILE]
//   m2msched show <config|scenario>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "m2msched/m2msched.hpp"

namespace fs = std::filesystem;
using namespace m2m;

namespace {

bool is_scenario(const std::string& name) {
    const auto names = builtin_scenario_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

ExperimentPlan load_plan(const std::string& source, double extreme_gamma) {
    if (is_scenario(source)) return builtin_scenario(source, extreme_gamma);
    ExperimentPlan plan;
    plan.scenario = "custom";
    plan.base = load_config(source);
    if (!plan.base.ed_classes.empty()) plan.lambda_ed1 = {plan.base.ed_classes.front().arrival_rate_per_ms};
    return plan;
}

bool check_config(const SimConfig& cfg) {
    const auto violations = validate_config(cfg);
    for (const auto& v : violations) std::cerr << "invalid: " << v << '\n';
    const double rho = offered_load(cfg);
    std::cerr << "offered load rho = " << rho << '\n';
    if (rho >= 1.0) std::cerr << "warning: offered load >= 1, queues are unstable\n";
    return violations.empty();
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void emit_results(const fs::path& dir, const SweepResult& result) {
    auto csv = open_out(dir / "results.csv");
    write_results_header(csv, result.plan.base);
    for (const auto& p : result.points) write_results_rows(csv, p);
    auto js = open_out(dir / "summary.json");
    js << summary_json(result).dump(2) << '\n';
}

void print_point(const PointResult& p) {
    std::fprintf(stderr, "lambda_ed1=%.4f rho=%.3f", p.lambda_ed1, p.offered_load);
    for (const auto& r : p.policies) {
        std::fprintf(stderr, "  %s V=%.4f+-%.4f", std::string{to_string(r.policy)}.c_str(), r.v.mean,
                     r.v.ci_half_width);
    }
    std::fprintf(stderr, "  dV=%.4f\n", p.delta_v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiclass M2M uplink scheduler simulator"};
    app.require_subcommand(1);

    double extreme_gamma = 1.5;
    app.add_option("--extreme-gamma", extreme_gamma, "PU1 penalty exponent for penalty_extreme")->capture_default_str();

    std::string config_path;
    auto* validate = app.add_subcommand("validate", "Check a config file against every invariant");
    validate->add_option("config", config_path)->required();

    std::string source;
    std::vector<std::string> policy_names;
    std::uint64_t seed = 0;
    int replications = 0;
    std::string out_dir = "results";
    bool tune = false;
    unsigned threads = default_thread_count();

    auto* run_cmd = app.add_subcommand("run", "Simulate every policy at one operating point");
    run_cmd->add_option("source", source, "config file or scenario name")->required();
    run_cmd->add_option("--policy", policy_names, "proposed|fcfs|edd|fixed_priority (repeatable)");
    run_cmd->add_option("--seed", seed);
    run_cmd->add_option("--replications", replications);
    run_cmd->add_option("--out", out_dir)->capture_default_str();
    run_cmd->add_flag("--tune", tune, "grid-search the proposed policy's thresholds first");
    run_cmd->add_option("--threads", threads);

    std::string var = "lambda_ed1";
    double from = 0.1, to = 0.25;
    int steps = 4, resolution = 9, tuning_reps = 5;
    auto* sweep = app.add_subcommand("sweep", "Sweep lambda_ed1 with per-point threshold tuning");
    sweep->add_option("source", source, "config file or scenario name")->required();
    sweep->add_option("--var", var)->capture_default_str();
    sweep->add_option("--from", from)->capture_default_str();
    sweep->add_option("--to", to)->capture_default_str();
    sweep->add_option("--steps", steps)->capture_default_str();
    sweep->add_option("--policy", policy_names);
    sweep->add_option("--seed", seed);
    sweep->add_option("--replications", replications);
    sweep->add_option("--resolution", resolution)->capture_default_str();
    sweep->add_option("--tuning-replications", tuning_reps)->capture_default_str();
    sweep->add_option("--out", out_dir)->capture_default_str();
    sweep->add_option("--threads", threads);
    bool baselines_drop = false;
    sweep->add_flag("--baselines-drop", baselines_drop, "baselines also drop expired PU packets");

    bool tune_ed = false;
    auto* optimize = app.add_subcommand("optimize", "Grid-search the proposed policy's thresholds");
    optimize->add_option("source", source, "config file or scenario name")->required();
    optimize->add_option("--resolution", resolution)->capture_default_str();
    optimize->add_option("--replications", replications);
    optimize->add_option("--seed", seed);
    optimize->add_flag("--ed", tune_ed, "also search ED thresholds (implied by opt_delta)");
    optimize->add_option("--out", out_dir)->capture_default_str();
    optimize->add_option("--threads", threads);

    std::uint64_t replication = 0;
    std::string trace_out;
    auto* trace_cmd = app.add_subcommand("trace", "Dump the arrival/service trace of one replication");
    trace_cmd->add_option("source", source, "config file or scenario name")->required();
    trace_cmd->add_option("--replication", replication);
    trace_cmd->add_option("--seed", seed);
    trace_cmd->add_option("--out", trace_out, "CSV file (default stdout)");

    auto* show = app.add_subcommand("show", "Print the config of a scenario (or a normalised config file)");
    show->add_option("source", source, "config file or scenario name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto cfg = load_config(config_path);
            if (!check_config(cfg)) return 1;
            std::cout << "ok\n";
            return 0;
        }

        ExperimentPlan plan = load_plan(source, extreme_gamma);
        if (seed != 0) plan.base.rng_seed = seed;
        if (replications > 0) plan.base.replications = replications;
        plan.threads = threads;
        if (!policy_names.empty()) {
            plan.policies.clear();
            for (const auto& n : policy_names) {
                const auto kind = parse_policy_kind(n);
                if (!kind) throw std::invalid_argument("unknown policy '" + n + "'");
                plan.policies.push_back(*kind);
            }
        }
        if (*show) {
            std::cout << dump_config(plan.base);
            return 0;
        }
        if (!check_config(plan.base)) return 1;

        if (*trace_cmd) {
            const auto trace = generate_trace(plan.base, replication);
            if (trace_out.empty()) {
                write_trace_csv(std::cout, trace);
            } else {
                auto out = open_out(trace_out);
                write_trace_csv(out, trace);
            }
            return 0;
        }

        if (*run_cmd) {
            plan.lambda_ed1 = {plan.base.ed_classes.empty() ? 0.0 : plan.base.ed_classes.front().arrival_rate_per_ms};
            plan.tune_pu = tune;
            plan.tune_ed = tune && plan.tune_ed;
            const auto result = run_sweep(plan, print_point);
            emit_results(out_dir, result);
            return 0;
        }

        if (*sweep) {
            if (var != "lambda_ed1") throw std::invalid_argument("only --var lambda_ed1 is supported");
            if (steps < 1) throw std::invalid_argument("--steps must be >= 1");
            plan.lambda_ed1.clear();
            for (int i = 0; i < steps; ++i) {
                plan.lambda_ed1.push_back(steps == 1 ? from : from + (to - from) * i / (steps - 1));
            }
            plan.resolution = resolution;
            plan.tuning_replications = tuning_reps;
            plan.baselines_drop_failed_pu = baselines_drop;

            fs::create_directories(out_dir);
            std::ofstream csv(fs::path(out_dir) / "results.csv");
            write_results_header(csv, plan.base);
            const auto result = run_sweep(plan, [&](const PointResult& p) {
                print_point(p);
                write_results_rows(csv, p);
                csv.flush();
            });
            csv.close();
            emit_results(out_dir, result);
            std::fprintf(stderr, "max dV = %.4f\n", result.delta_v_max());
            return 0;
        }

        if (*optimize) {
            const bool ed = tune_ed || plan.tune_ed;
            const auto traces = make_traces(plan.base, plan.base.replications, 0, threads);
            const auto tuning = tune_thresholds(plan.base, true, ed, resolution, traces, threads);
            auto out = open_out(fs::path(out_dir) / "grid.csv");
            write_grid_csv(out, tuning.space, tuning.grid);
            std::cout << "best V = " << tuning.grid.best_mean << '\n';
            for (std::size_t d = 0; d < tuning.space.dims.size(); ++d) {
                std::cout << "  threshold " << to_string(tuning.space.dims[d].cls) << " = " << tuning.grid.best[d]
                          << " ms\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
