// Experiment harness: built-in scenarios, seeded replications with common random
// numbers, per-point threshold tuning for the proposed policy, and result writers.
#pragma once

#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "engine.hpp"
#include "metrics.hpp"
#include "optimizer.hpp"
#include "schedulers.hpp"
#include "traffic.hpp"

namespace m2m {

/// Replication indices used for threshold tuning start here, so tuning never sees
/// the traces the reported results are computed on.
inline constexpr std::uint64_t kTuningReplicationBase = 1ULL << 32;

inline const std::vector<PolicyKind>& all_policies() {
    static const std::vector<PolicyKind> kAll{PolicyKind::proposed, PolicyKind::fcfs, PolicyKind::edd,
                                              PolicyKind::fixed_priority};
    return kAll;
}

struct ExperimentPlan {
    std::string scenario = "custom";
    SimConfig base;
    std::vector<double> lambda_ed1;  ///< sweep values for the first ED class's arrival rate
    std::vector<PolicyKind> policies = all_policies();
    bool tune_pu = true;   ///< grid-search PU thresholds for the proposed policy at every point
    bool tune_ed = false;  ///< also search the non-lowest ED thresholds
    int resolution = 9;
    int tuning_replications = 5;
    /// Let the baselines drop expired PU packets too (ablation; off by default).
    bool baselines_drop_failed_pu = false;
    unsigned threads = default_thread_count();
};

inline std::vector<std::string> builtin_scenario_names() {
    return {"heterogeneous", "homogeneous", "opt_delta", "penalty_moderate", "penalty_extreme"};
}

/// Default operating point: two PU and two ED classes with unit service rates.
inline SimConfig heterogeneous_config() {
    SimConfig cfg;
    cfg.pu_classes = {
        PuClassSpec{1, 1800.0, 300, 4.0, 1.0, 1.0, 1.0, 0.0},
        PuClassSpec{2, 500.0, 200, 8.0, 1.0, 1.0, 1.0, 0.0},
    };
    cfg.ed_classes = {
        EdClassSpec{1, 0.1, 150, 1.0, 1.0, 10.0, 1.0, 10.0 + 4.0 / 1.0, std::nullopt},
        EdClassSpec{2, 0.1, 350, 1.0, 0.7, 20.0, 1.0, kInfinity, std::nullopt},
    };
    for (auto& pu : cfg.pu_classes) pu.threshold_ms = pu_search_window(pu).midpoint();
    cfg.sim_horizon_ms = 40'000.0;
    cfg.rng_seed = 1;
    cfg.replications = 20;
    cfg.drop_failed_pu = true;
    cfg.work_conserving = true;
    // Same class ranking as the proposed policy, without thresholds or dropping.
    cfg.policy.static_order = {{ClassKind::ed, 1}, {ClassKind::ed, 2}, {ClassKind::pu, 1}, {ClassKind::pu, 2}};
    return cfg;
}

/// Builds a named scenario. `extreme_gamma` is the PU1 penalty exponent of penalty_extreme.
inline ExperimentPlan builtin_scenario(std::string_view name, double extreme_gamma = 1.5) {
    ExperimentPlan plan;
    plan.scenario = std::string{name};
    plan.base = heterogeneous_config();
    plan.lambda_ed1 = {0.10, 0.15, 0.20, 0.25};

    if (name == "heterogeneous") {
    } else if (name == "homogeneous") {
        auto& pu = plan.base.pu_classes;
        pu[0].period_ms = pu[1].period_ms = 800.0;
        pu[0].deadline_ms = 7.8;
        pu[1].deadline_ms = 8.0;
        for (auto& p : pu) p.threshold_ms = pu_search_window(p).midpoint();
        auto& ed = plan.base.ed_classes;
        ed[0].a = 0.65;
        ed[1].a = 7.0;
        ed[0].b = 19.0;
        ed[1].b = 20.0;
        ed[0].threshold_ms = ed[0].b + 4.0 / ed[0].a;
        // Higher a and higher b for ED2 leave the (a, b) ranking ambiguous; keep class 1 first.
        ed[0].priority_rank = 1;
        ed[1].priority_rank = 2;
    } else if (name == "opt_delta") {
        plan.tune_ed = true;
    } else if (name == "penalty_moderate") {
        for (auto& p : plan.base.pu_classes) p.gamma = 1.2;
    } else if (name == "penalty_extreme") {
        plan.base.pu_classes[0].gamma = extreme_gamma;
        plan.base.pu_classes[1].gamma = 1.2;
    } else {
        throw std::invalid_argument("unknown scenario '" + std::string{name} + "'");
    }
    plan.base.ed_classes[0].arrival_rate_per_ms = plan.lambda_ed1.front();
    return plan;
}

struct PolicyPointResult {
    PolicyKind policy = PolicyKind::proposed;
    ReplicationSummary v;
    std::vector<std::optional<double>> pu_utility;  ///< replication means of raw class utilities
    std::vector<std::optional<double>> ed_utility;
    std::vector<double> pu_drop_rate;
    std::vector<double> v_samples;
};

struct PointResult {
    double lambda_ed1 = 0.0;
    double offered_load = 0.0;
    std::vector<PolicyPointResult> policies;
    std::map<std::string, TimeMs> tuned_thresholds;
    std::vector<PolicyKind> baseline_order;
    /// Proposed mean V minus the best baseline mean V; 0 without both.
    double delta_v = 0.0;

    const PolicyPointResult* find(PolicyKind kind) const {
        for (const auto& p : policies) {
            if (p.policy == kind) return &p;
        }
        return nullptr;
    }
};

struct SweepResult {
    ExperimentPlan plan;
    std::vector<PointResult> points;

    double delta_v_max() const {
        double best = 0.0;
        bool first = true;
        for (const auto& p : points) {
            if (first || p.delta_v > best) best = p.delta_v;
            first = false;
        }
        return best;
    }
};

inline std::vector<Trace> make_traces(const SimConfig& cfg, int count, std::uint64_t first_replication,
                                      unsigned threads = default_thread_count()) {
    std::vector<Trace> traces(static_cast<std::size_t>(count));
    parallel_for(traces.size(), threads, [&](std::size_t r) { traces[r] = generate_trace(cfg, first_replication + r); });
    return traces;
}

/// Baselines are plain textbook schedulers: unless asked otherwise they never drop
/// expired PU packets.
inline SimConfig config_for_policy(SimConfig cfg, PolicyKind kind, bool baselines_drop = false) {
    cfg.policy.kind = kind;
    if (kind != PolicyKind::proposed && !baselines_drop) cfg.drop_failed_pu = false;
    return cfg;
}

inline ReplicationSummary summarize(std::span<const double> values) {
    if (values.size() == 1) return {values.front(), 0.0};
    return aggregate_replications(values);
}

inline PolicyPointResult evaluate_policy(const SimConfig& base, PolicyKind kind, std::span<const Trace> traces,
                                         unsigned threads = 1, bool baselines_drop = false) {
    const SimConfig cfg = config_for_policy(base, kind, baselines_drop);
    const auto policy = make_policy(kind, cfg);
    std::vector<UtilityReport> reports(traces.size());
    parallel_for(traces.size(), threads,
                 [&](std::size_t r) { reports[r] = evaluate_utilities(run(cfg, *policy, traces[r]), cfg); });

    PolicyPointResult out;
    out.policy = kind;
    for (const auto& rep : reports) out.v_samples.push_back(rep.system);
    out.v = summarize(out.v_samples);

    auto mean_of = [&](auto pick, std::size_t n) {
        std::vector<std::optional<double>> means(n);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& rep : reports) {
                if (const auto u = pick(rep)[i]) {
                    sum += *u;
                    ++count;
                }
            }
            if (count) means[i] = sum / static_cast<double>(count);
        }
        return means;
    };
    out.pu_utility = mean_of([](const UtilityReport& r) -> const auto& { return r.pu; }, cfg.pu_classes.size());
    out.ed_utility = mean_of([](const UtilityReport& r) -> const auto& { return r.ed; }, cfg.ed_classes.size());
    out.pu_drop_rate.assign(cfg.pu_classes.size(), 0.0);
    for (const auto& rep : reports) {
        for (std::size_t i = 0; i < rep.pu_drop_rate.size(); ++i) {
            out.pu_drop_rate[i] += rep.pu_drop_rate[i] / static_cast<double>(reports.size());
        }
    }
    return out;
}

/// Thresholds search for the proposed policy on the tuning traces. Returns the tuned
/// config together with the full grid.
struct TuningResult {
    SimConfig tuned;
    SearchSpace space;
    GridResult grid;
};

inline TuningResult tune_thresholds(const SimConfig& cfg, bool tune_pu, bool tune_ed, int resolution,
                                    std::span<const Trace> tuning_traces, unsigned threads) {
    TuningResult out;
    out.space = default_search_space(cfg, tune_ed, resolution);
    if (!tune_pu) {
        std::erase_if(out.space.dims, [](const SearchDimension& d) { return d.cls.kind == ClassKind::pu; });
    }
    if (out.space.dims.empty()) {
        out.tuned = cfg;
        return out;
    }
    const SimConfig proposed_cfg = config_for_policy(cfg, PolicyKind::proposed);
    out.grid = grid_search(
        out.space,
        [&](std::span<const TimeMs> point) {
            const SimConfig trial = with_thresholds(proposed_cfg, out.space, point);
            const ProposedPolicy policy(ClassTable(trial), trial.work_conserving);
            std::vector<double> v;
            for (const auto& trace : tuning_traces) v.push_back(evaluate_utilities(run(trial, policy, trace), trial).system);
            return summarize(v);
        },
        threads);
    out.tuned = with_thresholds(cfg, out.space, out.grid.best);
    return out;
}

/// One sweep point: tune (if asked), then evaluate every policy on the same traces.
inline PointResult run_point(const ExperimentPlan& plan, const SimConfig& cfg) {
    PointResult point;
    point.lambda_ed1 = cfg.ed_classes.empty() ? 0.0 : cfg.ed_classes.front().arrival_rate_per_ms;
    point.offered_load = offered_load(cfg);

    SimConfig proposed_cfg = cfg;
    const bool has_proposed =
        std::find(plan.policies.begin(), plan.policies.end(), PolicyKind::proposed) != plan.policies.end();
    if (has_proposed && (plan.tune_pu || plan.tune_ed)) {
        const auto tuning = make_traces(cfg, plan.tuning_replications, kTuningReplicationBase, plan.threads);
        const auto result = tune_thresholds(cfg, plan.tune_pu, plan.tune_ed, plan.resolution, tuning, plan.threads);
        proposed_cfg = result.tuned;
        for (std::size_t d = 0; d < result.space.dims.size(); ++d) {
            point.tuned_thresholds[to_string(result.space.dims[d].cls)] = result.grid.best[d];
        }
    }

    const auto traces = make_traces(cfg, cfg.replications, 0, plan.threads);
    for (PolicyKind kind : plan.policies) {
        const SimConfig& c = kind == PolicyKind::proposed ? proposed_cfg : cfg;
        point.policies.push_back(evaluate_policy(c, kind, traces, plan.threads, plan.baselines_drop_failed_pu));
    }

    const auto* proposed = point.find(PolicyKind::proposed);
    std::optional<double> best_baseline;
    for (const auto& p : point.policies) {
        if (p.policy == PolicyKind::proposed) continue;
        if (!best_baseline || p.v.mean > *best_baseline) best_baseline = p.v.mean;
    }
    if (proposed && best_baseline) point.delta_v = proposed->v.mean - *best_baseline;
    return point;
}

inline SimConfig config_at(const SimConfig& base, double lambda_ed1) {
    SimConfig cfg = base;
    if (!cfg.ed_classes.empty()) cfg.ed_classes.front().arrival_rate_per_ms = lambda_ed1;
    return cfg;
}

inline SweepResult run_sweep(const ExperimentPlan& plan,
                             const std::function<void(const PointResult&)>& on_point = nullptr) {
    if (plan.lambda_ed1.empty()) throw std::invalid_argument("run_sweep: empty sweep range");
    if (plan.base.replications < 2) throw std::invalid_argument("run_sweep: at least 2 replications are required");
    const auto violations = validate_config(plan.base);
    if (!violations.empty()) throw std::invalid_argument("run_sweep: invalid base config: " + violations.front());
    SweepResult result;
    result.plan = plan;
    for (double lambda : plan.lambda_ed1) {
        result.points.push_back(run_point(plan, config_at(plan.base, lambda)));
        if (on_point) on_point(result.points.back());
    }
    return result;
}

// Writers.

namespace detail {

inline std::string fmt_fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_fixed(*v) : std::string{}; }

}  // namespace detail

/// policy,lambda_ed1,V_mean,V_ci,Upu<id>...,Ued<id>...,drop_rate_pu<id>...
inline void write_results_header(std::ostream& out, const SimConfig& cfg) {
    out << "policy,lambda_ed1,V_mean,V_ci";
    for (const auto& pu : cfg.pu_classes) out << ",Upu" << pu.id;
    for (const auto& ed : cfg.ed_classes) out << ",Ued" << ed.id;
    for (const auto& pu : cfg.pu_classes) out << ",drop_rate_pu" << pu.id;
    out << '\n';
}

inline void write_results_rows(std::ostream& out, const PointResult& point) {
    for (const auto& p : point.policies) {
        out << to_string(p.policy) << ',' << detail::fmt_fixed(point.lambda_ed1, 4) << ','
            << detail::fmt_fixed(p.v.mean) << ',' << detail::fmt_fixed(p.v.ci_half_width);
        for (const auto& u : p.pu_utility) out << ',' << detail::fmt_opt(u);
        for (const auto& u : p.ed_utility) out << ',' << detail::fmt_opt(u);
        for (double d : p.pu_drop_rate) out << ',' << detail::fmt_fixed(d);
        out << '\n';
    }
}

inline nlohmann::json point_json(const PointResult& point) {
    nlohmann::json j;
    j["lambda_ed1"] = point.lambda_ed1;
    j["offered_load"] = point.offered_load;
    for (const auto& p : point.policies) {
        j["V_mean"][std::string{to_string(p.policy)}] = p.v.mean;
        j["V_ci"][std::string{to_string(p.policy)}] = p.v.ci_half_width;
    }
    j["delta_v"] = point.delta_v;
    j["tuned_thresholds"] = nlohmann::json::object();
    for (const auto& [cls, t] : point.tuned_thresholds) j["tuned_thresholds"][cls] = t;
    return j;
}

inline nlohmann::json summary_json(const SweepResult& result) {
    const auto& plan = result.plan;
    nlohmann::json j;
    j["scenario"] = plan.scenario;
    j["rng_seed"] = plan.base.rng_seed;
    j["replications"] = plan.base.replications;
    j["sim_horizon_ms"] = plan.base.sim_horizon_ms;
    j["drop_failed_pu"] = plan.base.drop_failed_pu;
    j["baselines_drop_failed_pu"] = plan.baselines_drop_failed_pu;
    j["tuning"] = {{"pu", plan.tune_pu},
                   {"ed", plan.tune_ed},
                   {"resolution", plan.resolution},
                   {"replications", plan.tuning_replications}};
    auto policies = nlohmann::json::array();
    for (auto k : plan.policies) policies.push_back(to_string(k));
    j["policies"] = policies;
    auto order = nlohmann::json::array();
    const ClassTable table(plan.base);
    for (std::size_t k : resolve_static_order(table, plan.base.policy.static_order)) order.push_back(to_string(table[k].ref));
    j["fixed_priority_order"] = order;
    j["config"] = plan.base;
    auto points = nlohmann::json::array();
    for (const auto& p : result.points) points.push_back(point_json(p));
    j["points"] = points;
    j["delta_v_max"] = result.delta_v_max();
    return j;
}

}  // namespace m2m
