// Per-class statistics, class-average utilities, the proportionally fair system
// utility and replication confidence intervals.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "utility.hpp"

namespace m2m {

struct PuClassStats {
    std::size_t arrivals = 0;
    std::size_t completed = 0;
    std::size_t dropped = 0;
    std::size_t residual = 0;  ///< unresolved at the horizon; excluded from utilities
    std::vector<TimeMs> latencies;  ///< resolved packets; a dropped packet contributes l_d
    OutcomeSequence outcomes;
    TimeMs busy_time_ms = 0.0;

    /// M_pu: packets resolved within the horizon, drops included.
    std::size_t served() const { return completed + dropped; }
    std::size_t failures() const {
        return static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), Outcome::failure));
    }
};

struct EdClassStats {
    std::size_t arrivals = 0;
    std::size_t completed = 0;
    std::size_t residual = 0;
    std::vector<TimeMs> latencies;
    TimeMs busy_time_ms = 0.0;

    std::size_t served() const { return completed; }
};

struct ClassStats {
    std::vector<PuClassStats> pu;
    std::vector<EdClassStats> ed;

    TimeMs busy_time_ms() const {
        TimeMs total = 0.0;
        for (const auto& s : pu) total += s.busy_time_ms;
        for (const auto& s : ed) total += s.busy_time_ms;
        return total;
    }
};

/// Average PU utility: (sum of step utilities + sum of run penalties) / M_pu.
/// Negative when penalties dominate. Missing when nothing was served.
inline std::optional<double> avg_pu_utility(const PuClassStats& stats, const PuClassSpec& spec) {
    if (stats.served() == 0) return std::nullopt;
    double sum = 0.0;
    for (TimeMs l : stats.latencies) sum += pu_step_utility(l, spec.deadline_ms);
    for (int r : extract_failure_runs(stats.outcomes)) sum += pu_run_penalty(r, spec.gamma);
    return sum / static_cast<double>(stats.served());
}

inline std::optional<double> avg_ed_utility(const EdClassStats& stats, const EdClassSpec& spec) {
    if (stats.served() == 0) return std::nullopt;
    double sum = 0.0;
    for (TimeMs l : stats.latencies) sum += ed_sigmoid_utility(l, spec.a, spec.b);
    return sum / static_cast<double>(stats.served());
}

struct WeightedUtility {
    std::optional<double> utility;
    double beta = 1.0;
};

/// Product of class utilities raised to their weights. Each utility is clamped to
/// [0, 1] first; classes with no served packets are left out of the product.
inline double system_utility(std::span<const WeightedUtility> terms) {
    double v = 1.0;
    for (const auto& t : terms) {
        if (!t.utility) continue;
        const double u = std::clamp(*t.utility, 0.0, 1.0);
        v *= std::pow(u, t.beta);
    }
    return v;
}

struct UtilityReport {
    std::vector<std::optional<double>> pu;  ///< raw, unclamped
    std::vector<std::optional<double>> ed;
    std::vector<double> pu_drop_rate;  ///< dropped / M_pu, 0 when nothing served
    double system = 0.0;
};

inline UtilityReport evaluate_utilities(const ClassStats& stats, const SimConfig& cfg) {
    UtilityReport report;
    std::vector<WeightedUtility> terms;
    for (std::size_t i = 0; i < cfg.pu_classes.size(); ++i) {
        report.pu.push_back(avg_pu_utility(stats.pu[i], cfg.pu_classes[i]));
        const auto served = stats.pu[i].served();
        report.pu_drop_rate.push_back(served ? static_cast<double>(stats.pu[i].dropped) / static_cast<double>(served)
                                             : 0.0);
        terms.push_back({report.pu.back(), cfg.pu_classes[i].beta});
    }
    for (std::size_t i = 0; i < cfg.ed_classes.size(); ++i) {
        report.ed.push_back(avg_ed_utility(stats.ed[i], cfg.ed_classes[i]));
        terms.push_back({report.ed.back(), cfg.ed_classes[i].beta});
    }
    report.system = system_utility(terms);
    return report;
}

struct ReplicationSummary {
    double mean = 0.0;
    double ci_half_width = 0.0;  ///< 95% normal approximation
};

inline ReplicationSummary aggregate_replications(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("aggregate_replications: need at least 2 values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * sd / std::sqrt(n)};
}

}  // namespace m2m
