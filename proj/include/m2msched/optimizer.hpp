// Reduced threshold search windows and exhaustive grid search over them.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "core.hpp"
#include "metrics.hpp"
#include "utility.hpp"

namespace m2m {

struct Interval {
    TimeMs lo = 0.0;
    TimeMs hi = 0.0;

    bool contains(TimeMs t) const { return t >= lo && t <= hi; }
    TimeMs midpoint() const { return lo + 0.5 * (hi - lo); }
};

/// 99th percentile of an exponential service time, rounded as 4.6 / mu.
inline TimeMs service_t99(double service_rate_per_ms) { return 4.6 / service_rate_per_ms; }

/// [max(0, l_d - t99), l_d].
inline Interval pu_search_window(const PuClassSpec& spec) {
    return {std::max(0.0, spec.deadline_ms - service_t99(spec.service_rate_per_ms)), spec.deadline_ms};
}

/// [max(0, l_{0.99} - 1/mu), l_{0.01}] where l_x is the latency at which the ED
/// utility falls to x.
inline Interval ed_search_window(const EdClassSpec& spec) {
    const TimeMs upper = ed_inverse_utility(0.01, spec.a, spec.b);
    const TimeMs lower = ed_inverse_utility(0.99, spec.a, spec.b) - 1.0 / spec.service_rate_per_ms;
    return {std::max(0.0, lower), upper};
}

struct SearchDimension {
    ClassRef cls;
    Interval window;
    /// Extra points always evaluated, e.g. a default operating point.
    std::vector<TimeMs> anchors;
};

struct SearchSpace {
    std::vector<SearchDimension> dims;
    int resolution = 9;  ///< points per dimension, endpoints included

    /// Sorted, de-duplicated candidate values of one dimension.
    std::vector<TimeMs> axis(std::size_t d) const {
        const auto& dim = dims[d];
        std::vector<TimeMs> values;
        if (resolution <= 1 || dim.window.lo == dim.window.hi) {
            values.push_back(resolution <= 1 ? dim.window.midpoint() : dim.window.lo);
        } else {
            for (int i = 0; i < resolution; ++i) {
                values.push_back(i == resolution - 1 ? dim.window.hi
                                                     : dim.window.lo + (dim.window.hi - dim.window.lo) * i /
                                                                           (resolution - 1));
            }
        }
        values.insert(values.end(), dim.anchors.begin(), dim.anchors.end());
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        return values;
    }

    /// Cartesian product, first dimension varying slowest.
    std::vector<std::vector<TimeMs>> grid() const {
        std::vector<std::vector<TimeMs>> points{{}};
        for (std::size_t d = 0; d < dims.size(); ++d) {
            std::vector<std::vector<TimeMs>> next;
            for (const auto& prefix : points) {
                for (TimeMs v : axis(d)) {
                    auto p = prefix;
                    p.push_back(v);
                    next.push_back(std::move(p));
                }
            }
            points = std::move(next);
        }
        return points;
    }
};

/// Search space over every PU threshold and, optionally, every ED threshold except
/// the lowest-priority class (whose threshold stays infinite).
inline SearchSpace default_search_space(const SimConfig& cfg, bool include_ed, int resolution = 9) {
    SearchSpace space;
    space.resolution = resolution;
    for (const auto& pu : cfg.pu_classes) space.dims.push_back({{ClassKind::pu, pu.id}, pu_search_window(pu), {}});
    if (include_ed && cfg.ed_classes.size() > 1) {
        const auto order = ed_priority_order(cfg.ed_classes);
        for (std::size_t r = 0; r + 1 < order.size(); ++r) {
            const auto& ed = cfg.ed_classes[order[r]];
            SearchDimension dim{{ClassKind::ed, ed.id}, ed_search_window(ed), {}};
            if (std::isfinite(ed.threshold_ms)) dim.anchors.push_back(ed.threshold_ms);
            space.dims.push_back(std::move(dim));
        }
    }
    return space;
}

/// Copy of `cfg` with the thresholds of the searched classes replaced.
inline SimConfig with_thresholds(SimConfig cfg, const SearchSpace& space, std::span<const TimeMs> point) {
    for (std::size_t d = 0; d < space.dims.size(); ++d) {
        const auto ref = space.dims[d].cls;
        if (ref.kind == ClassKind::pu) {
            for (auto& pu : cfg.pu_classes) {
                if (pu.id == ref.id) pu.threshold_ms = point[d];
            }
        } else {
            for (auto& ed : cfg.ed_classes) {
                if (ed.id == ref.id) ed.threshold_ms = point[d];
            }
        }
    }
    return cfg;
}

struct GridRow {
    std::vector<TimeMs> thresholds;
    ReplicationSummary value;
};

struct GridResult {
    std::vector<TimeMs> best;
    double best_mean = 0.0;
    std::vector<GridRow> table;  ///< grid order
};

using GridEvaluator = std::function<ReplicationSummary(std::span<const TimeMs>)>;

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = n;
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline unsigned default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Evaluates every grid point and keeps the best mean. Ties go to the
/// lexicographically larger threshold vector (later intervention).
inline GridResult grid_search(const SearchSpace& space, const GridEvaluator& evaluate,
                              unsigned threads = default_thread_count()) {
    const auto points = space.grid();
    GridResult result;
    result.table.resize(points.size());
    parallel_for(points.size(), threads, [&](std::size_t i) { result.table[i] = {points[i], evaluate(points[i])}; });
    bool first = true;
    for (const auto& row : result.table) {
        const double v = row.value.mean;
        if (first || v > result.best_mean || (v == result.best_mean && row.thresholds > result.best)) {
            result.best = row.thresholds;
            result.best_mean = v;
            first = false;
        }
    }
    return result;
}

inline void write_grid_csv(std::ostream& out, const SearchSpace& space, const GridResult& result) {
    for (const auto& dim : space.dims) out << "threshold_" << to_string(dim.cls) << ',';
    out << "V_mean,V_ci\n";
    char buf[64];
    for (const auto& row : result.table) {
        for (TimeMs t : row.thresholds) {
            std::snprintf(buf, sizeof buf, "%.6f,", t);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", row.value.mean, row.value.ci_half_width);
        out << buf;
    }
}

}  // namespace m2m
