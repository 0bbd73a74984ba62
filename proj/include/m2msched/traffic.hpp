// Seeded arrival and service-demand generation.
//
// Every (class, purpose) pair draws from its own engine whose seed is mixed from
// (master seed, replication, class kind, class id, purpose). Traces therefore do not
// depend on the policy under test, and adding a class leaves the others untouched.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace m2m {

enum class StreamPurpose : std::uint8_t { phase = 1, inter_arrival = 2, service = 3 };

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngStreamSet {
public:
    RngStreamSet(std::uint64_t master_seed, std::uint64_t replication)
        : base_(splitmix64(splitmix64(master_seed) ^ splitmix64(replication + 0x51ed27a1ULL))) {}

    std::mt19937_64 stream(ClassRef cls, StreamPurpose purpose) const {
        std::uint64_t h = base_;
        h = splitmix64(h ^ static_cast<std::uint64_t>(cls.kind));
        h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(cls.id)));
        h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
        return std::mt19937_64{h};
    }

private:
    std::uint64_t base_;
};

/// Exponential with mean 1/rate, strictly positive.
template <typename Urbg>
TimeMs sample_service_demand(double rate_per_ms, Urbg& rng) {
    std::exponential_distribution<double> dist(rate_per_ms);
    for (;;) {
        const double x = dist(rng);
        if (x > 0.0) return x;
    }
}

/// Union of periodic streams {phase + k*period} clipped to [0, horizon), sorted.
inline std::vector<TimeMs> periodic_arrivals(TimeMs period, std::span<const TimeMs> phases, TimeMs horizon) {
    std::vector<TimeMs> out;
    if (!(period > 0.0)) return out;
    for (TimeMs phase : phases) {
        for (std::uint64_t k = 0;; ++k) {
            const TimeMs t = phase + static_cast<double>(k) * period;
            if (t >= horizon) break;
            out.push_back(t);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<TimeMs> generate_pu_arrivals(const PuClassSpec& spec, TimeMs horizon, const RngStreamSet& streams) {
    auto rng = streams.stream({ClassKind::pu, spec.id}, StreamPurpose::phase);
    std::uniform_real_distribution<double> phase(0.0, spec.period_ms);
    std::vector<TimeMs> phases(static_cast<std::size_t>(spec.sensor_count));
    for (auto& p : phases) p = phase(rng);
    return periodic_arrivals(spec.period_ms, phases, horizon);
}

inline std::vector<TimeMs> generate_ed_arrivals(const EdClassSpec& spec, TimeMs horizon, const RngStreamSet& streams) {
    auto rng = streams.stream({ClassKind::ed, spec.id}, StreamPurpose::inter_arrival);
    std::exponential_distribution<double> gap(spec.arrival_rate_per_ms);
    std::vector<TimeMs> out;
    for (TimeMs t = gap(rng); t < horizon; t += gap(rng)) out.push_back(t);
    return out;
}

struct TraceEntry {
    ClassRef cls;
    TimeMs arrival_ms = 0.0;
    TimeMs service_demand_ms = 0.0;

    bool operator==(const TraceEntry&) const = default;
};

/// All arrivals of one replication, ordered by (arrival, kind, class id, generation order).
struct Trace {
    std::vector<TraceEntry> entries;

    void sort() {
        std::stable_sort(entries.begin(), entries.end(), [](const TraceEntry& l, const TraceEntry& r) {
            if (l.arrival_ms != r.arrival_ms) return l.arrival_ms < r.arrival_ms;
            return l.cls < r.cls;
        });
    }
};

inline Trace generate_trace(const SimConfig& cfg, std::uint64_t replication) {
    const RngStreamSet streams(cfg.rng_seed, replication);
    Trace trace;
    auto append = [&](ClassRef cls, const std::vector<TimeMs>& arrivals, double rate) {
        auto rng = streams.stream(cls, StreamPurpose::service);
        for (TimeMs t : arrivals) trace.entries.push_back({cls, t, sample_service_demand(rate, rng)});
    };
    for (const auto& pu : cfg.pu_classes) {
        append({ClassKind::pu, pu.id}, generate_pu_arrivals(pu, cfg.sim_horizon_ms, streams), pu.service_rate_per_ms);
    }
    for (const auto& ed : cfg.ed_classes) {
        append({ClassKind::ed, ed.id}, generate_ed_arrivals(ed, cfg.sim_horizon_ms, streams), ed.service_rate_per_ms);
    }
    trace.sort();
    return trace;
}

/// CSV: class_kind,class_id,arrival_ms,service_demand_ms. Values printed with 17
/// significant digits so a dump replays bit-identically.
inline void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << "class_kind,class_id,arrival_ms,service_demand_ms\n";
    char buf[128];
    for (const auto& e : trace.entries) {
        std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g\n", to_string(e.cls.kind).c_str(), e.cls.id, e.arrival_ms,
                      e.service_demand_ms);
        out << buf;
    }
}

inline Trace read_trace_csv(std::istream& in) {
    Trace trace;
    std::string line;
    if (!std::getline(in, line)) return trace;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string kind, id, arrival, demand;
        if (!std::getline(ss, kind, ',') || !std::getline(ss, id, ',') || !std::getline(ss, arrival, ',') ||
            !std::getline(ss, demand, ',')) {
            throw std::runtime_error("trace line " + std::to_string(lineno) + ": expected 4 fields");
        }
        const auto ref = parse_class_ref(kind + id);
        if (!ref) throw std::runtime_error("trace line " + std::to_string(lineno) + ": bad class");
        trace.entries.push_back({*ref, std::stod(arrival), std::stod(demand)});
    }
    trace.sort();
    return trace;
}

}  // namespace m2m
