// Domain types and configuration for the multiclass M2M uplink simulator.
//
// All times are milliseconds held in doubles. Periods quoted in seconds are
// converted when a scenario or config is built.
#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace m2m {

/// Milliseconds.
using TimeMs = double;

inline constexpr TimeMs kInfinity = std::numeric_limits<double>::infinity();

enum class ClassKind : std::uint8_t { pu = 0, ed = 1 };

/// Identity of a traffic class: its kind plus the user-facing id from config.
struct ClassRef {
    ClassKind kind = ClassKind::pu;
    int id = 0;

    auto operator<=>(const ClassRef&) const = default;
};

inline std::string to_string(ClassKind kind) { return kind == ClassKind::pu ? "PU" : "ED"; }

inline std::string to_string(ClassRef ref) { return to_string(ref.kind) + std::to_string(ref.id); }

/// Parses "PU1" / "ED2" (case-insensitive prefix).
inline std::optional<ClassRef> parse_class_ref(std::string_view text) {
    if (text.size() < 3) return std::nullopt;
    std::string prefix{text.substr(0, 2)};
    std::transform(prefix.begin(), prefix.end(), prefix.begin(), [](unsigned char c) { return std::toupper(c); });
    ClassRef ref;
    if (prefix == "PU") {
        ref.kind = ClassKind::pu;
    } else if (prefix == "ED") {
        ref.kind = ClassKind::ed;
    } else {
        return std::nullopt;
    }
    int id = 0;
    for (char c : text.substr(2)) {
        if (c < '0' || c > '9') return std::nullopt;
        id = id * 10 + (c - '0');
        if (id > 1'000'000) return std::nullopt;
    }
    ref.id = id;
    return ref;
}

struct PuClassSpec {
    int id = 1;
    TimeMs period_ms = 1000.0;  ///< per-sensor period
    int sensor_count = 1;
    TimeMs deadline_ms = 4.0;
    double service_rate_per_ms = 1.0;
    double gamma = 1.0;  ///< run-length penalty exponent, >= 1
    double beta = 1.0;   ///< weight in the system utility
    TimeMs threshold_ms = 0.0;

    bool operator==(const PuClassSpec&) const = default;

    double arrival_rate_per_ms() const { return static_cast<double>(sensor_count) / period_ms; }
};

struct EdClassSpec {
    int id = 1;
    double arrival_rate_per_ms = 0.1;  ///< aggregate Poisson rate of the class
    int sensor_count = 1;              ///< reporting only
    double service_rate_per_ms = 1.0;
    double a = 1.0;   ///< utility roll-off, per ms
    TimeMs b = 10.0;  ///< soft deadline
    double beta = 1.0;
    TimeMs threshold_ms = kInfinity;
    /// 1 = most delay-sensitive. Derived from (a, b) when absent.
    std::optional<int> priority_rank;

    bool operator==(const EdClassSpec&) const = default;
};

enum class PolicyKind : std::uint8_t { proposed, fcfs, edd, fixed_priority };

inline std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::proposed: return "proposed";
        case PolicyKind::fcfs: return "fcfs";
        case PolicyKind::edd: return "edd";
        case PolicyKind::fixed_priority: return "fixed_priority";
    }
    return "unknown";
}

inline std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
    for (auto kind : {PolicyKind::proposed, PolicyKind::fcfs, PolicyKind::edd, PolicyKind::fixed_priority}) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

struct PolicySettings {
    PolicyKind kind = PolicyKind::proposed;
    /// Total order over all classes for fixed_priority, highest first. Empty means ED
    /// classes in ED priority order, then PU classes in PU priority order.
    std::vector<ClassRef> static_order;

    bool operator==(const PolicySettings&) const = default;
};

struct SimConfig {
    std::vector<PuClassSpec> pu_classes;
    std::vector<EdClassSpec> ed_classes;
    TimeMs sim_horizon_ms = 40'000.0;
    std::uint64_t rng_seed = 1;
    int replications = 20;
    bool drop_failed_pu = true;
    bool work_conserving = true;
    PolicySettings policy;

    bool operator==(const SimConfig&) const = default;

    std::size_t class_count() const { return pu_classes.size() + ed_classes.size(); }
};

/// Offered load: sum of arrival rate / service rate over all classes.
inline double offered_load(const SimConfig& cfg) {
    double rho = 0.0;
    for (const auto& pu : cfg.pu_classes) rho += pu.arrival_rate_per_ms() / pu.service_rate_per_ms;
    for (const auto& ed : cfg.ed_classes) rho += ed.arrival_rate_per_ms / ed.service_rate_per_ms;
    return rho;
}

/// PU classes in service priority: gamma descending, service rate ascending, id ascending.
/// Returns positions into cfg.pu_classes.
inline std::vector<std::size_t> pu_priority_order(const std::vector<PuClassSpec>& pu) {
    std::vector<std::size_t> order(pu.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        const auto& x = pu[l];
        const auto& y = pu[r];
        if (x.gamma != y.gamma) return x.gamma > y.gamma;
        if (x.service_rate_per_ms != y.service_rate_per_ms) return x.service_rate_per_ms < y.service_rate_per_ms;
        return x.id < y.id;
    });
    return order;
}

/// ED classes in service priority. Explicit priority_rank wins; otherwise a descending,
/// b ascending, id ascending. Returns positions into cfg.ed_classes.
inline std::vector<std::size_t> ed_priority_order(const std::vector<EdClassSpec>& ed) {
    std::vector<std::size_t> order(ed.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        const auto& x = ed[l];
        const auto& y = ed[r];
        if (x.priority_rank && y.priority_rank && *x.priority_rank != *y.priority_rank) {
            return *x.priority_rank < *y.priority_rank;
        }
        if (x.a != y.a) return x.a > y.a;
        if (x.b != y.b) return x.b < y.b;
        return x.id < y.id;
    });
    return order;
}

namespace detail {

inline bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
inline bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace detail

/// Every invariant violation as "path: message". Empty means valid.
inline std::vector<std::string> validate_config(const SimConfig& cfg) {
    using detail::finite_nonneg;
    using detail::finite_pos;
    std::vector<std::string> out;
    auto add = [&](const std::string& path, const std::string& msg) { out.push_back(path + ": " + msg); };

    if (cfg.pu_classes.empty() && cfg.ed_classes.empty()) add("", "at least one traffic class is required");
    if (!finite_pos(cfg.sim_horizon_ms)) add("sim_horizon_ms", "must be finite and > 0");
    if (cfg.replications < 1) add("replications", "must be >= 1");

    for (std::size_t i = 0; i < cfg.pu_classes.size(); ++i) {
        const auto& pu = cfg.pu_classes[i];
        const std::string path = "pu_classes[" + std::to_string(i) + "]";
        if (!finite_pos(pu.period_ms)) add(path + ".period_ms", "period must be finite and > 0");
        if (pu.sensor_count < 1) add(path + ".sensor_count", "must be >= 1");
        if (!finite_pos(pu.deadline_ms)) add(path + ".deadline_ms", "deadline must be finite and > 0");
        if (!finite_pos(pu.service_rate_per_ms)) add(path + ".service_rate_per_ms", "must be finite and > 0");
        if (!(pu.gamma >= 1.0) || !std::isfinite(pu.gamma)) add(path + ".gamma", "gamma < 1");
        if (!finite_pos(pu.beta)) add(path + ".beta", "beta must be finite and > 0");
        if (!finite_nonneg(pu.threshold_ms)) {
            add(path + ".threshold_ms", "threshold must be finite and >= 0");
        } else if (std::isfinite(pu.deadline_ms) && pu.threshold_ms > pu.deadline_ms) {
            add(path + ".threshold_ms", "threshold exceeds deadline");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (cfg.pu_classes[j].id == pu.id) add(path + ".id", "duplicate PU class id");
        }
    }

    std::size_t ranked = 0;
    for (std::size_t i = 0; i < cfg.ed_classes.size(); ++i) {
        const auto& ed = cfg.ed_classes[i];
        const std::string path = "ed_classes[" + std::to_string(i) + "]";
        if (!finite_pos(ed.arrival_rate_per_ms)) add(path + ".arrival_rate_per_ms", "must be finite and > 0");
        if (ed.sensor_count < 1) add(path + ".sensor_count", "must be >= 1");
        if (!finite_pos(ed.service_rate_per_ms)) add(path + ".service_rate_per_ms", "must be finite and > 0");
        if (!finite_pos(ed.a)) add(path + ".a", "roll-off a must be finite and > 0");
        if (!finite_nonneg(ed.b)) add(path + ".b", "soft deadline b must be finite and >= 0");
        if (!finite_pos(ed.beta)) add(path + ".beta", "beta must be finite and > 0");
        if (std::isnan(ed.threshold_ms) || ed.threshold_ms < 0.0) add(path + ".threshold_ms", "threshold must be >= 0");
        if (ed.priority_rank) {
            ++ranked;
            if (*ed.priority_rank < 1) add(path + ".priority_rank", "must be >= 1");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (cfg.ed_classes[j].id == ed.id) add(path + ".id", "duplicate ED class id");
            if (ed.priority_rank && cfg.ed_classes[j].priority_rank == ed.priority_rank) {
                add(path + ".priority_rank", "duplicate priority rank");
            }
        }
    }
    if (ranked != 0 && ranked != cfg.ed_classes.size()) {
        add("ed_classes", "priority_rank must be given for all ED classes or none");
    }
    const bool orderable = std::all_of(cfg.ed_classes.begin(), cfg.ed_classes.end(),
                                       [](const EdClassSpec& e) { return !std::isnan(e.a) && !std::isnan(e.b); });
    if (!cfg.ed_classes.empty() && orderable) {
        const auto order = ed_priority_order(cfg.ed_classes);
        const std::size_t last = order.back();
        if (cfg.ed_classes[last].threshold_ms != kInfinity) {
            add("ed_classes[" + std::to_string(last) + "].threshold_ms",
                "lowest-priority ED class must have an infinite threshold");
        }
    }

    if (!cfg.policy.static_order.empty()) {
        std::vector<ClassRef> expected;
        for (const auto& pu : cfg.pu_classes) expected.push_back({ClassKind::pu, pu.id});
        for (const auto& ed : cfg.ed_classes) expected.push_back({ClassKind::ed, ed.id});
        auto given = cfg.policy.static_order;
        std::sort(expected.begin(), expected.end());
        std::sort(given.begin(), given.end());
        if (given != expected) add("policy.static_order", "must list every class exactly once");
    }
    return out;
}

// JSON schema. Infinite thresholds are written as the string "inf"; null is also accepted.

namespace detail {

inline nlohmann::json time_to_json(TimeMs t) {
    if (std::isinf(t) && t > 0) return "inf";
    return t;
}

inline TimeMs time_from_json(const nlohmann::json& j) {
    if (j.is_null()) return kInfinity;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "infinity" || s == "Infinity") return kInfinity;
        throw std::invalid_argument("unrecognised time value '" + s + "'");
    }
    return j.get<double>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const PuClassSpec& s) {
    j = nlohmann::json{{"id", s.id},
                       {"period_ms", s.period_ms},
                       {"sensor_count", s.sensor_count},
                       {"deadline_ms", s.deadline_ms},
                       {"service_rate_per_ms", s.service_rate_per_ms},
                       {"gamma", s.gamma},
                       {"beta", s.beta},
                       {"threshold_ms", detail::time_to_json(s.threshold_ms)}};
}

inline void from_json(const nlohmann::json& j, PuClassSpec& s) {
    s = PuClassSpec{};
    j.at("id").get_to(s.id);
    j.at("period_ms").get_to(s.period_ms);
    j.at("sensor_count").get_to(s.sensor_count);
    j.at("deadline_ms").get_to(s.deadline_ms);
    j.at("service_rate_per_ms").get_to(s.service_rate_per_ms);
    s.gamma = j.value("gamma", 1.0);
    s.beta = j.value("beta", 1.0);
    s.threshold_ms = j.contains("threshold_ms") ? detail::time_from_json(j.at("threshold_ms")) : s.deadline_ms;
}

inline void to_json(nlohmann::json& j, const EdClassSpec& s) {
    j = nlohmann::json{{"id", s.id},
                       {"arrival_rate_per_ms", s.arrival_rate_per_ms},
                       {"sensor_count", s.sensor_count},
                       {"service_rate_per_ms", s.service_rate_per_ms},
                       {"a", s.a},
                       {"b", s.b},
                       {"beta", s.beta},
                       {"threshold_ms", detail::time_to_json(s.threshold_ms)}};
    if (s.priority_rank) j["priority_rank"] = *s.priority_rank;
}

inline void from_json(const nlohmann::json& j, EdClassSpec& s) {
    s = EdClassSpec{};
    j.at("id").get_to(s.id);
    j.at("arrival_rate_per_ms").get_to(s.arrival_rate_per_ms);
    s.sensor_count = j.value("sensor_count", 1);
    j.at("service_rate_per_ms").get_to(s.service_rate_per_ms);
    j.at("a").get_to(s.a);
    j.at("b").get_to(s.b);
    s.beta = j.value("beta", 1.0);
    s.threshold_ms = j.contains("threshold_ms") ? detail::time_from_json(j.at("threshold_ms")) : kInfinity;
    if (j.contains("priority_rank") && !j.at("priority_rank").is_null()) s.priority_rank = j.at("priority_rank").get<int>();
}

inline void to_json(nlohmann::json& j, const PolicySettings& p) {
    j = nlohmann::json{{"name", to_string(p.kind)}};
    if (!p.static_order.empty()) {
        auto arr = nlohmann::json::array();
        for (const auto& ref : p.static_order) arr.push_back(to_string(ref));
        j["static_order"] = std::move(arr);
    }
}

inline void from_json(const nlohmann::json& j, PolicySettings& p) {
    p = PolicySettings{};
    const auto name = j.value("name", std::string{"proposed"});
    const auto kind = parse_policy_kind(name);
    if (!kind) throw std::invalid_argument("unknown policy '" + name + "'");
    p.kind = *kind;
    if (j.contains("static_order")) {
        for (const auto& item : j.at("static_order")) {
            const auto text = item.get<std::string>();
            const auto ref = parse_class_ref(text);
            if (!ref) throw std::invalid_argument("bad class reference '" + text + "' in static_order");
            p.static_order.push_back(*ref);
        }
    }
}

inline void to_json(nlohmann::json& j, const SimConfig& c) {
    j = nlohmann::json{{"pu_classes", c.pu_classes},
                       {"ed_classes", c.ed_classes},
                       {"sim_horizon_ms", c.sim_horizon_ms},
                       {"rng_seed", c.rng_seed},
                       {"replications", c.replications},
                       {"drop_failed_pu", c.drop_failed_pu},
                       {"work_conserving", c.work_conserving},
                       {"policy", c.policy}};
}

inline void from_json(const nlohmann::json& j, SimConfig& c) {
    c = SimConfig{};
    if (j.contains("pu_classes")) j.at("pu_classes").get_to(c.pu_classes);
    if (j.contains("ed_classes")) j.at("ed_classes").get_to(c.ed_classes);
    c.sim_horizon_ms = j.value("sim_horizon_ms", c.sim_horizon_ms);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.replications = j.value("replications", c.replications);
    c.drop_failed_pu = j.value("drop_failed_pu", c.drop_failed_pu);
    c.work_conserving = j.value("work_conserving", c.work_conserving);
    if (j.contains("policy")) j.at("policy").get_to(c.policy);
}

inline std::string dump_config(const SimConfig& cfg) { return nlohmann::json(cfg).dump(2) + "\n"; }

inline SimConfig parse_config(std::string_view text) { return nlohmann::json::parse(text).get<SimConfig>(); }

inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

}  // namespace m2m
