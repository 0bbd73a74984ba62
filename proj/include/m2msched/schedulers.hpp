// Scheduling policies: the multiclass threshold scheduler and the FCFS, EDD and
// static-priority baselines.
//
// Policies are pure functions of the simulation state. They name a class to serve;
// the engine always serves that class's head packet (FCFS within a class).
#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <tuple>

#include "core.hpp"
#include "state.hpp"

namespace m2m {

class SchedulerPolicy {
public:
    virtual ~SchedulerPolicy() = default;
    virtual PolicyDecision select(const SimState& state) const = 0;
    virtual std::string_view name() const = 0;
    /// Whether the engine must raise an epoch when a class head crosses its threshold.
    virtual bool needs_threshold_events() const { return false; }
};

/// True once the oldest packet of class `cls` has waited at least its threshold.
/// The crossing instant itself counts as exceeded; it is the epoch at which the
/// engine reports the crossing.
inline bool exceeds_threshold(const SimState& state, const ClassTable& table, std::size_t cls) {
    const Packet* head = state.head(cls);
    return head != nullptr && state.clock >= head->arrival_ms + table[cls].threshold_ms;
}

namespace detail {

inline PolicyDecision serve_or_continue(const SimState& state, std::optional<std::size_t> target) {
    if (!target) return state.in_service ? PolicyDecision{Continue{}} : PolicyDecision{Idle{}};
    if (state.serving_class() == target) return Continue{};
    return ServeClass{*target};
}

}  // namespace detail

/// One pass of the threshold scheduler:
///  1. PU classes past l_t: serve the highest-priority one.
///  2. No class past its threshold: serve the highest-priority backlogged ED class.
///  3. Some ED classes past delta: serve the highest-priority backlogged ED class
///     that is not past its delta.
///  4. Otherwise keep the current packet.
/// When there is no ED backlog at all, a work-conserving server takes the
/// highest-priority backlogged PU class; otherwise it idles until a PU crosses l_t.
/// Failed PU packets must already have been removed by the engine.
inline PolicyDecision proposed_select(const SimState& state, const ClassTable& table, bool work_conserving) {
    for (std::size_t k : table.pu_order()) {
        if (exceeds_threshold(state, table, k)) return detail::serve_or_continue(state, k);
    }

    bool ed_over = false;
    bool ed_backlog = false;
    for (std::size_t k : table.ed_order()) {
        ed_backlog = ed_backlog || state.backlogged(k);
        ed_over = ed_over || exceeds_threshold(state, table, k);
    }

    std::optional<std::size_t> target;
    for (std::size_t k : table.ed_order()) {
        if (state.backlogged(k) && (!ed_over || !exceeds_threshold(state, table, k))) {
            target = k;
            break;
        }
    }
    if (target) return detail::serve_or_continue(state, target);

    if (ed_backlog) {
        // Every backlogged ED class is past its delta.
        const auto serving = state.serving_class();
        if (serving && !table.is_pu(*serving)) return Continue{};
        for (std::size_t k : table.ed_order()) {
            if (state.backlogged(k)) return detail::serve_or_continue(state, k);
        }
    }

    if (work_conserving) {
        for (std::size_t k : table.pu_order()) {
            if (state.backlogged(k)) return detail::serve_or_continue(state, k);
        }
    }
    return detail::serve_or_continue(state, std::nullopt);
}

/// Non-preemptive first-come first-served over all classes. Simultaneous arrivals
/// go PU before ED, then by lower class id.
inline PolicyDecision fcfs_select(const SimState& state, const ClassTable& table) {
    if (state.in_service) return Continue{};
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (!state.has_queued(k)) continue;
        if (!best) {
            best = k;
            continue;
        }
        const Packet& a = state.packets[state.queues[k].front()];
        const Packet& b = state.packets[state.queues[*best].front()];
        if (std::tie(a.arrival_ms, a.cls, a.id) < std::tie(b.arrival_ms, b.cls, b.id)) best = k;
    }
    return best ? PolicyDecision{ServeClass{*best}} : PolicyDecision{Idle{}};
}

/// Preemptive earliest due date. Due date is arrival + l_d for PU and arrival + b for ED.
inline PolicyDecision edd_select(const SimState& state, const ClassTable& table) {
    std::optional<std::size_t> best;
    TimeMs best_due = kInfinity;
    for (std::size_t k = 0; k < table.size(); ++k) {
        const Packet* head = state.head(k);
        if (head == nullptr) continue;
        const TimeMs due = head->arrival_ms + table[k].due_offset_ms;
        if (!best || due < best_due || (due == best_due && table[k].ref < table[*best].ref)) {
            best = k;
            best_due = due;
        }
    }
    return detail::serve_or_continue(state, best);
}

/// Preemptive static priority; `static_order` lists flat class indices, highest first.
inline PolicyDecision fixed_priority_select(const SimState& state, std::span<const std::size_t> static_order) {
    if (static_order.size() != state.queues.size()) {
        throw std::invalid_argument("fixed_priority_select: static order must cover every class");
    }
    for (std::size_t k : static_order) {
        if (state.backlogged(k)) return detail::serve_or_continue(state, k);
    }
    return detail::serve_or_continue(state, std::nullopt);
}

class ProposedPolicy final : public SchedulerPolicy {
public:
    ProposedPolicy(ClassTable table, bool work_conserving) : table_(std::move(table)), work_conserving_(work_conserving) {}
    PolicyDecision select(const SimState& state) const override {
        return proposed_select(state, table_, work_conserving_);
    }
    std::string_view name() const override { return "proposed"; }
    bool needs_threshold_events() const override { return true; }

private:
    ClassTable table_;
    bool work_conserving_;
};

class FcfsPolicy final : public SchedulerPolicy {
public:
    explicit FcfsPolicy(ClassTable table) : table_(std::move(table)) {}
    PolicyDecision select(const SimState& state) const override { return fcfs_select(state, table_); }
    std::string_view name() const override { return "fcfs"; }

private:
    ClassTable table_;
};

class EddPolicy final : public SchedulerPolicy {
public:
    explicit EddPolicy(ClassTable table) : table_(std::move(table)) {}
    PolicyDecision select(const SimState& state) const override { return edd_select(state, table_); }
    std::string_view name() const override { return "edd"; }

private:
    ClassTable table_;
};

class FixedPriorityPolicy final : public SchedulerPolicy {
public:
    explicit FixedPriorityPolicy(std::vector<std::size_t> order) : order_(std::move(order)) {}
    PolicyDecision select(const SimState& state) const override { return fixed_priority_select(state, order_); }
    std::string_view name() const override { return "fixed_priority"; }

private:
    std::vector<std::size_t> order_;
};

/// Static order as flat indices. An empty `order` ranks ED classes (by ED priority)
/// above PU classes (by PU priority), the proposed policy's ranking with no thresholds.
inline std::vector<std::size_t> resolve_static_order(const ClassTable& table, std::span<const ClassRef> order) {
    std::vector<std::size_t> out;
    if (order.empty()) {
        out = table.ed_order();
        out.insert(out.end(), table.pu_order().begin(), table.pu_order().end());
        return out;
    }
    for (const auto& ref : order) {
        const auto idx = table.index_of(ref);
        if (!idx) throw std::invalid_argument("static order names unknown class " + to_string(ref));
        if (std::find(out.begin(), out.end(), *idx) != out.end()) {
            throw std::invalid_argument("static order lists " + to_string(ref) + " twice");
        }
        out.push_back(*idx);
    }
    if (out.size() != table.size()) throw std::invalid_argument("static order must cover every class");
    return out;
}

inline std::unique_ptr<SchedulerPolicy> make_policy(PolicyKind kind, const SimConfig& cfg) {
    ClassTable table(cfg);
    switch (kind) {
        case PolicyKind::proposed: return std::make_unique<ProposedPolicy>(std::move(table), cfg.work_conserving);
        case PolicyKind::fcfs: return std::make_unique<FcfsPolicy>(std::move(table));
        case PolicyKind::edd: return std::make_unique<EddPolicy>(std::move(table));
        case PolicyKind::fixed_priority:
            return std::make_unique<FixedPriorityPolicy>(resolve_static_order(table, cfg.policy.static_order));
    }
    throw std::invalid_argument("unknown policy kind");
}

}  // namespace m2m
