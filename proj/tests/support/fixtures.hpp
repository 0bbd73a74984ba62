// Hand-built states and tiny traces for policy and engine tests.
#pragma once

#include <initializer_list>

#include "m2msched/m2msched.hpp"

namespace m2m::oracle {

struct QueuedPacket {
    ClassRef cls;
    TimeMs arrival_ms;
    bool in_service = false;
};

/// State at `clock` with the given unresolved packets (listed oldest first per class).
inline SimState make_state(const ClassTable& table, TimeMs clock, std::initializer_list<QueuedPacket> packets) {
    SimState s;
    s.clock = clock;
    s.queues.resize(table.size());
    for (const auto& q : packets) {
        Packet p;
        p.id = static_cast<PacketId>(s.packets.size());
        p.class_index = *table.index_of(q.cls);
        p.cls = q.cls;
        p.arrival_ms = q.arrival_ms;
        p.service_demand_ms = p.remaining_service_ms = 1.0;
        p.absolute_deadline_ms = q.arrival_ms + table[p.class_index].deadline_ms;
        p.disposition = q.in_service ? Disposition::in_service : Disposition::queued;
        if (q.in_service) {
            s.in_service = p.id;
        } else {
            s.queues[p.class_index].push_back(p.id);
        }
        s.packets.push_back(p);
    }
    return s;
}

inline Trace make_trace(std::initializer_list<TraceEntry> entries) {
    Trace t;
    t.entries = entries;
    t.sort();
    return t;
}

/// Serves the highest flat index that is backlogged and never preempts.
class NonPreemptiveLastClass final : public SchedulerPolicy {
public:
    PolicyDecision select(const SimState& s) const override {
        if (s.in_service) return Continue{};
        for (std::size_t k = s.queues.size(); k-- > 0;) {
            if (s.has_queued(k)) return ServeClass{k};
        }
        return Idle{};
    }
    std::string_view name() const override { return "test_last_class"; }
};

class AlwaysIdle final : public SchedulerPolicy {
public:
    PolicyDecision select(const SimState& s) const override {
        return s.in_service ? PolicyDecision{Continue{}} : PolicyDecision{Idle{}};
    }
    std::string_view name() const override { return "test_idle"; }
};

inline constexpr ClassRef PU1{ClassKind::pu, 1};
inline constexpr ClassRef PU2{ClassKind::pu, 2};
inline constexpr ClassRef ED1{ClassKind::ed, 1};
inline constexpr ClassRef ED2{ClassKind::ed, 2};

}  // namespace m2m::oracle
