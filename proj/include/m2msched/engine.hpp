// Continuous-time discrete-event kernel: one preemptive-resume server, FCFS queue
// per class, PU deadline expiry and threshold-crossing epochs.
//
// All events sharing a timestamp are applied first, then the policy is consulted
// once. Order at equal times: deadline expiry, service completion, arrival,
// threshold crossing; then PU before ED, class id, insertion order.
#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "metrics.hpp"
#include "schedulers.hpp"
#include "state.hpp"
#include "traffic.hpp"

namespace m2m {

enum class EventType : std::uint8_t { deadline_expiry = 0, service_completion = 1, arrival = 2, threshold_crossing = 3 };

struct EngineOptions {
    /// Packets arriving before this instant are simulated but left out of the statistics.
    TimeMs warmup_ms = 0.0;
    /// Called after every decision epoch with the post-decision state.
    std::function<void(const SimState&, const PolicyDecision&)> observer;
};

struct PacketRecord {
    ClassRef cls;
    TimeMs arrival_ms = 0.0;
    std::optional<TimeMs> start_ms;
    std::optional<TimeMs> finish_ms;
    Disposition disposition = Disposition::pending;
    std::optional<TimeMs> latency_ms;
};

class Engine {
public:
    Engine(const SimConfig& cfg, const Trace& trace, const SchedulerPolicy& policy, EngineOptions options = {})
        : table_(cfg), policy_(policy), options_(std::move(options)), horizon_(cfg.sim_horizon_ms),
          drop_failed_pu_(cfg.drop_failed_pu), threshold_events_(policy.needs_threshold_events()) {
        state_.queues.resize(table_.size());
        stats_.pu.resize(cfg.pu_classes.size());
        stats_.ed.resize(cfg.ed_classes.size());
        state_.packets.reserve(trace.entries.size());
        for (const auto& e : trace.entries) {
            if (!(e.arrival_ms < horizon_)) continue;
            const auto cls = table_.index_of(e.cls);
            if (!cls) throw std::invalid_argument("trace references unknown class " + to_string(e.cls));
            if (!state_.packets.empty() && e.arrival_ms < state_.packets.back().arrival_ms) {
                throw std::invalid_argument("trace is not sorted by arrival time");
            }
            Packet p;
            p.id = static_cast<PacketId>(state_.packets.size());
            p.class_index = *cls;
            p.cls = e.cls;
            p.arrival_ms = e.arrival_ms;
            p.service_demand_ms = e.service_demand_ms;
            p.remaining_service_ms = e.service_demand_ms;
            p.absolute_deadline_ms = e.arrival_ms + table_[*cls].deadline_ms;
            state_.packets.push_back(p);
        }
    }

    const SimState& state() const { return state_; }
    const ClassStats& stats() const { return stats_; }
    const ClassTable& classes() const { return table_; }

    /// Completion time of the packet in service, if any.
    std::optional<TimeMs> pending_completion() const {
        if (!state_.in_service) return std::nullopt;
        return service_started_ + state_.packets[*state_.in_service].remaining_service_ms;
    }

    /// Processes every event at the next timestamp below the horizon, then applies
    /// the policy's decision. Returns false once no such event remains.
    bool step() {
        const auto next = next_event_time();
        if (!next || !(*next < horizon_)) return false;
        if (*next < state_.clock) throw std::logic_error("event scheduled before the current clock");
        advance_to(*next);
        bool live = false;
        while (true) {
            const auto t = next_event_time();
            if (!t || *t != state_.clock) break;
            live = dispatch_next() || live;
        }
        if (live) {
            const PolicyDecision decision = policy_.select(state_);
            apply_decision(decision);
            if (options_.observer) options_.observer(state_, decision);
        }
        return true;
    }

    /// Runs to the horizon and returns the final statistics.
    const ClassStats& run() {
        while (step()) {
        }
        finish();
        return stats_;
    }

    void apply_decision(const PolicyDecision& decision) {
        if (std::holds_alternative<Continue>(decision)) {
            if (!state_.in_service) throw std::logic_error("continue decision with an idle server");
            return;
        }
        if (std::holds_alternative<Idle>(decision)) {
            if (state_.in_service) throw std::logic_error("idle decision with a busy server");
            return;
        }
        const std::size_t cls = std::get<ServeClass>(decision).class_index;
        if (cls >= table_.size()) throw std::logic_error("decision names an unknown class");
        if (state_.serving_class() == cls) return;
        if (state_.queues[cls].empty()) throw std::logic_error("decision serves an empty class");
        if (state_.in_service) preempt();
        const PacketId id = state_.queues[cls].front();
        state_.queues[cls].pop_front();
        start_service(id);
    }

    /// Removes a queued (or in-service) PU packet whose deadline has passed and records
    /// the failure. With dropping disabled the packet stays and fails on completion.
    void expire_pu(PacketId id) {
        Packet& p = state_.packets[id];
        if (!table_.is_pu(p.class_index)) throw std::logic_error("expire_pu called for an ED packet");
        if (p.disposition != Disposition::queued && p.disposition != Disposition::in_service) return;
        if (state_.clock < p.absolute_deadline_ms) throw std::logic_error("expire_pu called before the deadline");
        if (!drop_failed_pu_) return;
        if (p.disposition == Disposition::in_service) {
            stop_service();
        } else {
            auto& q = state_.queues[p.class_index];
            q.erase(std::find(q.begin(), q.end(), id));
        }
        p.disposition = Disposition::dropped;
        p.finish_ms = state_.clock;
        record_resolution(p, Outcome::failure, p.absolute_deadline_ms - p.arrival_ms);
        schedule_head_crossing(p.class_index);
    }

    /// Accounts in-flight work up to the horizon and counts residual packets. Idempotent.
    void finish() {
        if (finished_) return;
        finished_ = true;
        if (state_.in_service) {
            const Packet& p = state_.packets[*state_.in_service];
            busy_of(p.class_index) += std::max(0.0, horizon_ - service_started_);
        }
        for (const Packet& p : state_.packets) {
            if (p.disposition == Disposition::queued || p.disposition == Disposition::in_service) {
                if (p.arrival_ms < options_.warmup_ms) continue;
                if (table_.is_pu(p.class_index)) {
                    ++stats_.pu[table_[p.class_index].kind_index].residual;
                } else {
                    ++stats_.ed[table_[p.class_index].kind_index].residual;
                }
            }
        }
    }

    std::vector<PacketRecord> packet_log() const {
        std::vector<PacketRecord> out;
        for (const Packet& p : state_.packets) {
            if (p.disposition == Disposition::pending) continue;
            PacketRecord r{p.cls, p.arrival_ms, p.first_start_ms, p.finish_ms, p.disposition, std::nullopt};
            if (p.disposition == Disposition::completed) r.latency_ms = *p.finish_ms - p.arrival_ms;
            if (p.disposition == Disposition::dropped) r.latency_ms = p.absolute_deadline_ms - p.arrival_ms;
            out.push_back(r);
        }
        return out;
    }

private:
    struct Event {
        TimeMs time;
        EventType type;
        ClassRef cls;
        std::uint64_t seq;
        PacketId packet;
        std::uint64_t token;

        auto key() const { return std::tie(time, type, cls, seq); }
    };
    struct Later {
        bool operator()(const Event& l, const Event& r) const { return l.key() > r.key(); }
    };

    std::optional<TimeMs> next_event_time() const {
        std::optional<TimeMs> t;
        if (!events_.empty()) t = events_.top().time;
        if (next_arrival_ < state_.packets.size()) {
            const TimeMs a = state_.packets[next_arrival_].arrival_ms;
            if (!t || a < *t) t = a;
        }
        return t;
    }

    // Arrivals come straight from the sorted trace; they rank after expiries and
    // completions and before crossings at the same instant.
    bool dispatch_next() {
        const bool arrival_pending =
            next_arrival_ < state_.packets.size() && state_.packets[next_arrival_].arrival_ms == state_.clock;
        if (arrival_pending && (events_.empty() || events_.top().time != state_.clock ||
                                events_.top().type == EventType::threshold_crossing)) {
            on_arrival(static_cast<PacketId>(next_arrival_++));
            return true;
        }
        const Event ev = events_.top();
        events_.pop();
        switch (ev.type) {
            case EventType::deadline_expiry: {
                const auto d = state_.packets[ev.packet].disposition;
                if (d != Disposition::queued && d != Disposition::in_service) return false;
                expire_pu(ev.packet);
                return true;
            }
            case EventType::service_completion:
                if (state_.in_service != ev.packet || ev.token != service_token_) return false;
                on_completion();
                return true;
            case EventType::threshold_crossing: {
                const auto d = state_.packets[ev.packet].disposition;
                return d == Disposition::queued || d == Disposition::in_service;
            }
            case EventType::arrival: break;
        }
        return false;
    }

    void push_event(TimeMs time, EventType type, const Packet& p, std::uint64_t token = 0) {
        events_.push(Event{time, type, p.cls, seq_++, p.id, token});
    }

    void advance_to(TimeMs t) { state_.clock = t; }

    TimeMs& busy_of(std::size_t cls) {
        const auto& info = table_[cls];
        return table_.is_pu(cls) ? stats_.pu[info.kind_index].busy_time_ms : stats_.ed[info.kind_index].busy_time_ms;
    }

    void on_arrival(PacketId id) {
        Packet& p = state_.packets[id];
        p.disposition = Disposition::queued;
        const bool was_empty = !state_.backlogged(p.class_index);
        state_.queues[p.class_index].push_back(id);
        if (p.arrival_ms >= options_.warmup_ms) {
            if (table_.is_pu(p.class_index)) {
                ++stats_.pu[table_[p.class_index].kind_index].arrivals;
            } else {
                ++stats_.ed[table_[p.class_index].kind_index].arrivals;
            }
        }
        if (table_.is_pu(p.class_index) && drop_failed_pu_) {
            push_event(p.absolute_deadline_ms, EventType::deadline_expiry, p);
        }
        if (was_empty) schedule_head_crossing(p.class_index);
    }

    void on_completion() {
        Packet& p = state_.packets[*state_.in_service];
        stop_service();
        p.remaining_service_ms = 0.0;
        p.disposition = Disposition::completed;
        p.finish_ms = state_.clock;
        const TimeMs latency = state_.clock - p.arrival_ms;
        const Outcome outcome = latency < p.absolute_deadline_ms - p.arrival_ms ? Outcome::success : Outcome::failure;
        record_resolution(p, outcome, latency);
        schedule_head_crossing(p.class_index);
    }

    void record_resolution(const Packet& p, Outcome outcome, TimeMs latency) {
        if (p.arrival_ms < options_.warmup_ms) return;
        const auto k = table_[p.class_index].kind_index;
        if (table_.is_pu(p.class_index)) {
            auto& s = stats_.pu[k];
            if (p.disposition == Disposition::dropped) {
                ++s.dropped;
            } else {
                ++s.completed;
            }
            s.latencies.push_back(latency);
            s.outcomes.push_back(outcome);
        } else {
            auto& s = stats_.ed[k];
            ++s.completed;
            s.latencies.push_back(latency);
        }
    }

    void schedule_head_crossing(std::size_t cls) {
        if (!threshold_events_) return;
        const TimeMs threshold = table_[cls].threshold_ms;
        if (!std::isfinite(threshold)) return;
        const Packet* head = state_.head(cls);
        if (head == nullptr) return;
        const TimeMs t = head->arrival_ms + threshold;
        if (t > state_.clock) push_event(t, EventType::threshold_crossing, *head);
    }

    void start_service(PacketId id) {
        Packet& p = state_.packets[id];
        p.disposition = Disposition::in_service;
        if (!p.first_start_ms) p.first_start_ms = state_.clock;
        state_.in_service = id;
        service_started_ = state_.clock;
        ++service_token_;
        push_event(state_.clock + p.remaining_service_ms, EventType::service_completion, p, service_token_);
    }

    // Frees the server, charging the elapsed service to the packet and its class.
    void stop_service() {
        Packet& p = state_.packets[*state_.in_service];
        const TimeMs served = state_.clock - service_started_;
        busy_of(p.class_index) += served;
        p.remaining_service_ms = std::max(0.0, p.remaining_service_ms - served);
        state_.in_service.reset();
    }

    void preempt() {
        const PacketId id = *state_.in_service;
        stop_service();
        Packet& p = state_.packets[id];
        p.disposition = Disposition::queued;
        state_.queues[p.class_index].push_front(id);
    }

    ClassTable table_;
    const SchedulerPolicy& policy_;
    EngineOptions options_;
    TimeMs horizon_;
    bool drop_failed_pu_;
    bool threshold_events_;

    SimState state_;
    ClassStats stats_;
    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::size_t next_arrival_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t service_token_ = 0;
    TimeMs service_started_ = 0.0;
    bool finished_ = false;
};

/// Simulates one replication of `cfg` on `trace` under `policy`.
inline ClassStats run(const SimConfig& cfg, const SchedulerPolicy& policy, const Trace& trace,
                      EngineOptions options = {}) {
    Engine engine(cfg, trace, policy, std::move(options));
    return engine.run();
}

/// CSV: kind,class_id,arrival_ms,start_ms,finish_ms,disposition,latency_ms.
inline void write_packet_log_csv(std::ostream& out, const std::vector<PacketRecord>& log) {
    out << "kind,class_id,arrival_ms,start_ms,finish_ms,disposition,latency_ms\n";
    auto opt = [](const std::optional<TimeMs>& v) {
        if (!v) return std::string{};
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", *v);
        return std::string{buf};
    };
    for (const auto& r : log) {
        out << to_string(r.cls.kind) << ',' << r.cls.id << ',' << opt(r.arrival_ms) << ',' << opt(r.start_ms) << ','
            << opt(r.finish_ms) << ',' << to_string(r.disposition) << ',' << opt(r.latency_ms) << '\n';
    }
}

}  // namespace m2m
