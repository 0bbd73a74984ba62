// Simulation state shared between the event engine and the scheduling policies.
#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "core.hpp"

namespace m2m {

using PacketId = std::uint32_t;

enum class Disposition : std::uint8_t { pending, queued, in_service, completed, dropped };

inline std::string_view to_string(Disposition d) {
    switch (d) {
        case Disposition::pending: return "pending";
        case Disposition::queued: return "queued";
        case Disposition::in_service: return "in_service";
        case Disposition::completed: return "completed";
        case Disposition::dropped: return "dropped";
    }
    return "unknown";
}

struct Packet {
    PacketId id = 0;
    std::size_t class_index = 0;
    ClassRef cls;
    TimeMs arrival_ms = 0.0;
    TimeMs service_demand_ms = 0.0;
    TimeMs remaining_service_ms = 0.0;
    TimeMs absolute_deadline_ms = kInfinity;  ///< arrival + l_d for PU, +inf for ED
    Disposition disposition = Disposition::pending;
    std::optional<TimeMs> first_start_ms;
    std::optional<TimeMs> finish_ms;
};

/// Per-class constants the engine and the policies need, indexed by a flat class
/// index: PU classes first (config order), then ED classes.
struct ClassInfo {
    ClassRef ref;
    std::size_t kind_index = 0;  ///< position within pu_classes / ed_classes
    double service_rate_per_ms = 1.0;
    TimeMs deadline_ms = kInfinity;  ///< firm deadline (PU only)
    TimeMs threshold_ms = kInfinity;
    TimeMs due_offset_ms = kInfinity;  ///< EDD due date offset: l_d for PU, b for ED
};

class ClassTable {
public:
    ClassTable() = default;

    explicit ClassTable(const SimConfig& cfg) {
        for (std::size_t i = 0; i < cfg.pu_classes.size(); ++i) {
            const auto& pu = cfg.pu_classes[i];
            classes_.push_back({{ClassKind::pu, pu.id}, i, pu.service_rate_per_ms, pu.deadline_ms, pu.threshold_ms,
                                pu.deadline_ms});
        }
        for (std::size_t i = 0; i < cfg.ed_classes.size(); ++i) {
            const auto& ed = cfg.ed_classes[i];
            classes_.push_back({{ClassKind::ed, ed.id}, i, ed.service_rate_per_ms, kInfinity, ed.threshold_ms, ed.b});
        }
        pu_count_ = cfg.pu_classes.size();
        for (std::size_t pos : pu_priority_order(cfg.pu_classes)) pu_order_.push_back(pos);
        for (std::size_t pos : ed_priority_order(cfg.ed_classes)) ed_order_.push_back(pu_count_ + pos);
    }

    std::size_t size() const { return classes_.size(); }
    std::size_t pu_count() const { return pu_count_; }
    const ClassInfo& operator[](std::size_t i) const { return classes_[i]; }
    bool is_pu(std::size_t i) const { return i < pu_count_; }

    /// Flat indices of PU classes, highest priority first.
    const std::vector<std::size_t>& pu_order() const { return pu_order_; }
    /// Flat indices of ED classes, highest priority first.
    const std::vector<std::size_t>& ed_order() const { return ed_order_; }

    std::optional<std::size_t> index_of(ClassRef ref) const {
        for (std::size_t i = 0; i < classes_.size(); ++i) {
            if (classes_[i].ref == ref) return i;
        }
        return std::nullopt;
    }

private:
    std::vector<ClassInfo> classes_;
    std::size_t pu_count_ = 0;
    std::vector<std::size_t> pu_order_;
    std::vector<std::size_t> ed_order_;
};

struct SimState {
    TimeMs clock = 0.0;
    std::vector<Packet> packets;
    std::vector<std::deque<PacketId>> queues;  ///< per flat class index, FCFS
    std::optional<PacketId> in_service;

    std::optional<std::size_t> serving_class() const {
        if (!in_service) return std::nullopt;
        return packets[*in_service].class_index;
    }

    bool has_queued(std::size_t cls) const { return !queues[cls].empty(); }

    /// Oldest unresolved packet of a class: the one in service if it belongs to the
    /// class (a preempted packet returns to the queue front, so it is always the
    /// oldest), otherwise the queue front.
    const Packet* head(std::size_t cls) const {
        if (in_service && packets[*in_service].class_index == cls) return &packets[*in_service];
        if (queues[cls].empty()) return nullptr;
        return &packets[queues[cls].front()];
    }

    bool backlogged(std::size_t cls) const { return head(cls) != nullptr; }
};

struct ServeClass {
    std::size_t class_index = 0;
    bool operator==(const ServeClass&) const = default;
};
struct Continue {
    bool operator==(const Continue&) const = default;
};
struct Idle {
    bool operator==(const Idle&) const = default;
};

using PolicyDecision = std::variant<ServeClass, Continue, Idle>;

}  // namespace m2m
