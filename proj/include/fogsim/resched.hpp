#pragma once

// Uncertain events and the node-side rules used to resolve them. The message
// flows that follow (renegotiation, probing) live in the simulation.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fogsim/loadbalance.hpp"
#include "fogsim/model.hpp"
#include "fogsim/negotiation.hpp"
#include "fogsim/schedule.hpp"

namespace fogsim {

enum class EventKind : std::uint8_t { task_change, location_change, cancellation, capability_change, disconnection };

const char* to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// Replacement values for one task (requirements and/or deadline).
struct TaskChange {
  Task updated;
  bool operator==(const TaskChange&) const = default;
};
struct LocationChange {
  GeoLocation location;
  bool operator==(const LocationChange&) const = default;
};
struct Cancellation {
  std::vector<TaskId> tasks;
  bool operator==(const Cancellation&) const = default;
};
struct CapabilityChange {
  double ram = 0.0;
  double bandwidth = 0.0;
  double cpu_rate = 0.0;
  bool operator==(const CapabilityChange&) const = default;
};
struct Disconnection {
  bool operator==(const Disconnection&) const = default;
};

using EventDelta = std::variant<TaskChange, LocationChange, Cancellation, CapabilityChange, Disconnection>;
using EventTarget = std::variant<DeviceId, NodeId>;

struct UncertainEvent {
  EventId id;
  SimTime fire_at = 0.0;
  EventKind kind = EventKind::task_change;
  EventTarget target;
  EventDelta delta;

  bool operator==(const UncertainEvent&) const = default;
};

/// Empty string when the event is well formed against the given population.
std::string validate_event(const UncertainEvent& event, std::size_t device_count, std::size_t node_count);

enum class Outcome : std::uint8_t { pending, kept_node, new_contract, cancelled, failed };

const char* to_string(Outcome outcome);

struct ReschedulingRecord {
  EventId event;
  EventKind kind = EventKind::task_change;
  SimTime started = 0.0;
  std::optional<SimTime> resolved;  // resolution time, or time the search was exhausted
  Outcome outcome = Outcome::pending;
};

/// resolved - started. Throws std::logic_error for an unresolved record.
double response_time(const ReschedulingRecord& record);

struct Reevaluation {
  Interval window;
  double et = 0.0;
};

/// Contracted node re-evaluating a changed batch with the device's own slot
/// released; nullopt when the node can no longer admit the batch.
std::optional<Reevaluation> reevaluate_batch(const Node& node, const Schedule& schedule, const BatchSummary& batch,
                                             SimTime now, std::optional<SimTime> horizon = std::nullopt);

/// Slot after cancelling part of the batch: same start, completion derived
/// from the remaining batch.
Slot shrink_slot(const Slot& slot, const BatchSummary& remaining, const Node& node);

struct RepackedSlot {
  Slot slot;
  double et = 0.0;
};

struct CapabilityResolution {
  std::vector<RepackedSlot> kept;     // unfinished slots that stay, in schedule order
  std::vector<DeviceId> evicted;      // devices that must renegotiate
};

/// Re-derives every unfinished slot under `changed` capabilities in schedule
/// order. Each slot keeps its start unless the previous kept slot now ends
/// later; devices that fail the RAM check or would finish after their
/// earliest deadline are evicted and free their time.
CapabilityResolution repack_after_capability_change(const Schedule& schedule, const Node& changed,
                                                    const BatchLookup& batches, SimTime now);

}  // namespace fogsim
