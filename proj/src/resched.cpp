#include "fogsim/resched.hpp"

#include <algorithm>
#include <stdexcept>

namespace fogsim {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::task_change: return "task-change";
    case EventKind::location_change: return "location-change";
    case EventKind::cancellation: return "cancellation";
    case EventKind::capability_change: return "capability-change";
    case EventKind::disconnection: return "disconnection";
  }
  return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (auto kind : {EventKind::task_change, EventKind::location_change, EventKind::cancellation,
                    EventKind::capability_change, EventKind::disconnection}) {
    if (text == to_string(kind)) return kind;
  }
  return std::nullopt;
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::pending: return "pending";
    case Outcome::kept_node: return "kept-node";
    case Outcome::new_contract: return "new-contract";
    case Outcome::cancelled: return "cancelled";
    case Outcome::failed: return "failed";
  }
  return "unknown";
}

std::string validate_event(const UncertainEvent& event, std::size_t device_count, std::size_t node_count) {
  const bool device_kind = event.kind == EventKind::task_change || event.kind == EventKind::location_change ||
                           event.kind == EventKind::cancellation;
  if (device_kind) {
    const auto* d = std::get_if<DeviceId>(&event.target);
    if (!d) return "device event must target a device";
    if (d->index() >= device_count) return "unknown target device";
  } else {
    const auto* n = std::get_if<NodeId>(&event.target);
    if (!n) return "node event must target a node";
    if (n->index() >= node_count) return "unknown target node";
  }
  if (!(event.fire_at >= 0.0)) return "negative fire time";
  switch (event.kind) {
    case EventKind::task_change: {
      const auto* c = std::get_if<TaskChange>(&event.delta);
      if (!c) return "task-change needs a task delta";
      const auto& t = c->updated;
      if (!(t.ram_req > 0 && t.data_size > 0 && t.cpu_length > 0 && t.deadline > 0)) return "non-positive task field";
      return {};
    }
    case EventKind::location_change:
      return std::holds_alternative<LocationChange>(event.delta) ? "" : "location-change needs a location";
    case EventKind::cancellation: {
      const auto* c = std::get_if<Cancellation>(&event.delta);
      if (!c || c->tasks.empty()) return "cancellation needs task ids";
      return {};
    }
    case EventKind::capability_change: {
      const auto* c = std::get_if<CapabilityChange>(&event.delta);
      if (!c) return "capability-change needs capabilities";
      if (!(c->ram > 0 && c->bandwidth > 0 && c->cpu_rate > 0)) return "non-positive capability";
      return {};
    }
    case EventKind::disconnection:
      return std::holds_alternative<Disconnection>(event.delta) ? "" : "disconnection carries no payload";
  }
  return "unknown kind";
}

double response_time(const ReschedulingRecord& record) {
  if (!record.resolved) throw std::logic_error("rescheduling record " + std::to_string(record.event.value) +
                                               " is unresolved");
  return *record.resolved - record.started;
}

std::optional<Reevaluation> reevaluate_batch(const Node& node, const Schedule& schedule, const BatchSummary& batch,
                                             SimTime now, std::optional<SimTime> horizon) {
  if (!check_ram(node, batch)) return std::nullopt;
  Schedule released = schedule;
  released.remove(batch.device);
  const double et = estimate_et(batch, node);
  const auto gap = released.find_slot(et, now, horizon);
  if (!gap) return std::nullopt;
  return Reevaluation{*gap, et};
}

Slot shrink_slot(const Slot& slot, const BatchSummary& remaining, const Node& node) {
  return Slot{slot.device, slot.start, slot.start + estimate_et(remaining, node)};
}

CapabilityResolution repack_after_capability_change(const Schedule& schedule, const Node& changed,
                                                    const BatchLookup& batches, SimTime now) {
  CapabilityResolution out;
  SimTime previous_end = 0.0;
  for (const auto& s : schedule.slots()) {
    if (s.completion <= now) {
      previous_end = std::max(previous_end, s.completion);
      continue;
    }
    const BatchSummary* batch = batches(s.device);
    if (!batch) throw std::logic_error("no batch recorded for device " + std::to_string(s.device.value));
    if (!check_ram(changed, *batch)) {
      out.evicted.push_back(s.device);
      continue;
    }
    const double et = estimate_et(*batch, changed);
    const SimTime start = std::max(s.start, previous_end);
    const SimTime completion = start + et;
    if (completion > batch->earliest_deadline) {
      out.evicted.push_back(s.device);
      continue;
    }
    out.kept.push_back({Slot{s.device, start, completion}, et});
    previous_end = completion;
  }
  return out;
}

}  // namespace fogsim
