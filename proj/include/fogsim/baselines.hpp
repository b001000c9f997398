#pragma once

// Centralized reference schedulers. Each planner reads the batches to place
// and the current per-node schedules (indexed by node id), inserts every
// binding it makes into those schedules, and reports the plan.

#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include "fogsim/model.hpp"
#include "fogsim/negotiation.hpp"
#include "fogsim/schedule.hpp"

namespace fogsim {

struct Binding {
  DeviceId device;
  NodeId node;
  SimTime start = 0.0;
  SimTime completion = 0.0;
  double et = 0.0;

  bool operator==(const Binding&) const = default;
};

struct AssignmentPlan {
  std::vector<Binding> bindings;  // in commit order
  std::vector<DeviceId> failed;
};

struct PlanningContext {
  std::span<const Node> nodes;
  std::span<Schedule> schedules;   // one per node, same indexing
  SimTime now = 0.0;
  std::span<const bool> excluded;  // nodes that cannot host anything right now
};

enum class SchedulerKind : std::uint8_t { agent, round_robin, min_min, geo_aware };

const char* to_string(SchedulerKind kind);
std::optional<SchedulerKind> parse_scheduler(std::string_view text);

/// Batches in device-id order; device k starts its search at node k mod p
/// and walks forward cyclically past RAM-infeasible nodes.
AssignmentPlan round_robin(std::span<const BatchSummary> batches, PlanningContext context);

/// Repeatedly commits the (device, node) pair with the globally smallest
/// completion; ties by device id, then node id.
AssignmentPlan min_min(std::span<const BatchSummary> batches, PlanningContext context);

/// Per device in id order: nodes ranked by pure distance, examined θ at a
/// time; within the first round holding a feasible node the nearest wins,
/// ties by earlier completion, then node id.
AssignmentPlan geo_aware(std::span<const BatchSummary> batches, PlanningContext context, std::size_t theta);

}  // namespace fogsim
