#pragma once

// Pure decision rules shared by device agents, node agents and the baseline
// planners: deadline ordering, breadth-first node ranking, the execution-time
// estimate, RAM admission, proposal generation and winner selection.

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fogsim/model.hpp"
#include "fogsim/schedule.hpp"

namespace fogsim {

/// Aggregate of a device's live task batch, which is all a node needs to
/// admit, cost and execute it.
struct BatchSummary {
  DeviceId device;
  GeoLocation location;
  double total_data = 0.0;    // Σs, GB
  double total_length = 0.0;  // Σl, MI
  double max_ram = 0.0;       // max r, GB
  SimTime earliest_deadline = 0.0;
  std::size_t task_count = 0;

  bool operator==(const BatchSummary&) const = default;
};

BatchSummary summarize(DeviceId device, const GeoLocation& location, std::span<const Task> tasks);
BatchSummary summarize(const IoTDevice& device);

struct RankedNode {
  NodeId node;
  int depth = 0;

  bool operator==(const RankedNode&) const = default;
};

struct Proposal {
  NodeId node;
  SimTime start = 0.0;
  SimTime completion = 0.0;
  double et = 0.0;
  int depth = 0;

  bool operator==(const Proposal&) const = default;
};

struct Refusal {
  NodeId node;
};

struct Contract {
  DeviceId device;
  NodeId node;
  Slot slot;
  double et = 0.0;

  bool operator==(const Contract&) const = default;
};

/// Stable sort ascending by deadline.
std::vector<Task> prioritize_tasks(std::vector<Task> tasks);

/// Breadth-first ranking rooted at the device's gateway: depth levels in
/// order, each level by ascending distance to the device, ties by node id.
/// Unreachable nodes and nodes flagged in `excluded` are left out (the
/// gateway itself is always listed). Throws std::invalid_argument when the
/// gateway is not part of the topology.
std::vector<RankedNode> rank_nodes(const IoTDevice& device, const Topology& topology, std::span<const Node> nodes,
                                   std::span<const bool> excluded = {});

/// Distance-ranked node list without topology depth (geo-aware baseline).
std::vector<RankedNode> rank_by_distance(const GeoLocation& location, std::span<const Node> nodes,
                                         std::span<const bool> excluded = {});

/// ET = γ × (8 Σs / bw) + Σl / cpu. Throws std::invalid_argument for a node
/// with non-positive bandwidth or cpu rate.
double estimate_et(const BatchSummary& batch, const Node& node);
double estimate_et(const IoTDevice& device, const Node& node);

/// ram_p ≥ max r. Throws std::invalid_argument for an empty task list.
bool check_ram(const Node& node, std::span<const Task> tasks);
bool check_ram(const Node& node, const BatchSummary& batch);

struct RequestOptions {
  /// Lead time added to `now` before the earliest admissible start, covering
  /// the accept round trip.
  double lead_time = 0.0;
  std::optional<SimTime> horizon;
};

/// A node's answer to a batch request. The slot is quoted, not reserved.
std::variant<Proposal, Refusal> handle_request(const Node& node, const Schedule& schedule, const BatchSummary& batch,
                                               SimTime now, const RequestOptions& options = {});

/// Minimum completion, then smaller depth, then smaller node id.
/// Throws std::invalid_argument on an empty list.
const Proposal& select_proposal(std::span<const Proposal> proposals);

/// Strict weak order matching select_proposal().
bool proposal_before(const Proposal& a, const Proposal& b);

/// Reserves the proposed interval when it still fits and starts no earlier
/// than `now`; nullopt means the quote went stale.
std::optional<Contract> commit(Schedule& schedule, const Proposal& proposal, DeviceId device, SimTime now);

}  // namespace fogsim
