#pragma once

// One complete run: agents (or a central baseline planner) driven by the
// engine over a scenario, with optional balancing and uncertain events.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fogsim/baselines.hpp"
#include "fogsim/metrics.hpp"
#include "fogsim/scenario.hpp"

namespace fogsim {

struct SimConfig {
  SchedulerKind scheduler = SchedulerKind::agent;
  std::size_t theta = 20;
  double delta = 0.01;
  double balance_period = 10.0;
  bool balancing = true;
  double control_latency = 0.0;
  bool events = false;
  /// Count cancelled tasks in TN (they never count in SN).
  bool include_cancelled_in_total = false;
  /// Latest admissible completion on any node; unbounded when unset.
  std::optional<SimTime> slot_horizon;
  /// Re-check schedule and binding invariants after every dispatched event.
  bool check_invariants = false;
  std::ostream* trace = nullptr;
  std::ostream* load_log = nullptr;  // "time,node-id,load" rows at balance ticks
};

/// Empty string when the configuration is usable.
std::string validate_config(const SimConfig& config);

/// A reservation as it was made, with the inputs that priced it.
struct CommitRecord {
  SimTime at = 0.0;
  Contract contract;
  BatchSummary batch;
  Node node;  // capabilities at commit time
};

struct DeviceOutcome {
  DeviceId device;
  std::optional<NodeId> node;  // where the batch executed
  std::optional<Slot> slot;
  std::size_t succeeded_tasks = 0;
  std::size_t total_tasks = 0;  // live tasks at the end of the run
  std::size_t cancelled_tasks = 0;
  bool executed = false;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<Node> nodes;          // final capabilities
  std::vector<Schedule> schedules;  // final, indexed by node id; executed slots remain as history
  Topology topology;                // final
  std::vector<DeviceOutcome> devices;
  std::vector<ReschedulingRecord> records;
  std::vector<CommitRecord> commits;
  std::vector<Transfer> transfers;
  std::vector<std::string> violations;  // only filled when check_invariants is on
  SimTime end_time = 0.0;
  std::uint64_t messages = 0;
  std::uint64_t dead_letters = 0;
};

/// Hooks for tests that need to see intermediate decisions.
class SimObserver {
 public:
  virtual ~SimObserver() = default;
  /// A node agent priced a request against `schedule`; no slot may start
  /// before `earliest`.
  virtual void on_quote(NodeId /*node*/, const BatchSummary& /*batch*/, const Schedule& /*schedule*/,
                        SimTime /*earliest*/, std::uint64_t /*token*/) {}
  /// A device agent accepted `winner` out of the round identified by `token`.
  virtual void on_accept(DeviceId /*device*/, const Proposal& /*winner*/, std::uint64_t /*token*/) {}
  virtual void on_commit(const CommitRecord& /*commit*/) {}
};

/// Throws SimulationError on internal faults and std::invalid_argument for
/// an invalid configuration.
RunResult simulate(const Scenario& scenario, const SimConfig& config, SimObserver* observer = nullptr);

}  // namespace fogsim
