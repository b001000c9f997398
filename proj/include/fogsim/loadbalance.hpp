#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fogsim/model.hpp"
#include "fogsim/negotiation.hpp"
#include "fogsim/schedule.hpp"

namespace fogsim {

struct LoadSample {
  NodeId node;
  double allocated = 0.0;  // TL_p, seconds
  SimTime horizon = 0.0;   // C_max^p
  double load = 0.0;       // μ_p
};

/// Load of a schedule seen from `now`: reserved time still ahead divided by
/// the time left until the schedule's last completion. 0 for an idle node.
LoadSample compute_load(std::span<const Slot> slots, SimTime now, NodeId node = {});

/// Variance of a two-element sample: (a - b)^2 / 4.
double pair_variance(double load_a, double load_b);

/// Network cost of moving `data_gb` across `hops` topology edges.
double migrate_cost(double data_gb, int hops);

/// Load report a node agent receives from one directly connected neighbour.
struct NeighborState {
  Node node;
  double load = 0.0;
  std::vector<Slot> schedule;
};

struct PlannedMigration {
  DeviceId device;
  NodeId source;
  NodeId target;
  Slot old_slot;
  Interval window;
  double et = 0.0;
};

struct BalanceOptions {
  double delta = 0.01;
  /// Earliest admissible start on a target (now plus the request's latency).
  SimTime earliest_target_start = 0.0;
};

using BatchLookup = std::function<const BatchSummary*(DeviceId)>;

/// One balancing period of the node owning `schedule`. Neighbours are
/// visited in the given order (callers pass ascending id, fogs only). For
/// each neighbour with V ≥ δ and a lighter load, own slots that have not
/// started are scanned from the latest start backwards; the first one the
/// neighbour can admit, place before the batch's deadline (or no later than
/// today), and whose move strictly reduces the pair variance is planned. At
/// most one migration per neighbour.
std::vector<PlannedMigration> balance_step(const Node& self, const Schedule& schedule, const BatchLookup& batches,
                                           std::span<const NeighborState> neighbors, SimTime now,
                                           const BalanceOptions& options);

}  // namespace fogsim
