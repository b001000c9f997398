#include "fogsim/loadbalance.hpp"

#include <algorithm>
#include <set>

namespace fogsim {

LoadSample compute_load(std::span<const Slot> slots, SimTime now, NodeId node) {
  LoadSample sample;
  sample.node = node;
  for (const auto& s : slots) {
    sample.allocated += std::max(0.0, s.completion - std::max(s.start, now));
    sample.horizon = std::max(sample.horizon, s.completion);
  }
  sample.load = sample.horizon > now ? sample.allocated / (sample.horizon - now) : 0.0;
  return sample;
}

double pair_variance(double load_a, double load_b) {
  const double d = load_a - load_b;
  return d * d / 4.0;
}

double migrate_cost(double data_gb, int hops) { return data_gb * hops; }

namespace {

std::vector<Slot> without(std::span<const Slot> slots, const std::set<DeviceId>& removed) {
  std::vector<Slot> out;
  out.reserve(slots.size());
  for (const auto& s : slots) {
    if (!removed.contains(s.device)) out.push_back(s);
  }
  return out;
}

std::vector<Slot> with(std::span<const Slot> slots, const Slot& added) {
  std::vector<Slot> out(slots.begin(), slots.end());
  auto pos = std::upper_bound(out.begin(), out.end(), added.start,
                              [](SimTime t, const Slot& s) { return t < s.start; });
  out.insert(pos, added);
  return out;
}

}  // namespace

std::vector<PlannedMigration> balance_step(const Node& self, const Schedule& schedule, const BatchLookup& batches,
                                           std::span<const NeighborState> neighbors, SimTime now,
                                           const BalanceOptions& options) {
  std::vector<PlannedMigration> plan;
  std::set<DeviceId> moved;
  const SimTime earliest = std::max(now, options.earliest_target_start);

  for (const auto& neighbor : neighbors) {
    const auto remaining = without(schedule.slots(), moved);
    const double own_load = compute_load(remaining, now).load;
    const double variance = pair_variance(own_load, neighbor.load);
    if (variance < options.delta || !(own_load > neighbor.load)) continue;

    for (auto it = remaining.rbegin(); it != remaining.rend(); ++it) {
      if (it->start <= now) break;
      const BatchSummary* batch = batches(it->device);
      if (!batch || !check_ram(neighbor.node, *batch)) continue;
      const double et = estimate_et(*batch, neighbor.node);
      const auto gap = find_slot(neighbor.schedule, et, earliest);
      if (!gap) continue;
      if (gap->completion > batch->earliest_deadline && gap->completion > it->completion) continue;

      auto after_source = remaining;
      after_source.erase(after_source.begin() + (std::prev(it.base()) - remaining.begin()));
      const double source_after = compute_load(after_source, now).load;
      const double target_after = compute_load(with(neighbor.schedule, Slot{it->device, gap->start, gap->completion}),
                                               now).load;
      if (!(pair_variance(source_after, target_after) < variance)) continue;

      plan.push_back(PlannedMigration{it->device, self.id, neighbor.node.id, *it, *gap, et});
      moved.insert(it->device);
      break;
    }
  }
  return plan;
}

}  // namespace fogsim
