#include "fogsim/negotiation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace fogsim {

BatchSummary summarize(DeviceId device, const GeoLocation& location, std::span<const Task> tasks) {
  BatchSummary b;
  b.device = device;
  b.location = location;
  b.task_count = tasks.size();
  b.earliest_deadline = tasks.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& t : tasks) {
    b.total_data += t.data_size;
    b.total_length += t.cpu_length;
    b.max_ram = std::max(b.max_ram, t.ram_req);
    b.earliest_deadline = std::min(b.earliest_deadline, t.deadline);
  }
  return b;
}

BatchSummary summarize(const IoTDevice& device) { return summarize(device.id, device.location, device.tasks); }

std::vector<Task> prioritize_tasks(std::vector<Task> tasks) {
  std::stable_sort(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) { return a.deadline < b.deadline; });
  return tasks;
}

namespace {

bool is_excluded(std::span<const bool> excluded, std::size_t index) {
  return index < excluded.size() && excluded[index];
}

}  // namespace

std::vector<RankedNode> rank_nodes(const IoTDevice& device, const Topology& topology, std::span<const Node> nodes,
                                   std::span<const bool> excluded) {
  if (device.gateway.index() >= topology.order() || device.gateway.index() >= nodes.size()) {
    throw std::invalid_argument("device " + std::to_string(device.id.value) + " has unknown gateway " +
                                std::to_string(device.gateway.value));
  }
  const auto depth = hop_distances(topology, device.gateway);
  std::vector<RankedNode> ranked;
  ranked.reserve(nodes.size());
  for (std::size_t k = 0; k < nodes.size() && k < depth.size(); ++k) {
    if (depth[k] < 0) continue;
    if (k != device.gateway.index() && is_excluded(excluded, k)) continue;
    ranked.push_back({NodeId{k}, depth[k]});
  }
  std::vector<double> dist(nodes.size());
  for (const auto& r : ranked) dist[r.node.index()] = distance(device.location, nodes[r.node.index()].location);
  std::sort(ranked.begin(), ranked.end(), [&](const RankedNode& a, const RankedNode& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    const double da = dist[a.node.index()];
    const double db = dist[b.node.index()];
    if (da != db) return da < db;
    return a.node < b.node;
  });
  return ranked;
}

std::vector<RankedNode> rank_by_distance(const GeoLocation& location, std::span<const Node> nodes,
                                         std::span<const bool> excluded) {
  std::vector<RankedNode> ranked;
  std::vector<double> dist(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (is_excluded(excluded, k)) continue;
    ranked.push_back({NodeId{k}, 0});
    dist[k] = distance(location, nodes[k].location);
  }
  std::sort(ranked.begin(), ranked.end(), [&](const RankedNode& a, const RankedNode& b) {
    const double da = dist[a.node.index()];
    const double db = dist[b.node.index()];
    if (da != db) return da < db;
    return a.node < b.node;
  });
  return ranked;
}

double estimate_et(const BatchSummary& batch, const Node& node) {
  if (!(node.bandwidth > 0.0) || !(node.cpu_rate > 0.0)) {
    throw std::invalid_argument("node " + std::to_string(node.id.value) + " has degenerate bandwidth or cpu rate");
  }
  constexpr double kGigabitsPerGigabyte = 8.0;
  const double gamma = distance(batch.location, node.location);
  return gamma * (kGigabitsPerGigabyte * batch.total_data / node.bandwidth) + batch.total_length / node.cpu_rate;
}

double estimate_et(const IoTDevice& device, const Node& node) { return estimate_et(summarize(device), node); }

bool check_ram(const Node& node, std::span<const Task> tasks) {
  if (tasks.empty()) throw std::invalid_argument("check_ram: empty task list");
  double need = 0.0;
  for (const auto& t : tasks) need = std::max(need, t.ram_req);
  return node.ram >= need;
}

bool check_ram(const Node& node, const BatchSummary& batch) { return node.ram >= batch.max_ram; }

std::variant<Proposal, Refusal> handle_request(const Node& node, const Schedule& schedule, const BatchSummary& batch,
                                               SimTime now, const RequestOptions& options) {
  if (!check_ram(node, batch)) return Refusal{node.id};
  const double et = estimate_et(batch, node);
  const auto gap = schedule.find_slot(et, now + options.lead_time, options.horizon);
  if (!gap) return Refusal{node.id};
  return Proposal{node.id, gap->start, gap->completion, et, 0};
}

bool proposal_before(const Proposal& a, const Proposal& b) {
  if (a.completion != b.completion) return a.completion < b.completion;
  if (a.depth != b.depth) return a.depth < b.depth;
  return a.node < b.node;
}

const Proposal& select_proposal(std::span<const Proposal> proposals) {
  if (proposals.empty()) throw std::invalid_argument("select_proposal: no proposals");
  return *std::min_element(proposals.begin(), proposals.end(), proposal_before);
}

std::optional<Contract> commit(Schedule& schedule, const Proposal& proposal, DeviceId device, SimTime now) {
  if (proposal.start < now) return std::nullopt;
  if (schedule.find(device)) return std::nullopt;
  if (!schedule.fits(proposal.start, proposal.completion)) return std::nullopt;
  const Slot slot{device, proposal.start, proposal.completion};
  schedule.insert(slot);
  return Contract{device, proposal.node, slot, proposal.et};
}

}  // namespace fogsim
