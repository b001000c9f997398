#include "fogsim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <unordered_map>

#include "fogsim/engine.hpp"
#include "fogsim/format.hpp"
#include "fogsim/loadbalance.hpp"

namespace fogsim {

std::string validate_config(const SimConfig& c) {
  if (c.theta == 0) return "theta must be at least 1";
  if (!(c.delta >= 0.0)) return "delta must be non-negative";
  if (!(c.balance_period > 0.0)) return "balance period must be positive";
  if (!(c.control_latency >= 0.0)) return "control latency must be non-negative";
  if (c.slot_horizon && !(*c.slot_horizon > 0.0)) return "slot horizon must be positive";
  return {};
}

namespace {

using Clock = std::chrono::steady_clock;

enum class Phase : std::uint8_t { waiting, negotiating, accepting, contracted, executed, failed, cancelled };

struct DeviceState {
  IoTDevice device;
  std::size_t cancelled = 0;
  Phase phase = Phase::waiting;

  std::vector<RankedNode> ranking;
  std::size_t cursor = 0;
  std::vector<NodeId> round;
  std::vector<NodeId> pending;
  std::vector<Proposal> proposals;
  std::uint64_t token = 0;
  bool probing = false;    // location change: looking for a strictly better node
  bool migrating = false;  // slot is in transit between two node agents
  std::size_t stale_commits = 0;  // commit count seen at the last stale retry
  std::size_t stale_streak = 0;   // stale retries with no commit anywhere in between

  std::optional<Contract> contract;
  std::optional<Slot> executed_slot;
  std::optional<NodeId> executed_on;
  std::size_t succeeded = 0;

  std::vector<std::size_t> waiting_records;
  std::deque<std::pair<std::size_t, std::size_t>> deferred;  // (record, event index)

  BatchSummary batch() const { return summarize(device.id, device.location, device.tasks); }
  bool busy() const {
    return phase == Phase::negotiating || phase == Phase::accepting || probing || migrating;
  }
};

struct InTransit {
  Slot old_slot;
  double et = 0.0;
  NodeId target;
};

struct NodeState {
  Node node;
  bool active = true;
  std::unordered_map<DeviceId, double> et;  // current slot duration per holder
  bool tick_scheduled = false;
  std::uint64_t balance_round = 0;
  bool balancing = false;
  std::vector<NodeId> awaiting;
  std::vector<NeighborState> reports;
  std::map<DeviceId, InTransit> in_transit;
};

struct OpenRecord {
  ReschedulingRecord record;
  std::size_t remaining = 0;
  bool any_failed = false;
  bool any_new = false;
};

class World final : public EventSink {
 public:
  World(const Scenario& scenario, const SimConfig& config, SimObserver* observer);

  RunResult run();
  void dispatch(const SimEvent& event) override;

 private:
  // identities
  AgentRef node_ref(NodeId n) const { return {AgentId{n.value}, AgentRole::node_agent}; }
  AgentRef device_ref(DeviceId d) const {
    return {AgentId{static_cast<std::uint32_t>(nodes_.size() + d.index())}, AgentRole::device_agent};
  }
  AgentRef central_ref() const {
    return {AgentId{static_cast<std::uint32_t>(nodes_.size() + devices_.size())}, AgentRole::central_planner};
  }
  DeviceState& device_of(const AgentRef& ref) { return devices_[ref.id.index() - nodes_.size()]; }
  NodeState& node_of(const AgentRef& ref) { return nodes_[ref.id.index()]; }
  bool agent_mode() const { return config_.scheduler == SchedulerKind::agent; }
  SimTime now() const { return engine_.now(); }
  double reply_timeout() const { return config_.control_latency * 10.0 + 1.0; }
  std::span<const bool> excluded() const { return {excluded_.get(), nodes_.size()}; }
  std::vector<Node> node_list() const;

  // schedule bookkeeping
  void track(NodeId n, DeviceId d, const Slot& slot, double et);
  void place(NodeId n, DeviceId d, const Slot& slot, double et);
  void unplace(NodeId n, DeviceId d);
  void record_commit(const Contract& c, const BatchSummary& batch);
  void log_transfer(const DeviceState& d, NodeId n);
  void schedule_tick(NodeId n);

  // device agent
  void start_negotiation(DeviceState& d, bool probe);
  void next_round(DeviceState& d);
  void send_round(DeviceState& d);
  void on_reply(DeviceState& d, NodeId from, std::uint64_t token, const Proposal* proposal);
  void finish_round(DeviceState& d);
  void on_confirm(DeviceState& d, NodeId from, const msg::Confirm& m);
  void retry_round(DeviceState& d, std::uint64_t token);
  void keep_contract(DeviceState& d);
  void settle(DeviceState& d, Outcome outcome);
  void drain_deferred(DeviceState& d);

  // node agent
  void on_request(NodeState& n, DeviceId d, const msg::Request& m);
  void on_accept(NodeState& n, DeviceId d, const msg::Accept& m);
  void on_complete(const ExecutionComplete& c);
  void on_tick(NodeState& n);
  void on_load_query(NodeState& n, NodeId from, const msg::LoadQuery& m);
  void on_load_report(NodeState& n, NodeId from, const msg::LoadReport& m);
  void finish_balance(NodeState& n);
  void on_migration_request(NodeState& n, NodeId from, const msg::MigrationRequest& m);
  void restore(NodeState& n, DeviceId device);

  // central planner
  void request_placement(DeviceState& d);
  void central_replan();

  // uncertain events
  std::size_t open_record(const UncertainEvent& e);
  void add_part(std::size_t record, DeviceState& d);
  void resolve_part(std::size_t record, Outcome outcome);
  void finish_record(std::size_t record, Outcome outcome);
  void noop(std::size_t record);
  void inject(EventId id);
  void apply_device_event(DeviceState& d, std::size_t record, const UncertainEvent& e);
  void apply_capability(NodeState& n, std::size_t record, const CapabilityChange& c);
  void apply_disconnection(NodeState& n, std::size_t record);
  void renegotiate(DeviceState& d, std::size_t record);
  void evict(NodeState& n, DeviceId device, std::optional<std::size_t> record);

  void reassign_gateway(DeviceState& d);
  void check_invariants();

  const Scenario& scenario_;
  SimConfig config_;
  SimObserver* observer_;
  Engine engine_;
  Topology topology_;
  std::vector<NodeState> nodes_;
  std::vector<Schedule> schedules_;
  std::vector<DeviceState> devices_;
  std::unique_ptr<bool[]> excluded_;
  std::vector<std::vector<std::uint32_t>> generation_;  // [node][device]
  std::unordered_map<EventId, std::size_t> event_index_;

  std::vector<OpenRecord> records_;
  std::vector<CommitRecord> commits_;
  std::vector<Transfer> transfers_;
  std::vector<std::string> violations_;
  std::vector<DeviceId> replan_queue_;
  bool replan_posted_ = false;
  std::uint64_t next_token_ = 0;
  std::size_t warnings_ = 0;
  std::size_t migrations_ = 0;
  double decision_us_ = 0.0;
};

World::World(const Scenario& scenario, const SimConfig& config, SimObserver* observer)
    : scenario_(scenario),
      config_(config),
      observer_(observer),
      engine_(EngineOptions{config.control_latency}),
      topology_(scenario.topology) {
  if (auto why = validate_config(config); !why.empty()) throw std::invalid_argument(why);
  if (topology_.order() != scenario.nodes.size()) throw std::invalid_argument("topology order differs from node count");
  if (auto v = validate_topology(topology_)) throw std::invalid_argument("invalid topology: " + v->message());

  for (const auto& n : scenario.nodes) nodes_.push_back(NodeState{n});
  schedules_.resize(nodes_.size());
  excluded_ = std::make_unique<bool[]>(nodes_.size());
  for (const auto& d : scenario.devices) {
    if (d.tasks.empty()) throw std::invalid_argument("device " + std::to_string(d.id.value) + " has no tasks");
    DeviceState s;
    s.device = d;
    s.device.tasks = prioritize_tasks(d.tasks);
    devices_.push_back(std::move(s));
  }
  generation_.assign(nodes_.size(), std::vector<std::uint32_t>(devices_.size(), 0));

  for (std::size_t i = 0; i < nodes_.size(); ++i) engine_.register_agent(node_ref(NodeId{i}));
  for (std::size_t i = 0; i < devices_.size(); ++i) engine_.register_agent(device_ref(DeviceId{i}));
  engine_.register_agent(central_ref());
  engine_.set_trace(config.trace);
  if (config.load_log) *config.load_log << "time,node-id,load\n";

  if (agent_mode()) {
    for (std::size_t i = 0; i < devices_.size(); ++i)
      engine_.post(0.0, Timer{device_ref(DeviceId{i}), TimerKind::device_start, 0});
  } else {
    for (auto& d : devices_) request_placement(d);
  }

  if (config.events) {
    for (std::size_t i = 0; i < scenario.events.size(); ++i) {
      const auto& e = scenario.events[i];
      if (auto why = validate_event(e, devices_.size(), nodes_.size()); !why.empty())
        throw std::invalid_argument("event " + std::to_string(e.id.value) + ": " + why);
      if (!event_index_.emplace(e.id, i).second)
        throw std::invalid_argument("duplicate event id " + std::to_string(e.id.value));
      engine_.post(e.fire_at, Injection{e.id});
    }
  }
}

std::vector<Node> World::node_list() const {
  std::vector<Node> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.node);
  return out;
}

// --- bookkeeping ---------------------------------------------------------

void World::track(NodeId n, DeviceId d, const Slot& slot, double et) {
  nodes_[n.index()].et[d] = et;
  const auto g = ++generation_[n.index()][d.index()];
  engine_.post(std::max(now(), slot.completion), ExecutionComplete{n, d, g});
  schedule_tick(n);
}

void World::place(NodeId n, DeviceId d, const Slot& slot, double et) {
  schedules_[n.index()].insert(slot);
  track(n, d, slot, et);
}

void World::unplace(NodeId n, DeviceId d) {
  schedules_[n.index()].remove(d);
  nodes_[n.index()].et.erase(d);
  ++generation_[n.index()][d.index()];
}

void World::record_commit(const Contract& c, const BatchSummary& batch) {
  commits_.push_back(CommitRecord{now(), c, batch, nodes_[c.node.index()].node});
  if (observer_) observer_->on_commit(commits_.back());
}

void World::log_transfer(const DeviceState& d, NodeId n) {
  const auto hops = shortest_hops(topology_, d.device.gateway, n);
  transfers_.push_back(Transfer{d.batch().total_data, hops.value_or(0) + 1});
}

void World::schedule_tick(NodeId n) {
  auto& node = nodes_[n.index()];
  if (!agent_mode() || !config_.balancing || !node.active || !node.node.is_fog() || node.tick_scheduled) return;
  const double period = config_.balance_period;
  SimTime next = (std::floor(now() / period) + 1.0) * period;
  if (next <= now()) next = now() + period;
  engine_.post(next, Timer{node_ref(n), TimerKind::balance_tick, 0});
  node.tick_scheduled = true;
}

// --- device agent --------------------------------------------------------

void World::start_negotiation(DeviceState& d, bool probe) {
  d.ranking = rank_nodes(d.device, topology_, scenario_.nodes, excluded());
  // A gateway is listed even when it is gone; that only happens once every
  // fog is disconnected, and then there is nobody to ask.
  std::erase_if(d.ranking, [&](const RankedNode& r) { return excluded_[r.node.index()]; });
  d.cursor = 0;
  d.probing = probe;
  d.phase = Phase::negotiating;
  next_round(d);
}

void World::next_round(DeviceState& d) {
  if (d.cursor >= d.ranking.size()) {
    d.probing = false;
    d.phase = Phase::failed;
    settle(d, Outcome::failed);
    return;
  }
  const std::size_t end = std::min(d.ranking.size(), d.cursor + config_.theta);
  d.round.clear();
  for (std::size_t i = d.cursor; i < end; ++i) d.round.push_back(d.ranking[i].node);
  d.cursor = end;
  send_round(d);
}

void World::send_round(DeviceState& d) {
  d.token = ++next_token_;
  d.pending = d.round;
  d.proposals.clear();
  d.phase = Phase::negotiating;
  const auto batch = d.batch();
  for (auto n : d.round) engine_.send(device_ref(d.device.id), node_ref(n), msg::Request{d.token, batch});
  engine_.post(now() + reply_timeout(), Timer{device_ref(d.device.id), TimerKind::round_timeout, d.token});
}

void World::on_reply(DeviceState& d, NodeId from, std::uint64_t token, const Proposal* proposal) {
  if (d.phase != Phase::negotiating || token != d.token) return;
  auto it = std::find(d.pending.begin(), d.pending.end(), from);
  if (it == d.pending.end()) return;
  d.pending.erase(it);
  if (proposal) d.proposals.push_back(*proposal);
  if (d.pending.empty()) finish_round(d);
}

void World::finish_round(DeviceState& d) {
  d.pending.clear();
  if (d.probing) {
    if (d.contract) {
      const bool started = d.contract->slot.start <= now();
      if (d.proposals.empty() || started ||
          !(select_proposal(d.proposals).completion < d.contract->slot.completion)) {
        keep_contract(d);
        return;
      }
    } else {
      // Evicted while probing: the probe turns into an ordinary negotiation.
      d.probing = false;
    }
  }
  if (d.proposals.empty()) {
    next_round(d);
    return;
  }
  const Proposal winner = select_proposal(d.proposals);
  if (observer_) observer_->on_accept(d.device.id, winner, d.token);
  for (const auto& p : d.proposals) {
    if (p.node != winner.node) engine_.send(device_ref(d.device.id), node_ref(p.node), msg::Reject{d.token});
  }
  d.phase = Phase::accepting;
  engine_.send(device_ref(d.device.id), node_ref(winner.node), msg::Accept{d.token, d.batch(), winner});
  engine_.post(now() + reply_timeout(), Timer{device_ref(d.device.id), TimerKind::accept_timeout, d.token});
}

void World::on_confirm(DeviceState& d, NodeId from, const msg::Confirm& m) {
  if (d.phase != Phase::accepting || m.token != d.token) {
    // Reservation nobody is waiting for any more.
    const Slot* held = schedules_[from.index()].find(d.device.id);
    if (held && *held == m.contract.slot) unplace(from, d.device.id);
    return;
  }
  if (d.probing && d.contract && d.contract->node != from) {
    if (d.contract->slot.start <= now()) {
      unplace(from, d.device.id);
      keep_contract(d);
      return;
    }
    unplace(d.contract->node, d.device.id);
  }
  d.contract = m.contract;
  d.phase = Phase::contracted;
  d.probing = false;
  log_transfer(d, from);
  settle(d, Outcome::new_contract);
}

void World::retry_round(DeviceState& d, std::uint64_t token) {
  if (d.phase != Phase::accepting || token != d.token) return;
  // A retry re-prices against current schedules, so it can only go stale
  // again if someone else committed meanwhile. Anything else is a livelock.
  d.stale_streak = commits_.size() == d.stale_commits ? d.stale_streak + 1 : 1;
  d.stale_commits = commits_.size();
  if (d.stale_streak > 3)
    throw SimulationError("device " + std::to_string(d.device.id.value) + " keeps receiving stale answers");
  send_round(d);
}

void World::keep_contract(DeviceState& d) {
  d.probing = false;
  d.phase = Phase::contracted;
  settle(d, Outcome::kept_node);
}

void World::settle(DeviceState& d, Outcome outcome) {
  auto waiting = std::move(d.waiting_records);
  d.waiting_records.clear();
  for (auto r : waiting) resolve_part(r, outcome);
  drain_deferred(d);
}

void World::drain_deferred(DeviceState& d) {
  while (!d.busy() && !d.deferred.empty()) {
    auto [record, event] = d.deferred.front();
    d.deferred.pop_front();
    apply_device_event(d, record, scenario_.events[event]);
  }
}

// --- node agent ----------------------------------------------------------

void World::on_request(NodeState& n, DeviceId d, const msg::Request& m) {
  RequestOptions options;
  options.horizon = config_.slot_horizon;
  // Earliest start is when the accept can arrive, summed hop by hop exactly
  // as the engine stamps deliveries so the commit-time check sees the same
  // value.
  const double latency = config_.control_latency;
  const SimTime accept_arrives = (now() + latency) + latency;
  if (observer_) observer_->on_quote(n.node.id, m.batch, schedules_[n.node.id.index()], accept_arrives, m.token);
  const auto answer = handle_request(n.node, schedules_[n.node.id.index()], m.batch, accept_arrives, options);
  if (const auto* p = std::get_if<Proposal>(&answer)) {
    engine_.send(node_ref(n.node.id), device_ref(d), msg::Propose{m.token, *p});
  } else {
    engine_.send(node_ref(n.node.id), device_ref(d), msg::Refuse{m.token});
  }
}

void World::on_accept(NodeState& n, DeviceId d, const msg::Accept& m) {
  auto& schedule = schedules_[n.node.id.index()];
  std::optional<Contract> contract;
  // The quote is honoured only if it is still exactly what this node would
  // charge now; a capability change in between makes it stale.
  if (check_ram(n.node, m.batch) && estimate_et(m.batch, n.node) == m.proposal.et) {
    // A probe can pick the node that already hosts the device; the earlier
    // window then replaces the held one, provided that has not started.
    const Slot* held = schedule.find(d);
    std::optional<std::pair<Slot, double>> replaced;
    if (held && held->start > now() && schedule.fits_except(m.proposal.start, m.proposal.completion, d)) {
      replaced.emplace(*held, n.et.at(d));
      unplace(n.node.id, d);
    }
    contract = commit(schedule, m.proposal, d, now());
    if (!contract && replaced) place(n.node.id, d, replaced->first, replaced->second);
  }
  if (!contract) {
    engine_.send(node_ref(n.node.id), device_ref(d), msg::Stale{m.token});
    return;
  }
  track(n.node.id, d, contract->slot, contract->et);
  record_commit(*contract, m.batch);
  engine_.send(node_ref(n.node.id), device_ref(d), msg::Confirm{m.token, *contract});
}

void World::on_complete(const ExecutionComplete& c) {
  if (generation_[c.node.index()][c.device.index()] != c.generation) return;
  const Slot* slot = schedules_[c.node.index()].find(c.device);
  if (!slot) return;
  auto& d = devices_[c.device.index()];
  d.executed_slot = *slot;
  d.executed_on = c.node;
  d.succeeded = static_cast<std::size_t>(std::count_if(
      d.device.tasks.begin(), d.device.tasks.end(), [&](const Task& t) { return slot->completion <= t.deadline; }));
  d.phase = Phase::executed;
  d.probing = false;
  d.contract.reset();
  settle(d, Outcome::kept_node);
}

void World::on_tick(NodeState& n) {
  n.tick_scheduled = false;
  if (!n.active) return;
  const auto& schedule = schedules_[n.node.id.index()];
  const auto& slots = schedule.slots();
  const bool unfinished = std::any_of(slots.begin(), slots.end(), [&](const Slot& s) { return s.completion > now(); });
  if (!unfinished && n.in_transit.empty()) return;
  if (config_.load_log) {
    *config_.load_log << format_number(now()) << ',' << n.node.id.value << ','
                      << format_number(compute_load(slots, now()).load) << '\n';
  }
  schedule_tick(n.node.id);
  if (n.balancing) return;
  if (std::none_of(slots.begin(), slots.end(), [&](const Slot& s) { return s.start > now(); })) return;

  n.awaiting.clear();
  n.reports.clear();
  for (auto nb : topology_.neighbors(n.node.id)) {
    const auto& other = nodes_[nb.index()];
    if (other.node.is_fog() && other.active) n.awaiting.push_back(nb);
  }
  if (n.awaiting.empty()) return;
  n.balancing = true;
  ++n.balance_round;
  const auto awaiting = n.awaiting;
  for (auto nb : awaiting) {
    if (!engine_.send(node_ref(n.node.id), node_ref(nb), msg::LoadQuery{n.balance_round}))
      std::erase(n.awaiting, nb);
  }
  engine_.post(now() + reply_timeout(), Timer{node_ref(n.node.id), TimerKind::balance_timeout, n.balance_round});
  if (n.awaiting.empty()) finish_balance(n);
}

void World::on_load_query(NodeState& n, NodeId from, const msg::LoadQuery& m) {
  const auto& slots = schedules_[n.node.id.index()].slots();
  const double load = compute_load(slots, now()).load;
  engine_.send(node_ref(n.node.id), node_ref(from),
               msg::LoadReport{m.round, load, n.node, std::vector<Slot>(slots.begin(), slots.end())});
}

void World::on_load_report(NodeState& n, NodeId from, const msg::LoadReport& m) {
  if (!n.balancing || m.round != n.balance_round) return;
  auto it = std::find(n.awaiting.begin(), n.awaiting.end(), from);
  if (it == n.awaiting.end()) return;
  n.awaiting.erase(it);
  n.reports.push_back(NeighborState{m.node, m.load, m.schedule});
  if (n.awaiting.empty()) finish_balance(n);
}

void World::finish_balance(NodeState& n) {
  n.balancing = false;
  n.awaiting.clear();
  if (!n.active || n.reports.empty()) return;
  std::sort(n.reports.begin(), n.reports.end(),
            [](const NeighborState& a, const NeighborState& b) { return a.node.id < b.node.id; });

  const NodeId self = n.node.id;
  std::unordered_map<DeviceId, BatchSummary> batches;
  for (const auto& s : schedules_[self.index()].slots()) {
    if (s.start <= now()) continue;
    const auto& d = devices_[s.device.index()];
    if (d.phase == Phase::contracted && !d.busy()) batches.emplace(s.device, d.batch());
  }
  const BatchLookup lookup = [&](DeviceId id) -> const BatchSummary* {
    auto it = batches.find(id);
    return it == batches.end() ? nullptr : &it->second;
  };
  BalanceOptions options;
  options.delta = config_.delta;
  options.earliest_target_start = now() + config_.control_latency;
  const auto plan = balance_step(n.node, schedules_[self.index()], lookup, n.reports, now(), options);
  n.reports.clear();

  for (const auto& m : plan) {
    auto& d = devices_[m.device.index()];
    const double old_et = n.et[m.device];
    unplace(self, m.device);
    d.migrating = true;
    n.in_transit[m.device] = InTransit{m.old_slot, old_et, m.target};
    const bool sent = engine_.send(node_ref(self), node_ref(m.target),
                                   msg::MigrationRequest{n.balance_round, d.batch(), m.window, m.et});
    if (!sent) {
      restore(n, m.device);
      continue;
    }
    engine_.post(now() + reply_timeout(), Timer{node_ref(self), TimerKind::migration_timeout, m.device.value});
  }
}

void World::on_migration_request(NodeState& n, NodeId from, const msg::MigrationRequest& m) {
  const DeviceId id = m.batch.device;
  auto& d = devices_[id.index()];
  const auto& schedule = schedules_[n.node.id.index()];
  const bool ok = d.migrating && d.contract && d.contract->node == from && d.batch() == m.batch &&
                  check_ram(n.node, m.batch) && estimate_et(m.batch, n.node) == m.et && m.window.start >= now() &&
                  !schedule.find(id) && schedule.fits(m.window.start, m.window.completion);
  if (!ok) {
    engine_.send(node_ref(n.node.id), node_ref(from), msg::MigrationRefused{id});
    return;
  }
  const Slot slot{id, m.window.start, m.window.completion};
  place(n.node.id, id, slot, m.et);
  const Contract contract{id, n.node.id, slot, m.et};
  record_commit(contract, m.batch);
  d.contract = contract;
  d.migrating = false;
  ++migrations_;
  const auto hops = shortest_hops(topology_, from, n.node.id);
  transfers_.push_back(Transfer{m.batch.total_data, hops.value_or(0)});
  engine_.send(node_ref(n.node.id), node_ref(from), msg::MigrationAccepted{id});
  drain_deferred(d);
}

void World::restore(NodeState& n, DeviceId device) {
  auto it = n.in_transit.find(device);
  if (it == n.in_transit.end()) return;
  const InTransit transit = it->second;
  n.in_transit.erase(it);
  auto& d = devices_[device.index()];
  if (!d.migrating || !d.contract || d.contract->node != n.node.id) return;
  d.migrating = false;

  auto& schedule = schedules_[n.node.id.index()];
  Slot slot = transit.old_slot;
  if (!(slot.start >= now() && schedule.fits(slot.start, slot.completion))) {
    const auto gap = schedule.find_slot(transit.et, now(), config_.slot_horizon);
    if (!gap) {
      evict(n, device, std::nullopt);
      return;
    }
    slot = Slot{device, gap->start, gap->completion};
  }
  place(n.node.id, device, slot, transit.et);
  d.contract->slot = slot;
  drain_deferred(d);
}

// --- central planner -----------------------------------------------------

void World::request_placement(DeviceState& d) {
  d.phase = Phase::negotiating;
  replan_queue_.push_back(d.device.id);
  if (!replan_posted_) {
    engine_.post(now() + 2.0 * config_.control_latency, Timer{central_ref(), TimerKind::central_replan, 0});
    replan_posted_ = true;
  }
}

void World::central_replan() {
  replan_posted_ = false;
  auto queue = std::move(replan_queue_);
  replan_queue_.clear();
  std::vector<BatchSummary> batches;
  for (auto id : queue) batches.push_back(devices_[id.index()].batch());

  const auto nodes = node_list();
  PlanningContext ctx{nodes, schedules_, now(), excluded()};
  const auto started = Clock::now();
  AssignmentPlan plan;
  switch (config_.scheduler) {
    case SchedulerKind::round_robin: plan = round_robin(batches, ctx); break;
    case SchedulerKind::min_min: plan = min_min(batches, ctx); break;
    case SchedulerKind::geo_aware: plan = geo_aware(batches, ctx, config_.theta); break;
    case SchedulerKind::agent: throw std::logic_error("central planner invoked in agent mode");
  }
  decision_us_ += std::chrono::duration<double, std::micro>(Clock::now() - started).count();

  for (const auto& b : plan.bindings) {
    auto& d = devices_[b.device.index()];
    const Slot slot{b.device, b.start, b.completion};
    track(b.node, b.device, slot, b.et);
    const Contract contract{b.device, b.node, slot, b.et};
    record_commit(contract, d.batch());
    d.contract = contract;
    d.phase = Phase::contracted;
    log_transfer(d, b.node);
    settle(d, Outcome::new_contract);
  }
  for (auto id : plan.failed) {
    auto& d = devices_[id.index()];
    d.phase = Phase::failed;
    settle(d, Outcome::failed);
  }
}

// --- uncertain events ----------------------------------------------------

std::size_t World::open_record(const UncertainEvent& e) {
  OpenRecord r;
  r.record.event = e.id;
  r.record.kind = e.kind;
  r.record.started = now();
  records_.push_back(r);
  return records_.size() - 1;
}

void World::add_part(std::size_t record, DeviceState& d) {
  ++records_[record].remaining;
  d.waiting_records.push_back(record);
}

void World::resolve_part(std::size_t record, Outcome outcome) {
  auto& r = records_[record];
  if (outcome == Outcome::failed) r.any_failed = true;
  if (outcome == Outcome::new_contract) r.any_new = true;
  if (r.remaining > 0 && --r.remaining == 0) {
    finish_record(record, r.any_failed ? Outcome::failed : r.any_new ? Outcome::new_contract : Outcome::kept_node);
  }
}

void World::finish_record(std::size_t record, Outcome outcome) {
  auto& r = records_[record].record;
  if (r.resolved) return;
  r.resolved = now();
  r.outcome = outcome;
}

void World::noop(std::size_t record) {
  ++warnings_;
  finish_record(record, Outcome::kept_node);
}

void World::inject(EventId id) {
  const std::size_t index = event_index_.at(id);
  const auto& e = scenario_.events[index];
  const std::size_t record = open_record(e);
  if (const auto* device = std::get_if<DeviceId>(&e.target)) {
    auto& d = devices_[device->index()];
    if (d.busy()) {
      d.deferred.emplace_back(record, index);
      return;
    }
    apply_device_event(d, record, e);
    return;
  }
  auto& n = nodes_[std::get<NodeId>(e.target).index()];
  if (const auto* c = std::get_if<CapabilityChange>(&e.delta)) {
    apply_capability(n, record, *c);
  } else {
    apply_disconnection(n, record);
  }
}

void World::renegotiate(DeviceState& d, std::size_t record) {
  add_part(record, d);
  if (agent_mode()) {
    start_negotiation(d, false);
  } else {
    request_placement(d);
  }
}

void World::evict(NodeState& n, DeviceId device, std::optional<std::size_t> record) {
  auto& d = devices_[device.index()];
  if (schedules_[n.node.id.index()].find(device)) unplace(n.node.id, device);
  d.contract.reset();
  d.migrating = false;
  if (d.probing) {
    // The running probe continues as a full negotiation.
    if (record) add_part(*record, d);
    return;
  }
  if (record) {
    renegotiate(d, *record);
  } else if (agent_mode()) {
    start_negotiation(d, false);
  } else {
    request_placement(d);
  }
}

void World::apply_device_event(DeviceState& d, std::size_t record, const UncertainEvent& e) {
  if (d.phase == Phase::executed || d.phase == Phase::cancelled) {
    noop(record);
    return;
  }
  auto& tasks = d.device.tasks;

  if (const auto* c = std::get_if<Cancellation>(&e.delta)) {
    std::size_t removed = 0;
    for (auto id : c->tasks) {
      auto it = std::find_if(tasks.begin(), tasks.end(), [&](const Task& t) { return t.id == id; });
      if (it == tasks.end()) continue;
      tasks.erase(it);
      ++removed;
    }
    if (removed == 0) {
      noop(record);
      return;
    }
    d.cancelled += removed;
    if (tasks.empty()) {
      if (d.contract) unplace(d.contract->node, d.device.id);
      d.contract.reset();
      d.phase = Phase::cancelled;
      finish_record(record, Outcome::cancelled);
      settle(d, Outcome::kept_node);
      return;
    } else if (d.contract) {
      const NodeId n = d.contract->node;
      const Slot old = *schedules_[n.index()].find(d.device.id);
      const auto shrunk = shrink_slot(old, d.batch(), nodes_[n.index()].node);
      // A location change since the contract can make the estimate grow;
      // the slot is then left as it is.
      if (shrunk.completion < old.completion) {
        const double et = estimate_et(d.batch(), nodes_[n.index()].node);
        unplace(n, d.device.id);
        place(n, d.device.id, shrunk, et);
        d.contract->slot = shrunk;
        d.contract->et = et;
        record_commit(*d.contract, d.batch());
      }
    }
    finish_record(record, Outcome::cancelled);
    return;
  }

  if (const auto* c = std::get_if<TaskChange>(&e.delta)) {
    auto it = std::find_if(tasks.begin(), tasks.end(), [&](const Task& t) { return t.id == c->updated.id; });
    if (it == tasks.end()) {
      noop(record);
      return;
    }
    *it = c->updated;
    tasks = prioritize_tasks(std::move(tasks));
  } else if (const auto* c = std::get_if<LocationChange>(&e.delta)) {
    d.device.location = c->location;
    reassign_gateway(d);
  }

  if (d.phase == Phase::waiting) {
    // Not yet started: the first negotiation already sees the new values.
    add_part(record, d);
    return;
  }
  if (!d.contract) {
    renegotiate(d, record);
    return;
  }

  const NodeId n = d.contract->node;
  auto& node = nodes_[n.index()];
  const Slot current = *schedules_[n.index()].find(d.device.id);
  const auto batch = d.batch();

  if (e.kind == EventKind::location_change) {
    if (current.start <= now()) {
      finish_record(record, Outcome::kept_node);
    } else if (agent_mode()) {
      add_part(record, d);
      start_negotiation(d, true);
    } else {
      unplace(n, d.device.id);
      d.contract.reset();
      renegotiate(d, record);
    }
    return;
  }

  // Task change: the contracted node re-evaluates the batch first. A batch
  // already executing can only be extended where it stands.
  std::optional<Slot> rewritten;
  double et = 0.0;
  if (current.start <= now()) {
    if (check_ram(node.node, batch)) {
      et = estimate_et(batch, node.node);
      const Slot candidate{d.device.id, current.start, current.start + et};
      if (schedules_[n.index()].fits_except(candidate.start, candidate.completion, d.device.id)) rewritten = candidate;
    }
  } else if (agent_mode()) {
    if (auto r = reevaluate_batch(node.node, schedules_[n.index()], batch, now(), config_.slot_horizon)) {
      rewritten = Slot{d.device.id, r->window.start, r->window.completion};
      et = r->et;
    }
  }
  unplace(n, d.device.id);
  if (rewritten) {
    place(n, d.device.id, *rewritten, et);
    d.contract = Contract{d.device.id, n, *rewritten, et};
    record_commit(*d.contract, batch);
    finish_record(record, Outcome::kept_node);
    return;
  }
  d.contract.reset();
  renegotiate(d, record);
}

void World::apply_capability(NodeState& n, std::size_t record, const CapabilityChange& c) {
  if (!n.active) {
    noop(record);
    return;
  }
  n.node.ram = c.ram;
  n.node.bandwidth = c.bandwidth;
  n.node.cpu_rate = c.cpu_rate;
  const NodeId id = n.node.id;

  std::unordered_map<DeviceId, BatchSummary> batches;
  for (const auto& s : schedules_[id.index()].slots()) batches.emplace(s.device, devices_[s.device.index()].batch());
  const BatchLookup lookup = [&](DeviceId d) -> const BatchSummary* {
    auto it = batches.find(d);
    return it == batches.end() ? nullptr : &it->second;
  };
  const auto resolution = repack_after_capability_change(schedules_[id.index()], n.node, lookup, now());

  for (const auto& k : resolution.kept) {
    const Slot* old = schedules_[id.index()].find(k.slot.device);
    if (*old == k.slot && n.et[k.slot.device] == k.et) continue;
    unplace(id, k.slot.device);
  }
  for (auto d : resolution.evicted) unplace(id, d);
  for (const auto& k : resolution.kept) {
    if (schedules_[id.index()].find(k.slot.device)) continue;
    place(id, k.slot.device, k.slot, k.et);
    auto& d = devices_[k.slot.device.index()];
    d.contract->slot = k.slot;
    d.contract->et = k.et;
    record_commit(*d.contract, d.batch());
  }
  if (resolution.evicted.empty()) {
    finish_record(record, Outcome::kept_node);
    return;
  }
  for (auto d : resolution.evicted) evict(n, d, record);
}

void World::apply_disconnection(NodeState& n, std::size_t record) {
  if (!n.active) {
    noop(record);
    return;
  }
  const NodeId id = n.node.id;
  n.active = false;
  excluded_[id.index()] = true;
  engine_.set_reachable(node_ref(id).id, false);
  topology_.isolate(id);
  n.balancing = false;
  n.awaiting.clear();

  for (auto& d : devices_) {
    if (d.device.gateway == id && d.phase != Phase::executed && d.phase != Phase::cancelled) reassign_gateway(d);
  }

  std::vector<DeviceId> affected;
  for (const auto& s : schedules_[id.index()].slots()) {
    if (s.completion > now()) affected.push_back(s.device);
  }
  for (const auto& [device, transit] : n.in_transit) {
    const auto& d = devices_[device.index()];
    if (d.migrating && d.contract && d.contract->node == id) affected.push_back(device);
  }
  n.in_transit.clear();

  if (affected.empty()) {
    finish_record(record, Outcome::kept_node);
    return;
  }
  for (auto d : affected) evict(n, d, record);
}

void World::reassign_gateway(DeviceState& d) {
  // With every fog gone the old gateway is kept; negotiations then fail.
  const bool any_fog = std::any_of(nodes_.begin(), nodes_.end(),
                                   [](const NodeState& n) { return n.active && n.node.is_fog(); });
  if (any_fog) d.device.gateway = nearest_fog(d.device.location, scenario_.nodes, excluded());
}

// --- invariants ----------------------------------------------------------

void World::check_invariants() {
  std::vector<int> seen(devices_.size(), 0);
  for (std::size_t n = 0; n < schedules_.size(); ++n) {
    if (!schedules_[n].well_formed()) {
      violations_.push_back("t=" + format_number(now()) + ": schedule of node " + std::to_string(n) +
                            " overlaps or is unsorted");
    }
    for (const auto& s : schedules_[n].slots()) ++seen[s.device.index()];
  }
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    const auto& d = devices_[i];
    // While switching (probe or migration) the new reservation exists before
    // the old one is released; the device stays bound to its contract node.
    const bool switching = d.contract && (d.migrating || (d.probing && d.phase == Phase::accepting));
    if (seen[i] > (switching ? 2 : 1)) {
      violations_.push_back("t=" + format_number(now()) + ": device " + std::to_string(i) + " holds " +
                            std::to_string(seen[i]) + " slots");
    }
    if (d.contract && !switching) {
      const Slot* s = schedules_[d.contract->node.index()].find(d.device.id);
      if (!s || !(*s == d.contract->slot)) {
        violations_.push_back("t=" + format_number(now()) + ": contract of device " + std::to_string(i) +
                              " does not match its node schedule");
      }
    }
  }
}

// --- dispatch ------------------------------------------------------------

void World::dispatch(const SimEvent& event) {
  const auto started = Clock::now();
  bool decision = false;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MessageDelivery>) {
          decision = true;
          if (p.to.role == AgentRole::node_agent) {
            auto& n = node_of(p.to);
            const NodeId from_node{p.from.id.value};
            std::visit(
                [&](const auto& m) {
                  using M = std::decay_t<decltype(m)>;
                  const DeviceId from_device{static_cast<std::uint32_t>(p.from.id.index() - nodes_.size())};
                  if constexpr (std::is_same_v<M, msg::Request>) on_request(n, from_device, m);
                  else if constexpr (std::is_same_v<M, msg::Accept>) on_accept(n, from_device, m);
                  else if constexpr (std::is_same_v<M, msg::Reject>) {}
                  else if constexpr (std::is_same_v<M, msg::LoadQuery>) on_load_query(n, from_node, m);
                  else if constexpr (std::is_same_v<M, msg::LoadReport>) on_load_report(n, from_node, m);
                  else if constexpr (std::is_same_v<M, msg::MigrationRequest>) on_migration_request(n, from_node, m);
                  else if constexpr (std::is_same_v<M, msg::MigrationAccepted>) n.in_transit.erase(m.device);
                  else if constexpr (std::is_same_v<M, msg::MigrationRefused>) restore(n, m.device);
                  else throw std::logic_error(std::string("node agent cannot handle ") + message_name(p.message));
                },
                p.message);
          } else {
            auto& d = device_of(p.to);
            const NodeId from{p.from.id.value};
            std::visit(
                [&](const auto& m) {
                  using M = std::decay_t<decltype(m)>;
                  if constexpr (std::is_same_v<M, msg::Propose>) on_reply(d, from, m.token, &m.proposal);
                  else if constexpr (std::is_same_v<M, msg::Refuse>) on_reply(d, from, m.token, nullptr);
                  else if constexpr (std::is_same_v<M, msg::Confirm>) on_confirm(d, from, m);
                  else if constexpr (std::is_same_v<M, msg::Stale>) retry_round(d, m.token);
                  else throw std::logic_error(std::string("device agent cannot handle ") + message_name(p.message));
                },
                p.message);
          }
        } else if constexpr (std::is_same_v<T, Timer>) {
          switch (p.kind) {
            case TimerKind::device_start: {
              decision = true;
              auto& d = device_of(p.agent);
              if (d.phase == Phase::waiting) start_negotiation(d, false);
              break;
            }
            case TimerKind::round_timeout: {
              decision = true;
              auto& d = device_of(p.agent);
              if (d.phase == Phase::negotiating && p.token == d.token) finish_round(d);
              break;
            }
            case TimerKind::accept_timeout:
              decision = true;
              retry_round(device_of(p.agent), p.token);
              break;
            case TimerKind::balance_tick:
              decision = true;
              on_tick(node_of(p.agent));
              break;
            case TimerKind::balance_timeout: {
              decision = true;
              auto& n = node_of(p.agent);
              if (n.balancing && p.token == n.balance_round) finish_balance(n);
              break;
            }
            case TimerKind::migration_timeout: {
              decision = true;
              auto& n = node_of(p.agent);
              if (n.active) restore(n, DeviceId{static_cast<std::uint32_t>(p.token)});
              break;
            }
            case TimerKind::central_replan:
              central_replan();
              break;
          }
        } else if constexpr (std::is_same_v<T, Injection>) {
          inject(p.event);
        } else {
          on_complete(p);
        }
      },
      event.payload);
  if (decision) decision_us_ += std::chrono::duration<double, std::micro>(Clock::now() - started).count();
  if (config_.check_invariants) check_invariants();
}

RunResult World::run() {
  engine_.run(*this);

  RunResult out;
  std::vector<double> completions;
  std::size_t succeeded = 0;
  std::size_t total = 0;
  std::size_t failed_devices = 0;
  for (const auto& d : devices_) {
    if (d.phase != Phase::executed && d.phase != Phase::failed && d.phase != Phase::cancelled) {
      throw SimulationError("device " + std::to_string(d.device.id.value) + " was left unsettled");
    }
    DeviceOutcome o;
    o.device = d.device.id;
    o.node = d.executed_on;
    o.slot = d.executed_slot;
    o.executed = d.phase == Phase::executed;
    o.total_tasks = d.device.tasks.size();
    o.cancelled_tasks = d.cancelled;
    o.succeeded_tasks = o.executed ? d.succeeded : 0;
    if (o.executed) completions.push_back(d.executed_slot->completion);
    if (d.phase == Phase::failed) ++failed_devices;
    succeeded += o.succeeded_tasks;
    total += o.total_tasks + (config_.include_cancelled_in_total ? o.cancelled_tasks : 0);
    out.devices.push_back(o);
  }

  out.nodes = node_list();
  out.schedules = schedules_;
  out.topology = topology_;
  for (const auto& r : records_) {
    if (!r.record.resolved) throw SimulationError("event " + std::to_string(r.record.event.value) + " unresolved");
    out.records.push_back(r.record);
  }
  out.commits = std::move(commits_);
  out.transfers = std::move(transfers_);
  out.violations = std::move(violations_);
  out.end_time = engine_.now();
  out.messages = engine_.messages_sent();
  out.dead_letters = engine_.dead_letters();

  auto& m = out.metrics;
  m.makespan = makespan(completions);
  const auto loads = fog_loads(out.nodes, out.schedules);
  m.fog_load_variance = load_variance(loads);
  m.network_usage = network_usage(out.transfers);
  m.success_rate = success_rate(succeeded, total);
  m.mean_response_time = mean_response_time(out.records);
  m.decision_us = decision_us_;
  m.succeeded_tasks = succeeded;
  m.total_tasks = total;
  m.failed_devices = failed_devices;
  m.event_warnings = warnings_;
  m.migrations = migrations_;
  return out;
}

}  // namespace

RunResult simulate(const Scenario& scenario, const SimConfig& config, SimObserver* observer) {
  World world(scenario, config, observer);
  return world.run();
}

}  // namespace fogsim
