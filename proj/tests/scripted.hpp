#pragma once

// Hand-built micro-scenarios with exact expected outcomes, plus the
// whole-run soundness and oracle checks. Each check returns the list of
// mismatches so both the unit suite and the acceptance gate can report them.

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fogsim/simulation.hpp"
#include "support.hpp"

namespace fogsim::testing {

struct Findings {
  std::vector<std::string> failures;

  template <class A, class B>
  void equal(const std::string& what, const A& got, const B& want) {
    if (!(got == want)) {
      std::ostringstream os;
      os << what << ": got " << show(got) << ", want " << show(want);
      failures.push_back(os.str());
    }
  }
  void near(const std::string& what, double got, double want, double rel = 1e-9) {
    if (!close(got, want, rel)) equal(what, got, want);
  }
  void require(const std::string& what, bool ok) {
    if (!ok) failures.push_back(what);
  }
  void merge(const std::string& prefix, const Findings& other) {
    for (const auto& f : other.failures) failures.push_back(prefix + ": " + f);
  }
  bool ok() const { return failures.empty(); }

 private:
  template <class T>
  static std::string show(const T& v) {
    std::ostringstream os;
    if constexpr (std::is_same_v<T, Slot>) {
      os << "[" << v.device << ": " << v.start << ", " << v.completion << ")";
    } else if constexpr (std::is_same_v<T, Schedule>) {
      os << "{";
      for (const auto& s : v.slots()) os << " " << show(s);
      os << " }";
    } else if constexpr (std::is_same_v<T, Outcome>) {
      os << to_string(v);
    } else if constexpr (std::is_same_v<T, std::optional<NodeId>>) {
      if (v) os << "node " << *v;
      else os << "none";
    } else if constexpr (requires { os << v; }) {
      os << v;
    } else {
      os << "<value>";
    }
    return os.str();
  }
};

inline SimConfig scripted_config(std::size_t theta) {
  SimConfig c;
  c.theta = theta;
  c.balancing = false;
  c.events = true;
  c.check_invariants = true;
  return c;
}

inline Schedule make_schedule(std::initializer_list<Slot> slots) {
  Schedule s;
  for (const auto& x : slots) s.insert(x);
  return s;
}

/// Every final slot is traceable to the commit that priced it, schedules are
/// disjoint, each device holds at most one slot, and the metrics agree with
/// the final state.
inline Findings soundness(const Scenario& scenario, const RunResult& r) {
  Findings f;
  for (const auto& v : r.violations) f.failures.push_back("invariant: " + v);

  std::map<DeviceId, const CommitRecord*> last;
  for (const auto& c : r.commits) {
    last[c.contract.device] = &c;
    if (!close(c.contract.slot.length(), estimate_et(c.batch, c.node), 1e-9))
      f.failures.push_back("commit for device " + std::to_string(c.contract.device.value) +
                           " has a slot that differs from its estimate");
  }

  std::vector<int> held(scenario.devices.size(), 0);
  double latest = 0.0;
  for (std::size_t n = 0; n < r.schedules.size(); ++n) {
    const auto& s = r.schedules[n];
    if (!s.well_formed()) f.failures.push_back("schedule of node " + std::to_string(n) + " overlaps");
    for (const auto& slot : s.slots()) {
      ++held[slot.device.index()];
      auto it = last.find(slot.device);
      if (it == last.end()) {
        f.failures.push_back("slot of device " + std::to_string(slot.device.value) + " was never committed");
        continue;
      }
      f.equal("node of device " + std::to_string(slot.device.value), it->second->contract.node, NodeId(n));
      f.equal("last committed slot of device " + std::to_string(slot.device.value), it->second->contract.slot, slot);
    }
  }
  std::size_t succeeded = 0;
  for (const auto& d : r.devices) {
    const int h = held[d.device.index()];
    if (h > 1) f.failures.push_back("device " + std::to_string(d.device.value) + " holds several slots");
    if (d.executed) {
      if (h != 1 || !d.node || !d.slot || !r.schedules[d.node->index()].find(d.device) ||
          !(*r.schedules[d.node->index()].find(d.device) == *d.slot)) {
        f.failures.push_back("executed device " + std::to_string(d.device.value) + " has no matching slot");
      } else {
        latest = std::max(latest, d.slot->completion);
      }
    } else if (h != 0) {
      f.failures.push_back("unexecuted device " + std::to_string(d.device.value) + " still holds a slot");
    }
    succeeded += d.succeeded_tasks;
  }
  f.equal("makespan", r.metrics.makespan, latest);
  f.equal("succeeded tasks", r.metrics.succeeded_tasks, succeeded);
  for (const auto& rec : r.records) f.require("record resolved", rec.resolved && *rec.resolved >= rec.started);
  return f;
}

// --- oracle for θ = node count --------------------------------------------

/// Independent re-derivation of the winning node: every node is priced from
/// the schedule it quoted against, with its own gap search and BFS.
class OracleObserver : public SimObserver {
 public:
  OracleObserver(const Scenario& s) : scenario_(s) {}

  void on_quote(NodeId node, const BatchSummary& batch, const Schedule& schedule, SimTime earliest,
                std::uint64_t token) override {
    quotes_[token].push_back(Quote{node, batch, schedule, earliest});
  }

  void on_accept(DeviceId device, const Proposal& winner, std::uint64_t token) override {
    const auto& qs = quotes_[token];
    ++checked;
    if (qs.size() != scenario_.nodes.size()) {
      findings.failures.push_back("device " + std::to_string(device.value) + " contacted " +
                                  std::to_string(qs.size()) + " nodes");
      return;
    }
    const auto& dev = scenario_.devices[device.index()];
    const auto depth = bfs(dev.gateway);
    struct Best {
      double completion;
      int depth;
      std::uint32_t node;
    };
    std::optional<Best> best;
    for (const auto& q : qs) {
      const Node& n = scenario_.nodes[q.node.index()];
      if (q.batch.max_ram > n.ram) continue;
      const double dx = q.batch.location.x - n.location.x, dy = q.batch.location.y - n.location.y;
      const double et = std::sqrt(dx * dx + dy * dy) * (8.0 * q.batch.total_data / n.bandwidth) +
                        q.batch.total_length / n.cpu_rate;
      double start = q.earliest;
      for (const auto& s : q.schedule.slots()) {
        if (s.completion <= start) continue;
        if (s.start >= start + et) break;
        start = s.completion;
      }
      const Best b{start + et, depth[q.node.index()], q.node.value};
      if (!best || std::tie(b.completion, b.depth, b.node) < std::tie(best->completion, best->depth, best->node))
        best = b;
    }
    if (!best) {
      findings.failures.push_back("device " + std::to_string(device.value) + " accepted with no feasible node");
      return;
    }
    if (winner.node.value != best->node) {
      std::ostringstream os;
      os << "device " << device << " chose node " << winner.node << " (CT " << winner.completion << "), oracle node "
         << best->node << " (CT " << best->completion << ")";
      findings.failures.push_back(os.str());
    }
  }

  Findings findings;
  std::size_t checked = 0;

 private:
  struct Quote {
    NodeId node;
    BatchSummary batch;
    Schedule schedule;
    SimTime earliest;
  };

  std::vector<int> bfs(NodeId from) const {
    const std::size_t p = scenario_.nodes.size();
    std::vector<int> d(p, -1);
    std::deque<std::size_t> q{from.index()};
    d[from.index()] = 0;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop_front();
      for (std::size_t v = 0; v < p; ++v) {
        if (scenario_.topology.at(u, v) && d[v] < 0) {
          d[v] = d[u] + 1;
          q.push_back(v);
        }
      }
    }
    return d;
  }

  const Scenario& scenario_;
  std::map<std::uint64_t, std::vector<Quote>> quotes_;
};

// --- micro-scenarios --------------------------------------------------------

struct MicroResult {
  std::string name;
  Findings findings;
};

namespace micro {

inline UncertainEvent event(std::uint32_t id, double at, EventKind kind, EventTarget target, EventDelta delta) {
  return UncertainEvent{EventId(id), at, kind, target, std::move(delta)};
}

// fog0 at the origin, fog1 far away, linked. d0, d1 next to fog0, d2 next to
// fog1. Every batch is one task of 10000 MI and 0.1 GB: 10 s on a co-located
// fog, 210 s across the gap.
inline Scenario two_sites(double fog0_ram = 8.0) {
  Topology t(2);
  t.connect(NodeId(0), NodeId(1));
  return assemble({fog(0, {0, 0}, fog0_ram, 4, 1000), fog(1, {1000, 0}, 8, 4, 1000)},
                  {device(0, {0, 0}, 0, {task(0, 1, 0.1, 10000, 1000)}),
                   device(1, {0, 0}, 0, {task(1, 1, 0.1, 10000, 1000)}),
                   device(2, {1000, 0}, 1, {task(2, 1, 0.1, 10000, 1000)})},
                  t);
}

inline Findings untouched(const RunResult& with, const RunResult& without, std::initializer_list<std::size_t> nodes) {
  Findings f;
  for (auto n : nodes)
    f.equal("schedule of uninvolved node " + std::to_string(n), with.schedules[n], without.schedules[n]);
  return f;
}

inline Findings single_record(const RunResult& r, Outcome outcome, SimTime at) {
  Findings f;
  f.equal("record count", r.records.size(), std::size_t{1});
  if (r.records.size() == 1) {
    f.equal("outcome", r.records[0].outcome, outcome);
    f.equal("resolved at", r.records[0].resolved.value_or(-1), at);
  }
  return f;
}

inline std::vector<MicroResult> run_all() {
  std::vector<MicroResult> out;
  auto add = [&](std::string name, Findings f) { out.push_back({std::move(name), std::move(f)}); };
  auto quiet = [](Scenario s, std::size_t theta) {
    auto c = scripted_config(theta);
    c.events = false;
    return simulate(s, c);
  };

  {  // Task change, next gap free: slot extended where it stands.
    auto s = two_sites();
    const auto base = quiet(s, 2);
    auto changed = s.devices[1].tasks[0];
    changed.cpu_length = 20000;
    s.events = {event(0, 5, EventKind::task_change, DeviceId(1), TaskChange{changed})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::kept_node, 5);
    f.equal("baseline fog0", base.schedules[0], make_schedule({{DeviceId(0), 0, 10}, {DeviceId(1), 10, 20}}));
    f.equal("fog0", r.schedules[0], make_schedule({{DeviceId(0), 0, 10}, {DeviceId(1), 10, 30}}));
    f.merge("isolation", untouched(r, base, {1}));
    f.merge("soundness", soundness(s, r));
    add("task-change extends in place", f);
  }
  {  // Task change beyond the node's RAM: renegotiated elsewhere.
    auto s = two_sites(4.0);
    const auto base = quiet(s, 2);
    auto changed = s.devices[1].tasks[0];
    changed.ram_req = 6;
    s.events = {event(0, 5, EventKind::task_change, DeviceId(1), TaskChange{changed})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::new_contract, 5);
    f.equal("fog0", r.schedules[0], make_schedule({{DeviceId(0), 0, 10}}));
    f.equal("fog1", r.schedules[1], make_schedule({{DeviceId(2), 0, 10}, {DeviceId(1), 10, 220}}));
    f.equal("d1 node", r.devices[1].node, std::optional<NodeId>(NodeId(1)));
    f.merge("soundness", soundness(s, r));
    (void)base;
    add("task-change over RAM renegotiates", f);
  }
  {  // Task change no node can host: the device fails.
    auto s = two_sites();
    auto changed = s.devices[1].tasks[0];
    changed.ram_req = 20;
    s.events = {event(0, 5, EventKind::task_change, DeviceId(1), TaskChange{changed})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::failed, 5);
    f.equal("fog0", r.schedules[0], make_schedule({{DeviceId(0), 0, 10}}));
    f.require("d1 not executed", !r.devices[1].executed);
    f.equal("failed devices", r.metrics.failed_devices, std::size_t{1});
    f.near("SR", r.metrics.success_rate, 2.0 / 3.0);
    f.merge("soundness", soundness(s, r));
    add("task-change with no feasible node fails", f);
  }

  // fog0 busy with a long batch, fog1 mid-way, fog2 fast and far; line 0-1-2.
  auto mobile = [] {
    return assemble({fog(0, {0, 0}, 8, 4, 1000), fog(1, {600, 0}, 8, 4, 1000), fog(2, {1000, 0}, 8, 4, 10000)},
                    {device(0, {0, 0}, 0, {task(0, 1, 0.1, 100000, 1000)}),
                     device(1, {0, 0}, 0, {task(1, 1, 0.1, 10000, 1000)})},
                    line(3));
  };
  {  // Move next to an idle fast fog: switch to a strictly earlier completion.
    auto s = mobile();
    const auto base = quiet(s, 3);
    s.events = {event(0, 5, EventKind::location_change, DeviceId(1), LocationChange{{1000, 0}})};
    const auto r = simulate(s, scripted_config(3));
    Findings f = single_record(r, Outcome::new_contract, 5);
    f.equal("baseline fog0", base.schedules[0], make_schedule({{DeviceId(0), 0, 100}, {DeviceId(1), 100, 110}}));
    f.equal("fog0", r.schedules[0], make_schedule({{DeviceId(0), 0, 100}}));
    f.equal("fog2", r.schedules[2], make_schedule({{DeviceId(1), 5, 6}}));
    f.merge("isolation", untouched(r, base, {1}));
    f.merge("soundness", soundness(s, r));
    add("location-change switches to a better node", f);
  }
  {  // Move with no better offer: contract unchanged.
    auto s = mobile();
    const auto base = quiet(s, 3);
    s.events = {event(0, 5, EventKind::location_change, DeviceId(1), LocationChange{{1, 0}})};
    const auto r = simulate(s, scripted_config(3));
    Findings f = single_record(r, Outcome::kept_node, 5);
    f.merge("isolation", untouched(r, base, {0, 1, 2}));
    f.merge("soundness", soundness(s, r));
    add("location-change keeps a contract nothing beats", f);
  }
  {  // Move while uncontracted: plain negotiation from the new gateway.
    auto s = mobile();
    s.devices[1].tasks[0].ram_req = 9;
    s.events = {event(0, 5, EventKind::location_change, DeviceId(1), LocationChange{{1000, 0}})};
    struct Count : SimObserver {
      std::size_t after = 0;
      void on_quote(NodeId, const BatchSummary& b, const Schedule&, SimTime now, std::uint64_t) override {
        if (now == 5 && b.device == DeviceId(1)) ++after;
      }
    } count;
    const auto r = simulate(s, scripted_config(3), &count);
    Findings f = single_record(r, Outcome::failed, 5);
    f.equal("nodes asked after the move", count.after, std::size_t{3});
    f.merge("soundness", soundness(s, r));
    add("location-change while uncontracted renegotiates", f);
  }

  // γ = 5 from fog0; a queued two-task batch of 22 s after d0.
  auto cancelling = [] {
    Topology t(2);
    t.connect(NodeId(0), NodeId(1));
    return assemble({fog(0, {3, 4}, 8, 4, 1000), fog(1, {1000, 0}, 8, 4, 1000)},
                    {device(0, {0, 0}, 0, {task(0, 1, 0.1, 10000, 1000), task(1, 1, 0.1, 10000, 1000)}),
                     device(1, {0, 0}, 0, {task(2, 1, 0.1, 10000, 1000), task(3, 1, 0.1, 10000, 1000)}),
                     device(2, {1000, 0}, 1, {task(4, 1, 0.1, 10000, 1000)})},
                    t);
  };
  {  // Half the batch cancelled: completion pulled in by the removed share.
    auto s = cancelling();
    const auto base = quiet(s, 2);
    s.events = {event(0, 5, EventKind::cancellation, DeviceId(1), Cancellation{{TaskId(3)}})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::cancelled, 5);
    f.equal("baseline fog0", base.schedules[0], make_schedule({{DeviceId(0), 0, 22}, {DeviceId(1), 22, 44}}));
    // 10 s of CPU plus 5 × 8 × 0.1 / 4 = 1 s of transmission removed.
    f.equal("fog0", r.schedules[0], make_schedule({{DeviceId(0), 0, 22}, {DeviceId(1), 22, 33}}));
    f.equal("TN excludes cancelled", r.metrics.total_tasks, std::size_t{4});
    f.merge("isolation", untouched(r, base, {1}));
    f.merge("soundness", soundness(s, r));
    add("cancellation shrinks the slot", f);
  }
  {  // Whole batch cancelled: slot deleted, contract dissolved.
    auto s = cancelling();
    const auto base = quiet(s, 2);
    s.events = {event(0, 5, EventKind::cancellation, DeviceId(1), Cancellation{{TaskId(2), TaskId(3)}})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::cancelled, 5);
    f.equal("fog0", r.schedules[0], make_schedule({{DeviceId(0), 0, 22}}));
    f.require("d1 not executed", !r.devices[1].executed);
    f.equal("d1 cancelled tasks", r.devices[1].cancelled_tasks, std::size_t{2});
    f.equal("failed devices", r.metrics.failed_devices, std::size_t{0});
    f.merge("isolation", untouched(r, base, {1}));
    f.merge("soundness", soundness(s, r));
    add("cancellation of every task dissolves the contract", f);
  }
  {  // Cancelling on a device that never got a contract just drops the tasks.
    auto s = cancelling();
    s.devices[1].tasks[0].ram_req = 9;
    s.events = {event(0, 5, EventKind::cancellation, DeviceId(1), Cancellation{{TaskId(3)}})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::cancelled, 5);
    f.equal("d1 live tasks", r.devices[1].total_tasks, std::size_t{1});
    f.equal("d1 cancelled tasks", r.devices[1].cancelled_tasks, std::size_t{1});
    f.equal("TN", r.metrics.total_tasks, std::size_t{4});
    f.merge("soundness", soundness(s, r));
    add("cancellation on an uncontracted device", f);
  }

  {  // CPU halved with loose deadlines: everything stretches, nothing moves.
    auto s = two_sites();
    const auto base = quiet(s, 2);
    s.events = {event(0, 5, EventKind::capability_change, NodeId(0), CapabilityChange{8, 4, 500})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::kept_node, 5);
    f.equal("fog0", r.schedules[0], make_schedule({{DeviceId(0), 0, 20}, {DeviceId(1), 20, 40}}));
    f.equal("fog0 cpu", r.nodes[0].cpu_rate, 500.0);
    f.merge("isolation", untouched(r, base, {1}));
    f.merge("soundness", soundness(s, r));
    add("capability-change re-packs", f);
  }
  {  // RAM below one batch: that device is evicted and goes elsewhere.
    auto s = two_sites();
    s.devices[1].tasks[0].ram_req = 6;
    s.events = {event(0, 5, EventKind::capability_change, NodeId(0), CapabilityChange{4, 4, 1000})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::new_contract, 5);
    f.equal("fog0", r.schedules[0], make_schedule({{DeviceId(0), 0, 10}}));
    f.equal("fog1", r.schedules[1], make_schedule({{DeviceId(2), 0, 10}, {DeviceId(1), 10, 220}}));
    f.merge("soundness", soundness(s, r));
    add("capability-change evicts on RAM", f);
  }
  {  // CPU halved past a tight deadline: eviction and a recorded renegotiation.
    auto s = two_sites();
    s.devices[1].tasks[0].deadline = 30;
    SimConfig c = scripted_config(2);
    c.control_latency = 0.01;
    s.events = {event(0, 5, EventKind::capability_change, NodeId(0), CapabilityChange{8, 4, 500})};
    const auto r = simulate(s, c);
    Findings f;
    f.equal("record count", r.records.size(), std::size_t{1});
    if (!r.records.empty()) {
      f.equal("outcome", r.records[0].outcome, Outcome::new_contract);
      f.require("positive response time", r.records[0].resolved && response_time(r.records[0]) > 0);
    }
    const Slot* d1 = r.schedules[0].find(DeviceId(1));
    f.require("d1 re-homed on fog0 after d0", d1 && d1->start >= r.schedules[0].find(DeviceId(0))->completion);
    f.merge("soundness", soundness(s, r));
    add("capability-change evicts on deadline", f);
  }

  {  // Disconnecting an idle node only changes the topology.
    auto s = two_sites();
    s.devices.pop_back();
    s.spec.device_count = 2;
    const auto base = quiet(s, 2);
    s.events = {event(0, 5, EventKind::disconnection, NodeId(1), Disconnection{})};
    const auto r = simulate(s, scripted_config(2));
    Findings f = single_record(r, Outcome::kept_node, 5);
    f.equal("links left", r.topology.edge_count(), std::size_t{0});
    f.merge("isolation", untouched(r, base, {0, 1}));
    f.merge("soundness", soundness(s, r));
    add("disconnection of an idle node", f);
  }
  {  // Disconnecting a node with three contracts re-homes all three.
    Topology t(3);
    t.connect(NodeId(0), NodeId(1));
    t.connect(NodeId(1), NodeId(2));
    t.connect(NodeId(0), NodeId(2));
    auto s = assemble({fog(0, {0, 0}, 8, 4, 1000), fog(1, {200, 0}, 8, 4, 1000), fog(2, {5000, 0}, 8, 4, 1000)},
                      {device(0, {0, 0}, 0, {task(0, 1, 0.1, 10000, 1000)}),
                       device(1, {0, 0}, 0, {task(1, 1, 0.1, 10000, 1000)}),
                       device(2, {0, 0}, 0, {task(2, 1, 0.1, 10000, 1000)}),
                       device(3, {5000, 0}, 2, {task(3, 1, 0.1, 10000, 1000)})},
                      t);
    const auto base = quiet(s, 3);
    s.events = {event(0, 5, EventKind::disconnection, NodeId(0), Disconnection{})};
    const auto r = simulate(s, scripted_config(3));
    Findings f = single_record(r, Outcome::new_contract, 5);
    f.equal("baseline fog0", base.schedules[0],
            make_schedule({{DeviceId(0), 0, 10}, {DeviceId(1), 10, 20}, {DeviceId(2), 20, 30}}));
    for (int row = 0; row < 3; ++row) {
      f.equal("row 0 col " + std::to_string(row), int(r.topology.at(0, row)), 0);
      f.equal("col 0 row " + std::to_string(row), int(r.topology.at(row, 0)), 0);
    }
    f.equal("fog1 link to fog2 kept", r.topology.adjacent(NodeId(1), NodeId(2)), true);
    f.equal("fog0", r.schedules[0], Schedule{});
    f.equal("fog1", r.schedules[1],
            make_schedule({{DeviceId(0), 5, 55}, {DeviceId(1), 55, 105}, {DeviceId(2), 105, 155}}));
    std::size_t executed = 0;
    for (const auto& d : r.devices) executed += d.executed;
    f.equal("devices conserved", executed, std::size_t{4});
    f.merge("isolation", untouched(r, base, {2}));
    f.merge("soundness", soundness(s, r));
    add("disconnection re-homes every contract", f);
  }
  {  // Disconnecting the only node fails everything it held.
    auto s = assemble({fog(0, {0, 0}, 8, 4, 1000)},
                      {device(0, {0, 0}, 0, {task(0, 1, 0.1, 10000, 1000)}),
                       device(1, {0, 0}, 0, {task(1, 1, 0.1, 10000, 1000)})},
                      Topology(1));
    s.events = {event(0, 5, EventKind::disconnection, NodeId(0), Disconnection{})};
    const auto r = simulate(s, scripted_config(1));
    Findings f = single_record(r, Outcome::failed, 5);
    f.equal("failed devices", r.metrics.failed_devices, std::size_t{2});
    f.equal("SR", r.metrics.success_rate, 0.0);
    f.merge("soundness", soundness(s, r));
    add("disconnection of the only node", f);
  }
  return out;
}

}  // namespace micro
}  // namespace fogsim::testing
