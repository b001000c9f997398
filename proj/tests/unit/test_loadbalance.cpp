#include "doctest.h"

#include <map>
#include <set>

#include "fogsim/loadbalance.hpp"
#include "support.hpp"

using namespace fogsim;
using namespace fogsim::testing;

namespace {

struct Batches {
  std::map<DeviceId, BatchSummary> by_device;
  BatchLookup lookup() const {
    return [this](DeviceId d) -> const BatchSummary* {
      auto it = by_device.find(d);
      return it == by_device.end() ? nullptr : &it->second;
    };
  }
};

Schedule schedule_of(std::initializer_list<Slot> slots) {
  Schedule s;
  for (const auto& x : slots) s.insert(x);
  return s;
}

}  // namespace

TEST_SUITE("loadbalance") {
  TEST_CASE("compute_load examples") {
    CHECK(compute_load({}, 0).load == 0.0);

    std::vector<Slot> full{{DeviceId(0), 0, 100}};
    auto s = compute_load(full, 0);
    CHECK(s.allocated == 100);
    CHECK(s.horizon == 100);
    CHECK(s.load == 1.0);

    std::vector<Slot> half{{DeviceId(0), 0, 50}, {DeviceId(1), 99, 100}};
    CHECK(close(compute_load(half, 0).load, 0.51));
    std::vector<Slot> gap{{DeviceId(0), 0, 50}};
    gap.push_back({DeviceId(1), 100, 100.0 + 1e-12});
    CHECK(compute_load(gap, 0).load == doctest::Approx(0.5));

    // Executed work no longer counts.
    std::vector<Slot> later{{DeviceId(0), 0, 50}, {DeviceId(1), 50, 100}};
    CHECK(close(compute_load(later, 75).load, 1.0));
    CHECK(compute_load(later, 100).load == 0.0);
  }

  TEST_CASE("pair_variance and migrate_cost examples") {
    CHECK(pair_variance(0.5, 0.5) == 0.0);
    CHECK(close(pair_variance(0.8, 0.4), 0.04));
    CHECK(close(pair_variance(1.0, 0.0), 0.25));
    CHECK(migrate_cost(2, 1) == 2);
    CHECK(migrate_cost(2, 0) == 0);
    CHECK(migrate_cost(2, 3) == 6);
  }

  TEST_CASE("heavy node migrates its latest slot to a light neighbour") {
    const Node self = fog(0, {0, 0});
    const Node other = fog(1, {0, 0});
    Batches b;
    for (std::uint32_t d = 0; d < 3; ++d) b.by_device[DeviceId(d)] = batch(d, {0, 0}, 0.1, 150000);  // ET 30
    // Source: three back-to-back slots plus a short idle stretch, load 0.9.
    const auto source = schedule_of({{DeviceId(0), 10, 40}, {DeviceId(1), 40, 70}, {DeviceId(2), 70, 100}});
    const double before_src = compute_load(source.slots(), 0).load;
    CHECK(close(before_src, 0.9));

    // Neighbour is busy for 10 s out of 100, load 0.1.
    NeighborState n{other, 0.1, {{DeviceId(9), 0, 10}, {DeviceId(8), 99.999, 100}}};
    n.load = compute_load(n.schedule, 0).load;
    const auto plan = balance_step(self, source, b.lookup(), std::span(&n, 1), 0, BalanceOptions{0.01, 0});
    REQUIRE(plan.size() == 1);
    CHECK(plan[0].device == DeviceId(2));
    CHECK(plan[0].target == NodeId(1));
    CHECK(plan[0].window.start == 10);
    CHECK(close(plan[0].et, 30));

    auto src_after = source;
    src_after.remove(DeviceId(2));
    std::vector<Slot> tgt_after = n.schedule;
    tgt_after.push_back({DeviceId(2), plan[0].window.start, plan[0].window.completion});
    std::sort(tgt_after.begin(), tgt_after.end(), [](auto& x, auto& y) { return x.start < y.start; });
    const double a = compute_load(src_after.slots(), 0).load;
    const double c = compute_load(tgt_after, 0).load;
    CHECK(std::abs(a - c) < std::abs(before_src - n.load));
  }

  TEST_CASE("no action below the threshold or from the lighter side") {
    const Node self = fog(0, {0, 0});
    Batches b;
    b.by_device[DeviceId(0)] = batch(0, {0, 0}, 0.1, 150000);
    const auto source = schedule_of({{DeviceId(0), 10, 40}});
    NeighborState calm{fog(1, {0, 0}), 0.75, {}};
    const double own = compute_load(source.slots(), 0).load;
    calm.load = own - 0.1;  // V = 0.0025
    CHECK(balance_step(self, source, b.lookup(), std::span(&calm, 1), 0, {}).empty());

    NeighborState heavy{fog(1, {0, 0}), 1.0, {}};
    const auto light = schedule_of({{DeviceId(0), 10, 12}, {DeviceId(1), 99, 100}});
    b.by_device[DeviceId(1)] = batch(1, {0, 0}, 0.1, 5000);
    CHECK(balance_step(self, light, b.lookup(), std::span(&heavy, 1), 0, {}).empty());
  }

  TEST_CASE("started slots and RAM-infeasible targets are skipped") {
    const Node self = fog(0, {0, 0});
    Batches b;
    b.by_device[DeviceId(0)] = batch(0, {0, 0}, 0.1, 150000, 1.0);
    b.by_device[DeviceId(1)] = batch(1, {0, 0}, 0.1, 150000, 7.5);
    const auto source = schedule_of({{DeviceId(0), 0, 30}, {DeviceId(1), 30, 60}});
    NeighborState small{fog(1, {0, 0}, 4.0), 0.0, {}};
    // Device 1 needs too much RAM, device 0 already runs at now=5.
    CHECK(balance_step(self, source, b.lookup(), std::span(&small, 1), 5, {}).empty());
  }

  TEST_CASE("at most one migration per neighbour and each move lowers the pair variance") {
    Gen g(8);
    int migrations = 0;
    for (int round = 0; round < 300; ++round) {
      const Node self = fog(0, {g.real(0, 50), g.real(0, 50)}, 8, g.real(1, 5), g.real(5000, 10000));
      Batches b;
      Schedule source;
      double t = 0;
      const std::size_t count = g.index(1, 6);
      for (std::uint32_t d = 0; d < count; ++d) {
        b.by_device[DeviceId(d)] = batch(d, {g.real(0, 50), g.real(0, 50)}, g.real(0.1, 1), g.real(1000, 50000),
                                         g.real(0.1, 8), g.real(50, 500));
        const double len = estimate_et(b.by_device[DeviceId(d)], self);
        source.insert({DeviceId(d), t, t + len});
        t += len + (g.coin() ? 0 : g.real(0, 10));
      }
      std::vector<NeighborState> ns;
      const std::size_t nn = g.index(1, 3);
      for (std::uint32_t k = 0; k < nn; ++k) {
        NeighborState n{fog(k + 1, {g.real(0, 50), g.real(0, 50)}, g.real(2, 8), g.real(1, 5), g.real(5000, 10000)),
                        0.0,
                        {}};
        if (g.coin()) n.schedule.push_back({DeviceId(100 + k), 0, g.real(1, t + 1)});
        n.load = compute_load(n.schedule, 0).load;
        ns.push_back(n);
      }
      const double now = g.coin() ? 0.0 : g.real(0, t / 2);
      const auto plan = balance_step(self, source, b.lookup(), ns, now, {});
      std::set<NodeId> targets;
      std::set<DeviceId> devices;
      auto remaining = std::vector<Slot>(source.slots().begin(), source.slots().end());
      for (const auto& m : plan) {
        CHECK(targets.insert(m.target).second);
        CHECK(devices.insert(m.device).second);
        CHECK(m.old_slot.start > now);
        const auto& n = ns[m.target.index() - 1];
        CHECK(check_ram(n.node, b.by_device[m.device]));
        Schedule target;
        for (const auto& s : n.schedule) target.insert(s);
        CHECK(target.fits(m.window.start, m.window.completion));
        CHECK(close(m.window.completion - m.window.start, m.et, 1e-9));

        const double before = pair_variance(compute_load(remaining, now).load, n.load);
        std::erase_if(remaining, [&](const Slot& s) { return s.device == m.device; });
        target.insert({m.device, m.window.start, m.window.completion});
        const double after = pair_variance(compute_load(remaining, now).load, compute_load(target.slots(), now).load);
        CHECK(after < before);
        ++migrations;
      }
    }
    CHECK(migrations > 0);
  }
}
