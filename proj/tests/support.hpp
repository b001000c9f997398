#pragma once

// Builders and small random generators shared by the unit and acceptance
// suites. Generators are seeded std::mt19937_64 so failures replay exactly.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fogsim/model.hpp"
#include "fogsim/negotiation.hpp"
#include "fogsim/scenario.hpp"
#include "fogsim/schedule.hpp"

namespace fogsim::testing {

inline Node fog(std::uint32_t id, GeoLocation at, double ram = 8.0, double bw = 4.0, double cpu = 5000.0) {
  return Node{NodeId(id), NodeKind::fog, at, ram, bw, cpu};
}

inline Node cloud(std::uint32_t id, GeoLocation at = {0.0, 0.0}) {
  return Node{NodeId(id), NodeKind::cloud, at, 16.0, 10.0, 50000.0};
}

inline Task task(std::uint32_t id, double ram, double data, double length, double deadline) {
  return Task{TaskId(id), ram, data, length, deadline};
}

inline IoTDevice device(std::uint32_t id, GeoLocation at, std::uint32_t gateway, std::vector<Task> tasks) {
  return IoTDevice{DeviceId(id), at, NodeId(gateway), std::move(tasks)};
}

inline BatchSummary batch(std::uint32_t device, GeoLocation at, double data, double length, double ram = 1.0,
                          double deadline = 1e9) {
  return BatchSummary{DeviceId(device), at, data, length, ram, deadline, 1};
}

/// Line topology 0-1-2-...-(n-1).
inline Topology line(std::size_t n) {
  Topology t(n);
  for (std::size_t i = 0; i + 1 < n; ++i) t.connect(NodeId(i), NodeId(i + 1));
  return t;
}

inline Topology complete(std::size_t n) {
  Topology t(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) t.connect(NodeId(i), NodeId(j));
  return t;
}

/// Hand-assembled scenario with no events; spec left at defaults except the
/// counts, which follow the vectors.
inline Scenario assemble(std::vector<Node> nodes, std::vector<IoTDevice> devices, Topology topology,
                         std::vector<UncertainEvent> events = {}) {
  Scenario s;
  s.name = "scripted";
  s.spec.cloud_count = 0;
  s.spec.fog_count = 0;
  for (const auto& n : nodes) (n.is_fog() ? s.spec.fog_count : s.spec.cloud_count) += 1;
  s.spec.device_count = devices.size();
  s.nodes = std::move(nodes);
  s.devices = std::move(devices);
  s.topology = std::move(topology);
  s.events = std::move(events);
  return s;
}

inline bool close(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  /// Random disjoint slot list sorted by start.
  std::vector<Slot> slots(std::size_t max_count) {
    std::vector<Slot> out;
    double t = real(0.0, 20.0);
    const std::size_t count = index(0, max_count);
    for (std::size_t i = 0; i < count; ++i) {
      const double len = real(0.5, 30.0);
      out.push_back(Slot{DeviceId(i), t, t + len});
      t += len + (coin() ? 0.0 : real(0.0, 25.0));
    }
    return out;
  }

  /// Small random spec for scenario-level property tests.
  ScenarioSpec small_spec(std::uint64_t seed, std::size_t max_nodes = 10, std::size_t max_devices = 10) {
    ScenarioSpec s;
    s.seed = seed;
    s.cloud_count = index(0, 1);
    s.fog_count = index(1, max_nodes - s.cloud_count);
    s.device_count = index(1, max_devices);
    s.min_tasks = 1;
    s.max_tasks = index(1, 6);
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace fogsim::testing
