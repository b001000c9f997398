#pragma once

// Seeded environment generation and the JSON scenario file format.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogsim/model.hpp"
#include "fogsim/resched.hpp"

namespace fogsim {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Range {
  double min = 0.0;
  double max = 0.0;

  bool operator==(const Range&) const = default;
};

enum class TopologyModel : std::uint8_t { random_geometric, ring_of_clusters };

const char* to_string(TopologyModel model);

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::size_t cloud_count = 2;
  std::size_t fog_count = 48;
  std::size_t device_count = 1000;

  GeoLocation cloud_location{0.0, 0.0};
  double cloud_ram = 16.0;
  double cloud_bandwidth = 10.0;
  double cloud_cpu = 50000.0;

  Range fog_x{0.0, 500.0};
  Range fog_y{0.0, 500.0};
  Range fog_ram{2.0, 8.0};
  Range fog_bandwidth{1.0, 5.0};
  Range fog_cpu{5000.0, 10000.0};

  Range device_x{0.0, 500.0};
  Range device_y{0.0, 500.0};
  std::size_t min_tasks = 10;
  std::size_t max_tasks = 25;
  Range task_ram{0.1, 8.0};
  Range task_data{0.1, 0.2};
  Range task_length{1000.0, 2000.0};
  Range task_deadline{2000.0, 3000.0};

  TopologyModel topology_model = TopologyModel::random_geometric;
  double radius = 120.0;         // fog-fog link range (random-geometric)
  std::size_t cloud_uplinks = 3; // nearest fogs each cloud links to; 0 links to all
  std::size_t cluster_size = 4;  // ring-of-clusters
  bool repair_connectivity = true;

  double event_probability = 0.0;
  Range requirement_increase{0.1, 1.0};  // fraction added to r, s, l
  Range deadline_advance{20.0, 50.0};    // seconds
  Range capability_decrease{0.2, 0.5};   // fraction removed from ram, cpu
  double bandwidth_decrease = 0.5;
  double event_window = 0.8;             // share of the estimated makespan

  bool operator==(const ScenarioSpec&) const = default;
};

/// Empty string when the spec is usable.
std::string validate_spec(const ScenarioSpec& spec);

struct Scenario {
  std::string name;
  ScenarioSpec spec;
  std::vector<Node> nodes;  // clouds first, then fogs
  std::vector<IoTDevice> devices;
  Topology topology;
  std::vector<UncertainEvent> events;  // sorted by fire time, ids 0..n-1
  /// True when `spec` can regenerate the scenario (generated, or loaded
  /// from a file carrying generator settings).
  bool generated = false;

  bool operator==(const Scenario&) const = default;
};

/// Pure function of `spec`. Throws ScenarioError for an invalid spec or when
/// no connected topology could be sampled.
Scenario generate(const ScenarioSpec& spec);

/// Nearest fog to `location`, ties by id. Throws ScenarioError without fogs.
NodeId nearest_fog(const GeoLocation& location, std::span<const Node> nodes,
                   std::span<const bool> excluded = {});

/// Event-free completion estimate: devices in id order, each placed on the
/// node where it would finish first.
double estimate_makespan(std::span<const Node> nodes, std::span<const IoTDevice> devices);

std::string to_json(const Scenario& scenario);
/// Throws ScenarioError naming the line (syntax) or the field (content).
Scenario from_json(const std::string& text);

void save(const Scenario& scenario, const std::filesystem::path& path);
Scenario load(const std::filesystem::path& path);

}  // namespace fogsim
