#pragma once

// Domain types of the three-layer environment: devices with task batches,
// fog/cloud nodes, and the undirected connectivity graph between nodes.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fogsim/ids.hpp"

namespace fogsim {

struct GeoLocation {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const GeoLocation&) const = default;
};

/// Euclidean distance on the 2-D grid (dimensionless).
double distance(const GeoLocation& a, const GeoLocation& b);

struct Task {
  TaskId id;
  double ram_req = 0.0;     // GB
  double data_size = 0.0;   // GB
  double cpu_length = 0.0;  // MI
  SimTime deadline = 0.0;   // absolute seconds

  bool operator==(const Task&) const = default;
};

struct IoTDevice {
  DeviceId id;
  GeoLocation location;
  NodeId gateway;
  std::vector<Task> tasks;

  bool operator==(const IoTDevice&) const = default;
};

enum class NodeKind : std::uint8_t { fog, cloud };

const char* to_string(NodeKind kind);

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::fog;
  GeoLocation location;
  double ram = 0.0;        // GB
  double bandwidth = 0.0;  // Gb/s
  double cpu_rate = 0.0;   // MIPS

  bool is_fog() const { return kind == NodeKind::fog; }
  bool operator==(const Node&) const = default;
};

/// Symmetric 0/1 adjacency matrix over node indices. Cells are stored raw so a
/// malformed matrix read from disk can be represented and then rejected by
/// validate_topology().
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::size_t order);

  std::size_t order() const { return order_; }

  std::uint8_t at(std::size_t row, std::size_t col) const { return cells_[row * order_ + col]; }
  void set(std::size_t row, std::size_t col, std::uint8_t value) { cells_[row * order_ + col] = value; }

  bool adjacent(NodeId a, NodeId b) const;
  void connect(NodeId a, NodeId b);
  void disconnect(NodeId a, NodeId b);
  /// Zeroes row and column of `node`.
  void isolate(NodeId node);

  /// Neighbours in ascending id order.
  std::vector<NodeId> neighbors(NodeId node) const;
  std::size_t edge_count() const;

  bool operator==(const Topology&) const = default;

 private:
  void check(NodeId id) const;

  std::size_t order_ = 0;
  std::vector<std::uint8_t> cells_;
};

struct TopologyViolation {
  enum class Kind { non_binary, nonzero_diagonal, asymmetric };
  Kind kind;
  std::size_t row;
  std::size_t col;

  std::string message() const;
};

/// First violated cell in row-major order, or nullopt when the matrix is a
/// valid undirected simple graph.
std::optional<TopologyViolation> validate_topology(const Topology& topology);

/// BFS hop counts from `from`; -1 marks unreachable nodes.
std::vector<int> hop_distances(const Topology& topology, NodeId from);

/// Minimum edge count between two nodes, nullopt when unreachable.
/// Throws std::out_of_range for ids outside the topology.
std::optional<int> shortest_hops(const Topology& topology, NodeId from, NodeId to);

bool is_connected(const Topology& topology);

}  // namespace fogsim
