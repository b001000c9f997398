#include "fogsim/model.hpp"

#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace fogsim {

double distance(const GeoLocation& a, const GeoLocation& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

const char* to_string(NodeKind kind) {
  return kind == NodeKind::cloud ? "cloud" : "fog";
}

Topology::Topology(std::size_t order) : order_(order), cells_(order * order, 0) {}

void Topology::check(NodeId id) const {
  if (id.index() >= order_) {
    throw std::out_of_range("node id " + std::to_string(id.value) + " outside topology of order " +
                            std::to_string(order_));
  }
}

bool Topology::adjacent(NodeId a, NodeId b) const {
  check(a);
  check(b);
  return at(a.index(), b.index()) != 0;
}

void Topology::connect(NodeId a, NodeId b) {
  check(a);
  check(b);
  if (a == b) throw std::invalid_argument("self loops are not allowed");
  set(a.index(), b.index(), 1);
  set(b.index(), a.index(), 1);
}

void Topology::disconnect(NodeId a, NodeId b) {
  check(a);
  check(b);
  set(a.index(), b.index(), 0);
  set(b.index(), a.index(), 0);
}

void Topology::isolate(NodeId node) {
  check(node);
  for (std::size_t k = 0; k < order_; ++k) {
    set(node.index(), k, 0);
    set(k, node.index(), 0);
  }
}

std::vector<NodeId> Topology::neighbors(NodeId node) const {
  check(node);
  std::vector<NodeId> out;
  for (std::size_t k = 0; k < order_; ++k) {
    if (at(node.index(), k) != 0) out.emplace_back(k);
  }
  return out;
}

std::size_t Topology::edge_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < order_; ++i)
    for (std::size_t j = i + 1; j < order_; ++j) n += at(i, j) != 0;
  return n;
}

std::string TopologyViolation::message() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::non_binary: os << "non-binary value"; break;
    case Kind::nonzero_diagonal: os << "nonzero diagonal"; break;
    case Kind::asymmetric: os << "asymmetric"; break;
  }
  os << " at (" << row << "," << col << ")";
  return os.str();
}

std::optional<TopologyViolation> validate_topology(const Topology& topology) {
  const std::size_t p = topology.order();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const auto v = topology.at(i, j);
      if (v > 1) return TopologyViolation{TopologyViolation::Kind::non_binary, i, j};
      if (i == j && v != 0) return TopologyViolation{TopologyViolation::Kind::nonzero_diagonal, i, j};
      if (v != topology.at(j, i)) return TopologyViolation{TopologyViolation::Kind::asymmetric, i, j};
    }
  }
  return std::nullopt;
}

std::vector<int> hop_distances(const Topology& topology, NodeId from) {
  const std::size_t p = topology.order();
  if (from.index() >= p) throw std::out_of_range("unknown node id " + std::to_string(from.value));
  std::vector<int> depth(p, -1);
  std::deque<std::size_t> frontier{from.index()};
  depth[from.index()] = 0;
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop_front();
    for (std::size_t v = 0; v < p; ++v) {
      if (topology.at(u, v) != 0 && depth[v] < 0) {
        depth[v] = depth[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  return depth;
}

std::optional<int> shortest_hops(const Topology& topology, NodeId from, NodeId to) {
  if (to.index() >= topology.order()) throw std::out_of_range("unknown node id " + std::to_string(to.value));
  const auto depth = hop_distances(topology, from);
  if (depth[to.index()] < 0) return std::nullopt;
  return depth[to.index()];
}

bool is_connected(const Topology& topology) {
  if (topology.order() == 0) return true;
  for (int d : hop_distances(topology, NodeId{0})) {
    if (d < 0) return false;
  }
  return true;
}

}  // namespace fogsim
