#include "fogsim/scenario.hpp"

#include <algorithm>
#include <concepts>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

#include "fogsim/format.hpp"
#include "fogsim/negotiation.hpp"

namespace fogsim {

using json = nlohmann::ordered_json;

const char* to_string(TopologyModel model) {
  switch (model) {
    case TopologyModel::random_geometric: return "random-geometric";
    case TopologyModel::ring_of_clusters: return "ring-of-clusters";
  }
  return "unknown";
}

namespace {

// Uniform mapping is done by hand so scenarios are identical across standard
// library implementations; the distributions in <random> are not portable.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(const Range& r) { return r.min + unit() * (r.max - r.min); }
  std::size_t integer(std::size_t lo, std::size_t hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    return std::min(hi, lo + static_cast<std::size_t>(unit() * span));
  }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

enum class Substream : std::uint64_t { nodes = 1, devices = 2, events = 3 };

Stream substream(std::uint64_t seed, Substream which) {
  return Stream(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(which))));
}

bool valid_range(const Range& r) { return std::isfinite(r.min) && std::isfinite(r.max) && r.min <= r.max; }

std::vector<Node> sample_nodes(const ScenarioSpec& spec, Stream& rng) {
  std::vector<Node> nodes;
  nodes.reserve(spec.cloud_count + spec.fog_count);
  for (std::size_t i = 0; i < spec.cloud_count; ++i) {
    nodes.push_back(Node{NodeId{nodes.size()}, NodeKind::cloud, spec.cloud_location, spec.cloud_ram,
                         spec.cloud_bandwidth, spec.cloud_cpu});
  }
  for (std::size_t i = 0; i < spec.fog_count; ++i) {
    Node n;
    n.id = NodeId{nodes.size()};
    n.kind = NodeKind::fog;
    n.location = {rng.uniform(spec.fog_x), rng.uniform(spec.fog_y)};
    n.ram = rng.uniform(spec.fog_ram);
    n.bandwidth = rng.uniform(spec.fog_bandwidth);
    n.cpu_rate = rng.uniform(spec.fog_cpu);
    nodes.push_back(n);
  }
  return nodes;
}

void link_clouds(Topology& topo, const ScenarioSpec& spec, std::span<const Node> nodes,
                 std::span<const std::size_t> uplink_candidates, std::size_t uplinks) {
  for (std::size_t a = 0; a < spec.cloud_count; ++a) {
    for (std::size_t b = a + 1; b < spec.cloud_count; ++b) topo.connect(NodeId{a}, NodeId{b});
    std::vector<std::size_t> order(uplink_candidates.begin(), uplink_candidates.end());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return distance(nodes[a].location, nodes[x].location) < distance(nodes[a].location, nodes[y].location);
    });
    const std::size_t count = uplinks == 0 ? order.size() : std::min(uplinks, order.size());
    for (std::size_t i = 0; i < count; ++i) topo.connect(NodeId{a}, NodeId{order[i]});
  }
}

Topology random_geometric(const ScenarioSpec& spec, std::span<const Node> nodes) {
  Topology topo(nodes.size());
  const std::size_t first_fog = spec.cloud_count;
  std::vector<std::size_t> fogs;
  for (std::size_t i = first_fog; i < nodes.size(); ++i) fogs.push_back(i);
  for (std::size_t a : fogs) {
    for (std::size_t b : fogs) {
      if (a < b && distance(nodes[a].location, nodes[b].location) <= spec.radius) topo.connect(NodeId{a}, NodeId{b});
    }
  }
  link_clouds(topo, spec, nodes, fogs, spec.cloud_uplinks);
  return topo;
}

Topology ring_of_clusters(const ScenarioSpec& spec, std::span<const Node> nodes) {
  Topology topo(nodes.size());
  const GeoLocation centre{(spec.fog_x.min + spec.fog_x.max) / 2.0, (spec.fog_y.min + spec.fog_y.max) / 2.0};
  std::vector<std::size_t> fogs;
  for (std::size_t i = spec.cloud_count; i < nodes.size(); ++i) fogs.push_back(i);
  auto angle = [&](std::size_t i) {
    return std::atan2(nodes[i].location.y - centre.y, nodes[i].location.x - centre.x);
  };
  std::stable_sort(fogs.begin(), fogs.end(), [&](std::size_t a, std::size_t b) { return angle(a) < angle(b); });

  std::vector<std::size_t> heads;
  for (std::size_t begin = 0; begin < fogs.size(); begin += spec.cluster_size) {
    const std::size_t end = std::min(fogs.size(), begin + spec.cluster_size);
    heads.push_back(fogs[begin]);
    for (std::size_t a = begin; a < end; ++a)
      for (std::size_t b = a + 1; b < end; ++b) topo.connect(NodeId{fogs[a]}, NodeId{fogs[b]});
  }
  for (std::size_t i = 0; heads.size() > 1 && i < heads.size(); ++i) {
    const std::size_t next = heads[(i + 1) % heads.size()];
    if (!topo.adjacent(NodeId{heads[i]}, NodeId{next})) topo.connect(NodeId{heads[i]}, NodeId{next});
  }
  link_clouds(topo, spec, nodes, heads, 0);
  return topo;
}

// Joins components by repeatedly adding the shortest edge leaving the
// component that holds node 0.
void repair(Topology& topo, std::span<const Node> nodes) {
  if (nodes.empty()) return;
  for (;;) {
    const auto hops = hop_distances(topo, NodeId{0u});
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    bool found = false;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      if (hops[a] < 0) continue;
      for (std::size_t b = 0; b < nodes.size(); ++b) {
        if (hops[b] >= 0) continue;
        const double d = distance(nodes[a].location, nodes[b].location);
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
          found = true;
        }
      }
    }
    if (!found) return;
    topo.connect(NodeId{best_a}, NodeId{best_b});
  }
}

struct Drawn {
  SimTime fire_at;
  std::size_t order;
  EventKind kind;
  EventTarget target;
  EventDelta delta;
};

std::vector<UncertainEvent> sample_events(const ScenarioSpec& spec, std::span<const Node> nodes,
                                          std::span<const IoTDevice> devices, Stream& rng) {
  std::vector<UncertainEvent> events;
  if (spec.event_probability <= 0.0 || devices.empty()) return events;

  const double window = std::max(1.0, spec.event_window * estimate_makespan(nodes, devices));
  auto fire_time = [&] {
    double u = 0.0;
    while (u == 0.0) u = rng.unit();
    return u * window;
  };

  std::vector<Drawn> drawn;
  const double p = spec.event_probability;
  for (const auto& d : devices) {
    for (const auto& task : d.tasks) {
      if (!rng.chance(p)) continue;
      const SimTime at = fire_time();
      if (rng.chance(0.5)) {
        Task updated = task;
        if (rng.chance(0.5)) {
          updated.ram_req *= 1.0 + rng.uniform(spec.requirement_increase);
          updated.data_size *= 1.0 + rng.uniform(spec.requirement_increase);
          updated.cpu_length *= 1.0 + rng.uniform(spec.requirement_increase);
        } else {
          updated.deadline = std::max(1.0, task.deadline - rng.uniform(spec.deadline_advance));
        }
        drawn.push_back({at, drawn.size(), EventKind::task_change, d.id, TaskChange{updated}});
      } else {
        drawn.push_back({at, drawn.size(), EventKind::cancellation, d.id, Cancellation{{task.id}}});
      }
    }
    if (rng.chance(p)) {
      const SimTime at = fire_time();
      const GeoLocation to{rng.uniform(spec.device_x), rng.uniform(spec.device_y)};
      drawn.push_back({at, drawn.size(), EventKind::location_change, d.id, LocationChange{to}});
    }
  }
  for (const auto& n : nodes) {
    if (!n.is_fog() || !rng.chance(p)) continue;
    const SimTime at = fire_time();
    if (rng.chance(0.5)) {
      CapabilityChange c;
      c.ram = n.ram * (1.0 - rng.uniform(spec.capability_decrease));
      c.cpu_rate = n.cpu_rate * (1.0 - rng.uniform(spec.capability_decrease));
      c.bandwidth = n.bandwidth * (1.0 - spec.bandwidth_decrease);
      drawn.push_back({at, drawn.size(), EventKind::capability_change, n.id, c});
    } else {
      drawn.push_back({at, drawn.size(), EventKind::disconnection, n.id, Disconnection{}});
    }
  }

  std::sort(drawn.begin(), drawn.end(), [](const Drawn& a, const Drawn& b) {
    return a.fire_at != b.fire_at ? a.fire_at < b.fire_at : a.order < b.order;
  });
  for (auto& d : drawn) {
    events.push_back(UncertainEvent{EventId{events.size()}, d.fire_at, d.kind, d.target, std::move(d.delta)});
  }
  return events;
}

}  // namespace

std::string validate_spec(const ScenarioSpec& s) {
  for (const Range* r : {&s.fog_x, &s.fog_y, &s.fog_ram, &s.fog_bandwidth, &s.fog_cpu, &s.device_x, &s.device_y,
                         &s.task_ram, &s.task_data, &s.task_length, &s.task_deadline, &s.requirement_increase,
                         &s.deadline_advance, &s.capability_decrease}) {
    if (!valid_range(*r)) return "empty or non-finite range";
  }
  if (s.fog_ram.min <= 0 || s.fog_bandwidth.min <= 0 || s.fog_cpu.min <= 0) return "fog capabilities must be positive";
  if (s.cloud_count > 0 && !(s.cloud_ram > 0 && s.cloud_bandwidth > 0 && s.cloud_cpu > 0))
    return "cloud capabilities must be positive";
  if (s.task_ram.min <= 0 || s.task_data.min <= 0 || s.task_length.min <= 0 || s.task_deadline.min <= 0)
    return "task fields must be positive";
  if (s.min_tasks == 0 || s.min_tasks > s.max_tasks) return "task count range must be non-empty and at least 1";
  if (s.device_count > 0 && s.fog_count == 0) return "devices need at least one fog node as gateway";
  if (!(s.event_probability >= 0.0 && s.event_probability <= 1.0)) return "event probability outside [0, 1]";
  if (s.capability_decrease.min < 0 || s.capability_decrease.max >= 1) return "capability decrease outside [0, 1)";
  if (!(s.bandwidth_decrease >= 0 && s.bandwidth_decrease < 1)) return "bandwidth decrease outside [0, 1)";
  if (!(s.radius >= 0)) return "negative radius";
  if (s.cluster_size == 0) return "cluster size must be positive";
  if (!(s.event_window > 0)) return "event window must be positive";
  return {};
}

NodeId nearest_fog(const GeoLocation& location, std::span<const Node> nodes, std::span<const bool> excluded) {
  std::optional<NodeId> best;
  double best_d = 0.0;
  for (const auto& n : nodes) {
    if (!n.is_fog() || (!excluded.empty() && excluded[n.id.index()])) continue;
    const double d = distance(location, n.location);
    if (!best || d < best_d) {
      best = n.id;
      best_d = d;
    }
  }
  if (!best) throw ScenarioError("no fog node available as gateway");
  return *best;
}

double estimate_makespan(std::span<const Node> nodes, std::span<const IoTDevice> devices) {
  std::vector<double> ready(nodes.size(), 0.0);
  double result = 0.0;
  for (const auto& d : devices) {
    if (d.tasks.empty()) continue;
    const auto batch = summarize(d);
    std::optional<std::size_t> pick;
    double pick_ct = 0.0;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      if (!check_ram(nodes[n], batch)) continue;
      const double ct = ready[n] + estimate_et(batch, nodes[n]);
      if (!pick || ct < pick_ct) {
        pick = n;
        pick_ct = ct;
      }
    }
    if (!pick) continue;
    ready[*pick] = pick_ct;
    result = std::max(result, pick_ct);
  }
  return result;
}

Scenario generate(const ScenarioSpec& spec) {
  if (auto why = validate_spec(spec); !why.empty()) throw ScenarioError("invalid scenario spec: " + why);

  Scenario out;
  out.spec = spec;
  out.name = "generated-" + std::to_string(spec.seed);

  auto node_rng = substream(spec.seed, Substream::nodes);
  constexpr int kMaxAttempts = 1000;
  bool connected = false;
  for (int attempt = 0; attempt < kMaxAttempts && !connected; ++attempt) {
    out.nodes = sample_nodes(spec, node_rng);
    out.topology = spec.topology_model == TopologyModel::random_geometric ? random_geometric(spec, out.nodes)
                                                                          : ring_of_clusters(spec, out.nodes);
    if (spec.repair_connectivity) repair(out.topology, out.nodes);
    connected = is_connected(out.topology);
  }
  if (!connected) throw ScenarioError("no connected topology after 1000 samples; increase the radius");

  auto device_rng = substream(spec.seed, Substream::devices);
  std::uint32_t next_task = 0;
  for (std::size_t i = 0; i < spec.device_count; ++i) {
    IoTDevice d;
    d.id = DeviceId{i};
    d.location = {device_rng.uniform(spec.device_x), device_rng.uniform(spec.device_y)};
    const std::size_t count = device_rng.integer(spec.min_tasks, spec.max_tasks);
    for (std::size_t k = 0; k < count; ++k) {
      Task t;
      t.id = TaskId{next_task++};
      t.ram_req = device_rng.uniform(spec.task_ram);
      t.data_size = device_rng.uniform(spec.task_data);
      t.cpu_length = device_rng.uniform(spec.task_length);
      t.deadline = device_rng.uniform(spec.task_deadline);
      d.tasks.push_back(t);
    }
    d.gateway = nearest_fog(d.location, out.nodes);
    out.devices.push_back(std::move(d));
  }

  auto event_rng = substream(spec.seed, Substream::events);
  out.events = sample_events(spec, out.nodes, out.devices, event_rng);
  out.generated = true;
  return out;
}

// --- serialization -------------------------------------------------------

namespace {

constexpr const char* kFormat = "fogsim-scenario/1";

template <class F>
void visit_spec(ScenarioSpec& s, F&& f) {
  f("seed", s.seed);
  f("cloud_count", s.cloud_count);
  f("fog_count", s.fog_count);
  f("device_count", s.device_count);
  f("cloud_location", s.cloud_location);
  f("cloud_ram", s.cloud_ram);
  f("cloud_bandwidth", s.cloud_bandwidth);
  f("cloud_cpu", s.cloud_cpu);
  f("fog_x", s.fog_x);
  f("fog_y", s.fog_y);
  f("fog_ram", s.fog_ram);
  f("fog_bandwidth", s.fog_bandwidth);
  f("fog_cpu", s.fog_cpu);
  f("device_x", s.device_x);
  f("device_y", s.device_y);
  f("min_tasks", s.min_tasks);
  f("max_tasks", s.max_tasks);
  f("task_ram", s.task_ram);
  f("task_data", s.task_data);
  f("task_length", s.task_length);
  f("task_deadline", s.task_deadline);
  f("topology_model", s.topology_model);
  f("radius", s.radius);
  f("cloud_uplinks", s.cloud_uplinks);
  f("cluster_size", s.cluster_size);
  f("repair_connectivity", s.repair_connectivity);
  f("event_probability", s.event_probability);
  f("requirement_increase", s.requirement_increase);
  f("deadline_advance", s.deadline_advance);
  f("capability_decrease", s.capability_decrease);
  f("bandwidth_decrease", s.bandwidth_decrease);
  f("event_window", s.event_window);
}

json num(double v) { return format_number(v); }

struct Writer {
  json& out;
  void operator()(const char* key, double v) { out[key] = num(v); }
  template <std::unsigned_integral T>
  void operator()(const char* key, T v) {
    out[key] = v;
  }
  void operator()(const char* key, bool v) { out[key] = v; }
  void operator()(const char* key, const Range& r) { out[key] = json::array({num(r.min), num(r.max)}); }
  void operator()(const char* key, const GeoLocation& g) { out[key] = json::array({num(g.x), num(g.y)}); }
  void operator()(const char* key, TopologyModel m) { out[key] = to_string(m); }
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError("scenario field " + path + ": " + what);
}

const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing");
  return *it;
}

double real(const json& v, const std::string& path) {
  if (v.is_string()) {
    if (auto parsed = parse_number(v.get_ref<const std::string&>())) return *parsed;
    fail(path, "not a decimal number: \"" + v.get<std::string>() + "\"");
  }
  if (v.is_number()) return v.get<double>();
  fail(path, "expected a decimal string");
}

double real(const json& obj, const char* key, const std::string& path) {
  return real(member(obj, key, path), path + "." + key);
}

std::uint64_t whole(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    fail(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t whole(const json& obj, const char* key, const std::string& path) {
  return whole(member(obj, key, path), path + "." + key);
}

std::uint32_t ident(const json& obj, const char* key, const std::string& path) {
  const auto v = whole(obj, key, path);
  if (v > std::numeric_limits<std::uint32_t>::max()) fail(path + "." + key, "id out of range");
  return static_cast<std::uint32_t>(v);
}

std::pair<double, double> pair_of(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) fail(path, "expected a two-element array");
  return {real(v[0], path + "[0]"), real(v[1], path + "[1]")};
}

struct Reader {
  const json& in;
  std::string path;

  const json* find(const char* key) const {
    auto it = in.find(key);
    return it == in.end() ? nullptr : &*it;
  }
  std::string at(const char* key) const { return path + "." + key; }

  void operator()(const char* key, double& v) {
    if (auto* j = find(key)) v = real(*j, at(key));
  }
  template <std::unsigned_integral T>
  void operator()(const char* key, T& v) {
    if (auto* j = find(key)) v = static_cast<T>(whole(*j, at(key)));
  }
  void operator()(const char* key, bool& v) {
    if (auto* j = find(key)) {
      if (!j->is_boolean()) fail(at(key), "expected true or false");
      v = j->get<bool>();
    }
  }
  void operator()(const char* key, Range& r) {
    if (auto* j = find(key)) std::tie(r.min, r.max) = pair_of(*j, at(key));
  }
  void operator()(const char* key, GeoLocation& g) {
    if (auto* j = find(key)) std::tie(g.x, g.y) = pair_of(*j, at(key));
  }
  void operator()(const char* key, TopologyModel& m) {
    if (auto* j = find(key)) {
      if (*j == to_string(TopologyModel::random_geometric)) m = TopologyModel::random_geometric;
      else if (*j == to_string(TopologyModel::ring_of_clusters)) m = TopologyModel::ring_of_clusters;
      else fail(at(key), "unknown topology model");
    }
  }
};

json task_json(const Task& t) {
  json j;
  j["id"] = t.id.value;
  j["ram_req"] = num(t.ram_req);
  j["data_size"] = num(t.data_size);
  j["cpu_length"] = num(t.cpu_length);
  j["deadline"] = num(t.deadline);
  return j;
}

Task task_from(const json& j, const std::string& path) {
  Task t;
  t.id = TaskId{ident(j, "id", path)};
  t.ram_req = real(j, "ram_req", path);
  t.data_size = real(j, "data_size", path);
  t.cpu_length = real(j, "cpu_length", path);
  t.deadline = real(j, "deadline", path);
  if (!(t.ram_req > 0 && t.data_size > 0 && t.cpu_length > 0 && t.deadline > 0))
    fail(path, "task fields must be positive");
  return t;
}

json event_json(const UncertainEvent& e) {
  json j;
  j["id"] = e.id.value;
  j["fire_at"] = num(e.fire_at);
  j["kind"] = to_string(e.kind);
  if (const auto* d = std::get_if<DeviceId>(&e.target)) j["device"] = d->value;
  if (const auto* n = std::get_if<NodeId>(&e.target)) j["node"] = n->value;
  std::visit(
      [&](const auto& delta) {
        using T = std::decay_t<decltype(delta)>;
        if constexpr (std::is_same_v<T, TaskChange>) {
          j["task"] = task_json(delta.updated);
        } else if constexpr (std::is_same_v<T, LocationChange>) {
          j["location"] = json::array({num(delta.location.x), num(delta.location.y)});
        } else if constexpr (std::is_same_v<T, Cancellation>) {
          json ids = json::array();
          for (auto t : delta.tasks) ids.push_back(t.value);
          j["tasks"] = ids;
        } else if constexpr (std::is_same_v<T, CapabilityChange>) {
          j["ram"] = num(delta.ram);
          j["bandwidth"] = num(delta.bandwidth);
          j["cpu_rate"] = num(delta.cpu_rate);
        }
      },
      e.delta);
  return j;
}

UncertainEvent event_from(const json& j, const std::string& path) {
  UncertainEvent e;
  e.id = EventId{ident(j, "id", path)};
  e.fire_at = real(j, "fire_at", path);
  const auto& kind_json = member(j, "kind", path);
  if (!kind_json.is_string()) fail(path + ".kind", "expected a string");
  auto kind = parse_event_kind(kind_json.get<std::string>());
  if (!kind) fail(path + ".kind", "unknown event kind \"" + kind_json.get<std::string>() + "\"");
  e.kind = *kind;
  switch (e.kind) {
    case EventKind::task_change:
      e.target = DeviceId{ident(j, "device", path)};
      e.delta = TaskChange{task_from(member(j, "task", path), path + ".task")};
      break;
    case EventKind::location_change: {
      e.target = DeviceId{ident(j, "device", path)};
      auto [x, y] = pair_of(member(j, "location", path), path + ".location");
      e.delta = LocationChange{{x, y}};
      break;
    }
    case EventKind::cancellation: {
      e.target = DeviceId{ident(j, "device", path)};
      const auto& ids = member(j, "tasks", path);
      if (!ids.is_array()) fail(path + ".tasks", "expected an array");
      Cancellation c;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto v = whole(ids[i], path + ".tasks[" + std::to_string(i) + "]");
        c.tasks.push_back(TaskId{static_cast<std::uint32_t>(v)});
      }
      e.delta = std::move(c);
      break;
    }
    case EventKind::capability_change:
      e.target = NodeId{ident(j, "node", path)};
      e.delta = CapabilityChange{real(j, "ram", path), real(j, "bandwidth", path), real(j, "cpu_rate", path)};
      break;
    case EventKind::disconnection:
      e.target = NodeId{ident(j, "node", path)};
      e.delta = Disconnection{};
      break;
  }
  return e;
}

std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

std::string to_json(const Scenario& s) {
  json root;
  json meta;
  meta["format"] = kFormat;
  meta["name"] = s.name;
  if (s.generated) {
    json generator = json::object();
    ScenarioSpec spec = s.spec;
    visit_spec(spec, Writer{generator});
    meta["generator"] = generator;
  }
  root["meta"] = meta;

  json nodes = json::array();
  for (const auto& n : s.nodes) {
    json j;
    j["id"] = n.id.value;
    j["kind"] = to_string(n.kind);
    j["location"] = json::array({num(n.location.x), num(n.location.y)});
    j["ram"] = num(n.ram);
    j["bandwidth"] = num(n.bandwidth);
    j["cpu_rate"] = num(n.cpu_rate);
    nodes.push_back(j);
  }
  root["nodes"] = nodes;

  json devices = json::array();
  for (const auto& d : s.devices) {
    json j;
    j["id"] = d.id.value;
    j["location"] = json::array({num(d.location.x), num(d.location.y)});
    j["gateway"] = d.gateway.value;
    json tasks = json::array();
    for (const auto& t : d.tasks) tasks.push_back(task_json(t));
    j["tasks"] = tasks;
    devices.push_back(j);
  }
  root["devices"] = devices;

  json rows = json::array();
  for (std::size_t r = 0; r < s.topology.order(); ++r) {
    std::string row;
    for (std::size_t c = 0; c < s.topology.order(); ++c) row += static_cast<char>('0' + s.topology.at(r, c));
    rows.push_back(row);
  }
  root["topology"] = rows;

  json events = json::array();
  for (const auto& e : s.events) events.push_back(event_json(e));
  root["events"] = events;
  return root.dump(1);
}

Scenario from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("scenario syntax error at " + locate(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                        e.what());
  }
  if (!root.is_object()) fail("<root>", "expected an object");

  Scenario s;
  const auto& meta = member(root, "meta", "<root>");
  if (auto it = meta.find("format"); it != meta.end() && *it != kFormat)
    fail("meta.format", "unsupported format " + it->dump());
  if (auto it = meta.find("name"); it != meta.end()) {
    if (!it->is_string()) fail("meta.name", "expected a string");
    s.name = it->get<std::string>();
  }
  const bool has_generator = meta.contains("generator");
  if (has_generator) visit_spec(s.spec, Reader{meta["generator"], "meta.generator"});
  s.generated = has_generator;

  const auto& nodes = member(root, "nodes", "<root>");
  if (!nodes.is_array()) fail("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const auto& j = nodes[i];
    Node n;
    n.id = NodeId{ident(j, "id", path)};
    if (n.id.index() != i) fail(path + ".id", "ids must equal the array position");
    const auto& kind = member(j, "kind", path);
    if (kind == "fog") n.kind = NodeKind::fog;
    else if (kind == "cloud") n.kind = NodeKind::cloud;
    else fail(path + ".kind", "expected \"fog\" or \"cloud\"");
    std::tie(n.location.x, n.location.y) = pair_of(member(j, "location", path), path + ".location");
    n.ram = real(j, "ram", path);
    n.bandwidth = real(j, "bandwidth", path);
    n.cpu_rate = real(j, "cpu_rate", path);
    if (!(n.ram > 0 && n.bandwidth > 0 && n.cpu_rate > 0)) fail(path, "capabilities must be positive");
    s.nodes.push_back(n);
  }

  const auto& devices = member(root, "devices", "<root>");
  if (!devices.is_array()) fail("devices", "expected an array");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string path = "devices[" + std::to_string(i) + "]";
    const auto& j = devices[i];
    IoTDevice d;
    d.id = DeviceId{ident(j, "id", path)};
    if (d.id.index() != i) fail(path + ".id", "ids must equal the array position");
    std::tie(d.location.x, d.location.y) = pair_of(member(j, "location", path), path + ".location");
    d.gateway = NodeId{ident(j, "gateway", path)};
    if (d.gateway.index() >= s.nodes.size() || !s.nodes[d.gateway.index()].is_fog())
      fail(path + ".gateway", "must name a fog node");
    const auto& tasks = member(j, "tasks", path);
    if (!tasks.is_array() || tasks.empty()) fail(path + ".tasks", "expected a non-empty array");
    for (std::size_t k = 0; k < tasks.size(); ++k)
      d.tasks.push_back(task_from(tasks[k], path + ".tasks[" + std::to_string(k) + "]"));
    s.devices.push_back(std::move(d));
  }

  const auto& rows = member(root, "topology", "<root>");
  if (!rows.is_array() || rows.size() != s.nodes.size()) fail("topology", "expected one row per node");
  s.topology = Topology(s.nodes.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string path = "topology[" + std::to_string(r) + "]";
    if (!rows[r].is_string()) fail(path, "expected a string of digits");
    const auto& row = rows[r].get_ref<const std::string&>();
    if (row.size() != s.nodes.size()) fail(path, "expected " + std::to_string(s.nodes.size()) + " cells");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] < '0' || row[c] > '9') fail(path, "cell " + std::to_string(c) + " is not a digit");
      s.topology.set(r, c, static_cast<std::uint8_t>(row[c] - '0'));
    }
  }
  if (auto v = validate_topology(s.topology)) fail("topology", v->message());

  const auto& events = member(root, "events", "<root>");
  if (!events.is_array()) fail("events", "expected an array");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string path = "events[" + std::to_string(i) + "]";
    auto e = event_from(events[i], path);
    if (auto why = validate_event(e, s.devices.size(), s.nodes.size()); !why.empty()) fail(path, why);
    s.events.push_back(std::move(e));
  }

  if (!has_generator) {
    s.spec.cloud_count = static_cast<std::size_t>(
        std::count_if(s.nodes.begin(), s.nodes.end(), [](const Node& n) { return !n.is_fog(); }));
    s.spec.fog_count = s.nodes.size() - s.spec.cloud_count;
    s.spec.device_count = s.devices.size();
  }
  return s;
}

void save(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioError("cannot write " + path.string());
  out << to_json(scenario) << '\n';
  if (!out) throw ScenarioError("write failed for " + path.string());
}

Scenario load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return from_json(buffer.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

}  // namespace fogsim
