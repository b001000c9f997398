#include "fogsim/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

#include "fogsim/format.hpp"
#include "fogsim/loadbalance.hpp"

namespace fogsim {

double makespan(std::span<const double> completions) {
  double best = 0.0;
  for (double c : completions) best = std::max(best, c);
  return best;
}

double load_variance(std::span<const double> loads) {
  if (loads.empty()) return 0.0;
  double mean = 0.0;
  for (double v : loads) mean += v;
  mean /= static_cast<double>(loads.size());
  double sum = 0.0;
  for (double v : loads) sum += (v - mean) * (v - mean);
  return sum / static_cast<double>(loads.size());
}

std::vector<double> fog_loads(std::span<const Node> nodes, std::span<const Schedule> schedules) {
  if (nodes.size() != schedules.size()) throw std::invalid_argument("one schedule per node required");
  std::vector<double> loads;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_fog()) loads.push_back(compute_load(schedules[i].slots(), 0.0, nodes[i].id).load);
  }
  return loads;
}

double network_usage(std::span<const Transfer> transfers) {
  double total = 0.0;
  for (const auto& t : transfers) total += t.gb * t.hops;
  return total;
}

double success_rate(std::size_t succeeded, std::size_t total) {
  if (succeeded > total) throw std::logic_error("more successful tasks than submitted tasks");
  if (total == 0) return 1.0;
  return static_cast<double>(succeeded) / static_cast<double>(total);
}

double mean_response_time(std::span<const ReschedulingRecord> records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.resolved) continue;
    sum += response_time(r);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::string csv_header() {
  return "scenario,seed,scheduler,theta,delta,makespan,variance,network_gb,sr,mean_response,decision_us";
}

std::string csv_row(const RunLabel& label, const RunMetrics& m) {
  std::string row;
  row += label.scenario;
  row += ',' + std::to_string(label.seed);
  row += ',' + label.scheduler;
  row += ',' + std::to_string(label.theta);
  row += ',' + format_number(label.delta);
  row += ',' + format_number(m.makespan);
  row += ',' + format_number(m.fog_load_variance);
  row += ',' + format_number(m.network_usage);
  row += ',' + format_number(m.success_rate);
  row += ',' + format_number(m.mean_response_time);
  row += ',' + format_number(m.decision_us);
  return row;
}

std::string json_summary(const RunLabel& label, const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["scenario"] = label.scenario;
  j["seed"] = label.seed;
  j["scheduler"] = label.scheduler;
  j["theta"] = label.theta;
  j["delta"] = label.delta;
  j["makespan"] = m.makespan;
  j["variance"] = m.fog_load_variance;
  j["network_gb"] = m.network_usage;
  j["sr"] = m.success_rate;
  j["mean_response"] = m.mean_response_time;
  j["decision_us"] = m.decision_us;
  j["succeeded_tasks"] = m.succeeded_tasks;
  j["total_tasks"] = m.total_tasks;
  j["failed_devices"] = m.failed_devices;
  j["event_warnings"] = m.event_warnings;
  j["migrations"] = m.migrations;
  return j.dump();
}

std::string records_csv_header() { return "event-id,kind,started,resolved,outcome"; }

std::string records_csv_row(const ReschedulingRecord& r) {
  std::string row = std::to_string(r.event.value);
  row += ',';
  row += to_string(r.kind);
  row += ',' + format_number(r.started);
  row += ',' + (r.resolved ? format_number(*r.resolved) : std::string{});
  row += ',';
  row += to_string(r.outcome);
  return row;
}

}  // namespace fogsim
