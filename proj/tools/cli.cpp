#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "fogsim/format.hpp"
#include "fogsim/scenario.hpp"
#include "fogsim/simulation.hpp"

namespace fogsim::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string scenario;
  std::string scheduler = "agent";
  std::size_t theta = 20;
  double delta = 0.01;
  double period = 10.0;
  double control_latency = 0.0;
  std::string events = "off";
  bool no_balance = false;
  std::string out;
  std::string trace;
  std::string records;
  std::string loads;
  bool json = false;
  std::optional<std::uint64_t> seed;
};

struct GenerateOptions {
  ScenarioSpec spec;
  std::string topology = "random-geometric";
  std::string name;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_run_flags(CLI::App& cmd, RunOptions& o, bool single_theta) {
  cmd.add_option("-s,--scenario", o.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  cmd.add_option("--scheduler", o.scheduler, "Scheduler")
      ->check(CLI::IsMember({"agent", "rr", "minmin", "geo"}))
      ->capture_default_str();
  if (single_theta) cmd.add_option("--theta", o.theta, "Nodes contacted per round")->capture_default_str();
  cmd.add_option("--delta", o.delta, "Pair-variance threshold for migration")->capture_default_str();
  cmd.add_option("--period", o.period, "Balancing period in simulated seconds")->capture_default_str();
  cmd.add_option("--control-latency", o.control_latency, "Simulated seconds per control message")
      ->capture_default_str();
  cmd.add_option("--events", o.events, "Inject the scenario's uncertain events")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd.add_flag("--no-balance", o.no_balance, "Disable load balancing");
  cmd.add_option("--out", o.out, "Append CSV rows to this file");
  cmd.add_option("--seed", o.seed, "Regenerate the scenario from its generator settings with this seed");
}

std::optional<std::uint64_t> env_seed() {
  const char* text = std::getenv("FOGSIM_SEED");
  if (!text || !*text) return std::nullopt;
  std::uint64_t v = 0;
  const std::string_view s(text);
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) throw UsageError("FOGSIM_SEED is not an unsigned integer");
  return v;
}

Scenario load_scenario(const RunOptions& o, std::uint64_t& seed) {
  Scenario scenario = load(o.scenario);
  seed = scenario.spec.seed;
  if (o.seed && !scenario.generated) throw UsageError(o.scenario + " has no generator settings to reseed");
  const auto override_seed = o.seed ? o.seed : env_seed();
  if (override_seed && scenario.generated && *override_seed != scenario.spec.seed) {
    ScenarioSpec spec = scenario.spec;
    spec.seed = *override_seed;
    const std::string name = scenario.name;
    scenario = generate(spec);
    scenario.name = name;
    seed = *override_seed;
  }
  if (scenario.name.empty()) scenario.name = std::filesystem::path(o.scenario).stem().string();
  return scenario;
}

SimConfig make_config(const RunOptions& o, std::size_t theta) {
  SimConfig c;
  c.scheduler = *parse_scheduler(o.scheduler);
  c.theta = theta;
  c.delta = o.delta;
  c.balance_period = o.period;
  c.balancing = !o.no_balance;
  c.control_latency = o.control_latency;
  c.events = o.events == "on";
  if (auto why = validate_config(c); !why.empty()) throw UsageError(why);
  return c;
}

RunLabel make_label(const Scenario& s, std::uint64_t seed, const SimConfig& c) {
  return RunLabel{s.name, seed, to_string(c.scheduler), c.theta, c.delta};
}

void append_rows(const std::string& path, const std::vector<std::string>& rows) {
  if (path.empty()) return;
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot open " + path);
  if (fresh) f << csv_header() << '\n';
  for (const auto& r : rows) f << r << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

void summarize(std::ostream& err, const RunLabel& label, const RunResult& r) {
  const auto& m = r.metrics;
  err << label.scheduler << " theta=" << label.theta << ": makespan " << format_number(m.makespan) << " s, V(mu) "
      << format_number(m.fog_load_variance) << ", network " << format_number(m.network_usage) << " GB, SR "
      << format_number(m.success_rate) << " (" << m.succeeded_tasks << "/" << m.total_tasks << "), "
      << m.failed_devices << " failed devices, " << m.migrations << " migrations, " << r.records.size()
      << " events\n";
}

int cmd_generate(const GenerateOptions& o, std::ostream& err) {
  ScenarioSpec spec = o.spec;
  if (o.seed) spec.seed = *o.seed;
  else if (auto s = env_seed()) spec.seed = *s;
  if (o.topology == "ring-of-clusters") spec.topology_model = TopologyModel::ring_of_clusters;
  if (auto why = validate_spec(spec); !why.empty()) throw UsageError(why);
  Scenario s = generate(spec);
  if (!o.name.empty()) s.name = o.name;
  save(s, o.out);
  err << "wrote " << o.out << ": " << s.nodes.size() << " nodes, " << s.devices.size() << " devices, "
      << s.events.size() << " events, " << s.topology.edge_count() << " links\n";
  return ok;
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  const SimConfig base = make_config(o, o.theta);
  std::uint64_t seed = 0;
  const Scenario scenario = load_scenario(o, seed);

  SimConfig config = base;
  std::ofstream trace, loads;
  if (!o.trace.empty()) {
    trace = open_output(o.trace);
    config.trace = &trace;
  }
  if (!o.loads.empty()) {
    loads = open_output(o.loads);
    config.load_log = &loads;
  }
  const RunResult result = simulate(scenario, config);
  const RunLabel label = make_label(scenario, seed, config);

  if (!o.records.empty()) {
    auto f = open_output(o.records);
    f << records_csv_header() << '\n';
    for (const auto& r : result.records) f << records_csv_row(r) << '\n';
  }
  if (o.json) {
    out << json_summary(label, result.metrics) << '\n';
  } else {
    out << csv_header() << '\n' << csv_row(label, result.metrics) << '\n';
  }
  append_rows(o.out, {csv_row(label, result.metrics)});
  summarize(err, label, result);
  return ok;
}

std::vector<std::size_t> parse_theta_range(const std::string& text) {
  std::vector<std::size_t> values;
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) throw UsageError("bad theta range \"" + text + "\"");
    return v;
  };
  const auto first = text.find(':');
  if (first == std::string::npos) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(number(item));
  } else {
    const auto second = text.find(':', first + 1);
    const std::size_t lo = number(std::string_view(text).substr(0, first));
    const std::size_t hi = number(std::string_view(text).substr(
        first + 1, second == std::string::npos ? std::string::npos : second - first - 1));
    const std::size_t step = second == std::string::npos ? 1 : number(std::string_view(text).substr(second + 1));
    if (step == 0) throw UsageError("theta step must be positive");
    for (std::size_t t = lo; t <= hi; t += step) values.push_back(t);
  }
  if (values.empty()) throw UsageError("empty theta range \"" + text + "\"");
  for (auto t : values) {
    if (t == 0) throw UsageError("theta must be at least 1");
  }
  return values;
}

struct Job {
  SimConfig config;
};

std::vector<RunResult> run_all(const Scenario& scenario, const std::vector<SimConfig>& configs, unsigned jobs) {
  std::vector<RunResult> results(configs.size());
  jobs = std::max(1u, jobs);
  for (std::size_t begin = 0; begin < configs.size(); begin += jobs) {
    std::vector<std::future<RunResult>> batch;
    const std::size_t end = std::min(configs.size(), begin + jobs);
    for (std::size_t i = begin; i < end; ++i)
      batch.push_back(std::async(std::launch::async, [&, i] { return simulate(scenario, configs[i]); }));
    for (std::size_t i = begin; i < end; ++i) results[i] = batch[i - begin].get();
  }
  return results;
}

int emit_table(const Scenario& scenario, std::uint64_t seed, const std::vector<SimConfig>& configs,
               const RunOptions& o, unsigned jobs, std::ostream& out, std::ostream& err) {
  const auto results = run_all(scenario, configs, jobs);
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto label = make_label(scenario, seed, configs[i]);
    rows.push_back(csv_row(label, results[i].metrics));
    summarize(err, label, results[i]);
  }
  out << csv_header() << '\n';
  for (const auto& r : rows) out << r << '\n';
  append_rows(o.out, rows);
  return ok;
}

int cmd_sweep(const RunOptions& o, const std::string& range, unsigned jobs, std::ostream& out, std::ostream& err) {
  const auto thetas = parse_theta_range(range);
  std::vector<SimConfig> configs;
  for (auto t : thetas) configs.push_back(make_config(o, t));
  std::uint64_t seed = 0;
  const Scenario scenario = load_scenario(o, seed);
  return emit_table(scenario, seed, configs, o, jobs, out, err);
}

int cmd_compare(const RunOptions& o, unsigned jobs, std::ostream& out, std::ostream& err) {
  std::vector<SimConfig> configs;
  for (auto kind : {"agent", "rr", "minmin", "geo"}) {
    RunOptions copy = o;
    copy.scheduler = kind;
    configs.push_back(make_config(copy, o.theta));
  }
  std::uint64_t seed = 0;
  const Scenario scenario = load_scenario(o, seed);
  return emit_table(scenario, seed, configs, o, jobs, out, err);
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agent-based fog scheduling simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fogsim 1.0");

  GenerateOptions gen;
  auto* generate_cmd = app.add_subcommand("generate", "Write a seeded random scenario");
  generate_cmd->add_option("-o,--out", gen.out, "Scenario file to write")->required();
  generate_cmd->add_option("--devices", gen.spec.device_count, "IoT devices")->capture_default_str();
  generate_cmd->add_option("--fogs", gen.spec.fog_count, "Fog nodes")->capture_default_str();
  generate_cmd->add_option("--clouds", gen.spec.cloud_count, "Cloud nodes")->capture_default_str();
  generate_cmd->add_option("--seed", gen.seed, "Generator seed (falls back to FOGSIM_SEED, then 1)");
  generate_cmd->add_option("--event-probability", gen.spec.event_probability,
                           "Chance that a task, device or fog node draws one uncertain event")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  generate_cmd->add_option("--topology", gen.topology, "Topology model")
      ->check(CLI::IsMember({"random-geometric", "ring-of-clusters"}))
      ->capture_default_str();
  generate_cmd->add_option("--radius", gen.spec.radius, "Fog link range for random-geometric")
      ->capture_default_str();
  generate_cmd->add_option("--cloud-uplinks", gen.spec.cloud_uplinks, "Fogs each cloud links to (0 = all)")
      ->capture_default_str();
  generate_cmd->add_option("--name", gen.name, "Scenario name stored in the file");

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Simulate one configuration and print a CSV row");
  add_run_flags(*run_cmd, run, true);
  run_cmd->add_option("--trace", run.trace, "Write the event trace (time, agent, kind, detail)");
  run_cmd->add_option("--records", run.records, "Write rescheduling records as CSV");
  run_cmd->add_option("--loads", run.loads, "Write periodic load snapshots as CSV");
  run_cmd->add_flag("--json", run.json, "Print a JSON summary instead of CSV");

  RunOptions sweep;
  std::string range;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one simulation per theta value");
  add_run_flags(*sweep_cmd, sweep, false);
  sweep_cmd->add_option("--theta", range, "Range lo:hi:step or list a,b,c")->required();
  sweep_cmd->add_option("-j,--jobs", jobs, "Concurrent runs")->capture_default_str();

  RunOptions compare;
  auto* compare_cmd = app.add_subcommand("compare", "Run all four schedulers on one scenario");
  add_run_flags(*compare_cmd, compare, true);
  compare_cmd->add_option("-j,--jobs", jobs, "Concurrent runs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help;
    const int code = app.exit(e, help, help);
    if (e.get_exit_code() == 0) {
      out << help.str();
      return ok;
    }
    err << help.str();
    return code == 0 ? ok : usage;
  }

  try {
    if (*generate_cmd) return cmd_generate(gen, err);
    if (*run_cmd) return cmd_run(run, out, err);
    if (*sweep_cmd) return cmd_sweep(sweep, range, jobs, out, err);
    if (*compare_cmd) return cmd_compare(compare, jobs, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return runtime;
  }
  return usage;
}

}  // namespace fogsim::cli
