#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fogsim/model.hpp"
#include "fogsim/resched.hpp"
#include "fogsim/schedule.hpp"

namespace fogsim {

struct RunMetrics {
  double makespan = 0.0;            // seconds
  double fog_load_variance = 0.0;   // V(μ) over fog nodes
  double network_usage = 0.0;       // GB × hops
  double success_rate = 1.0;
  double mean_response_time = 0.0;  // seconds, over resolved records
  double decision_us = 0.0;         // host wall clock, informational only

  std::size_t succeeded_tasks = 0;
  std::size_t total_tasks = 0;
  std::size_t failed_devices = 0;   // devices that never executed
  std::size_t event_warnings = 0;   // events that hit finished or absent work
  std::size_t migrations = 0;

  bool operator==(const RunMetrics&) const = default;
};

/// Largest completion time; 0 for an empty run.
double makespan(std::span<const double> completions);

/// Population variance; 0 for an empty sample.
double load_variance(std::span<const double> loads);

/// Whole-run load (reference time 0) of every fog node, in id order.
std::vector<double> fog_loads(std::span<const Node> nodes, std::span<const Schedule> schedules);

struct Transfer {
  double gb = 0.0;
  int hops = 0;
};

double network_usage(std::span<const Transfer> transfers);

/// SN / TN, 1 when TN = 0. Throws std::logic_error when SN > TN.
double success_rate(std::size_t succeeded, std::size_t total);

/// Mean response time over resolved records; 0 when none are resolved.
double mean_response_time(std::span<const ReschedulingRecord> records);

struct RunLabel {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string scheduler;
  std::size_t theta = 0;
  double delta = 0.0;
};

std::string csv_header();
std::string csv_row(const RunLabel& label, const RunMetrics& metrics);

/// One-object JSON summary of a run.
std::string json_summary(const RunLabel& label, const RunMetrics& metrics);

std::string records_csv_header();
std::string records_csv_row(const ReschedulingRecord& record);

}  // namespace fogsim
