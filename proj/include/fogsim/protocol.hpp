#pragma once

// Vocabulary of everything the engine can deliver: agent-to-agent messages,
// timers, uncertainty injections and execution completions.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fogsim/ids.hpp"
#include "fogsim/model.hpp"
#include "fogsim/negotiation.hpp"
#include "fogsim/schedule.hpp"

namespace fogsim {

using AgentId = StrongId<struct AgentIdTag>;

enum class AgentRole : std::uint8_t { device_agent, node_agent, central_planner };

struct AgentRef {
  AgentId id;
  AgentRole role = AgentRole::node_agent;

  bool operator==(const AgentRef&) const = default;
};

std::string to_string(const AgentRef& ref);

namespace msg {

// Device agent -> node agent.
struct Request {
  std::uint64_t token;
  BatchSummary batch;
};
struct Accept {
  std::uint64_t token;
  BatchSummary batch;
  Proposal proposal;
};
struct Reject {
  std::uint64_t token;
};

// Node agent -> device agent.
struct Propose {
  std::uint64_t token;
  Proposal proposal;
};
struct Refuse {
  std::uint64_t token;
};
struct Confirm {
  std::uint64_t token;
  Contract contract;
};
struct Stale {
  std::uint64_t token;
};

// Node agent <-> node agent (load balancing).
struct LoadQuery {
  std::uint64_t round;
};
struct LoadReport {
  std::uint64_t round;
  double load;
  Node node;
  std::vector<Slot> schedule;
};
struct MigrationRequest {
  std::uint64_t round;
  BatchSummary batch;
  Interval window;
  double et;
};
struct MigrationAccepted {
  DeviceId device;
};
struct MigrationRefused {
  DeviceId device;
};

}  // namespace msg

using Message = std::variant<msg::Request, msg::Accept, msg::Reject, msg::Propose, msg::Refuse, msg::Confirm,
                             msg::Stale, msg::LoadQuery, msg::LoadReport, msg::MigrationRequest,
                             msg::MigrationAccepted, msg::MigrationRefused>;

const char* message_name(const Message& message);

enum class TimerKind : std::uint8_t {
  device_start,
  round_timeout,
  accept_timeout,
  balance_tick,
  balance_timeout,
  migration_timeout,
  central_replan,
};

const char* to_string(TimerKind kind);

struct MessageDelivery {
  AgentRef from;
  AgentRef to;
  Message message;
};

struct Timer {
  AgentRef agent;
  TimerKind kind;
  std::uint64_t token = 0;
};

struct Injection {
  EventId event;
};

struct ExecutionComplete {
  NodeId node;
  DeviceId device;
  std::uint32_t generation = 0;
};

using Payload = std::variant<MessageDelivery, Timer, Injection, ExecutionComplete>;

struct SimEvent {
  SimTime fire_at = 0.0;
  std::uint64_t seq = 0;
  Payload payload;
};

}  // namespace fogsim
