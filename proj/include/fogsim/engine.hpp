#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "fogsim/protocol.hpp"

namespace fogsim {

/// Raised when an event handler throws; names the event and target agent.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void dispatch(const SimEvent& event) = 0;
};

struct EngineOptions {
  /// Simulated seconds between send() and delivery of a control message.
  double control_latency = 0.0;
};

/// Single-threaded discrete-event core. Events fire in (fire_at, seq) order,
/// so equal-time events keep their posting order.
class Engine {
 public:
  explicit Engine(EngineOptions options = {});

  SimTime now() const { return now_; }
  double control_latency() const { return options_.control_latency; }

  /// Enqueues an event; throws std::invalid_argument when `at` lies in the past.
  std::uint64_t post(SimTime at, Payload payload);

  /// Drains the queue (or stops at `until`, dispatching events at exactly
  /// `until`) and returns the final clock.
  SimTime run(EventSink& sink, std::optional<SimTime> until = std::nullopt);

  void register_agent(AgentRef agent);
  /// Unreachable agents stop receiving; messages to them are dead-lettered.
  void set_reachable(AgentId agent, bool reachable);
  bool reachable(AgentId agent) const;

  /// Posts a delivery at now + control_latency. Returns false and counts a
  /// dead letter when the recipient is unknown or unreachable right now.
  bool send(AgentRef from, AgentRef to, Message message);

  std::uint64_t messages_sent() const { return sent_; }
  std::uint64_t messages_delivered() const { return delivered_; }
  std::uint64_t dead_letters() const { return dead_letters_; }
  std::uint64_t events_dispatched() const { return dispatched_; }
  std::size_t pending() const { return queue_.size(); }

  /// Tab-separated `time, agent, event-kind, detail` line per dispatched event.
  void set_trace(std::ostream* trace) { trace_ = trace; }

 private:
  enum class AgentState : std::uint8_t { unknown, active, unreachable };

  void write_trace(const SimEvent& event) const;

  EngineOptions options_;
  SimTime now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::vector<SimEvent> queue_;
  std::vector<AgentState> agents_;
  std::uint64_t sent_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dead_letters_ = 0;
  std::uint64_t dispatched_ = 0;
  std::ostream* trace_ = nullptr;
};

}  // namespace fogsim
