#include "fogsim/engine.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <type_traits>

#include "fogsim/format.hpp"

namespace fogsim {

std::string to_string(const AgentRef& ref) {
  const char* prefix = ref.role == AgentRole::node_agent     ? "node-agent:"
                       : ref.role == AgentRole::device_agent ? "device-agent:"
                                                             : "central-planner:";
  return prefix + std::to_string(ref.id.value);
}

const char* message_name(const Message& message) {
  return std::visit(
      [](const auto& m) -> const char* {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, msg::Request>) return "request";
        else if constexpr (std::is_same_v<T, msg::Accept>) return "accept";
        else if constexpr (std::is_same_v<T, msg::Reject>) return "reject";
        else if constexpr (std::is_same_v<T, msg::Propose>) return "propose";
        else if constexpr (std::is_same_v<T, msg::Refuse>) return "refuse";
        else if constexpr (std::is_same_v<T, msg::Confirm>) return "confirm";
        else if constexpr (std::is_same_v<T, msg::Stale>) return "stale";
        else if constexpr (std::is_same_v<T, msg::LoadQuery>) return "load-query";
        else if constexpr (std::is_same_v<T, msg::LoadReport>) return "load-report";
        else if constexpr (std::is_same_v<T, msg::MigrationRequest>) return "migration-request";
        else if constexpr (std::is_same_v<T, msg::MigrationAccepted>) return "migration-accepted";
        else return "migration-refused";
      },
      message);
}

const char* to_string(TimerKind kind) {
  switch (kind) {
    case TimerKind::device_start: return "device-start";
    case TimerKind::round_timeout: return "round-timeout";
    case TimerKind::accept_timeout: return "accept-timeout";
    case TimerKind::balance_tick: return "balance-tick";
    case TimerKind::balance_timeout: return "balance-timeout";
    case TimerKind::migration_timeout: return "migration-timeout";
    case TimerKind::central_replan: return "central-replan";
  }
  return "timer";
}

namespace {

struct Later {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
    return a.seq > b.seq;
  }
};

std::string describe(const SimEvent& event, std::string* agent) {
  std::ostringstream detail;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MessageDelivery>) {
          *agent = to_string(p.to);
          detail << message_name(p.message) << " from " << to_string(p.from);
        } else if constexpr (std::is_same_v<T, Timer>) {
          *agent = to_string(p.agent);
          detail << to_string(p.kind) << " token " << p.token;
        } else if constexpr (std::is_same_v<T, Injection>) {
          *agent = "-";
          detail << "uncertain-event " << p.event.value;
        } else {
          *agent = "node-agent:" + std::to_string(p.node.value);
          detail << "device " << p.device.value << " generation " << p.generation;
        }
      },
      event.payload);
  return detail.str();
}

const char* kind_name(const Payload& payload) {
  switch (payload.index()) {
    case 0: return "message-delivery";
    case 1: return "timer";
    case 2: return "uncertainty-injection";
    default: return "task-execution-complete";
  }
}

}  // namespace

Engine::Engine(EngineOptions options) : options_(options) {
  if (options_.control_latency < 0.0) throw std::invalid_argument("control latency must be non-negative");
}

std::uint64_t Engine::post(SimTime at, Payload payload) {
  if (at < now_) {
    throw std::invalid_argument("event at t=" + format_number(at) + " is before the clock t=" + format_number(now_));
  }
  const auto seq = next_seq_++;
  queue_.push_back(SimEvent{at, seq, std::move(payload)});
  std::push_heap(queue_.begin(), queue_.end(), Later{});
  return seq;
}

void Engine::register_agent(AgentRef agent) {
  if (agent.id.index() >= agents_.size()) agents_.resize(agent.id.index() + 1, AgentState::unknown);
  if (agents_[agent.id.index()] != AgentState::unknown) {
    throw std::invalid_argument("agent id " + std::to_string(agent.id.value) + " registered twice");
  }
  agents_[agent.id.index()] = AgentState::active;
}

void Engine::set_reachable(AgentId agent, bool reachable) {
  if (agent.index() >= agents_.size() || agents_[agent.index()] == AgentState::unknown) {
    throw std::invalid_argument("unknown agent " + std::to_string(agent.value));
  }
  agents_[agent.index()] = reachable ? AgentState::active : AgentState::unreachable;
}

bool Engine::reachable(AgentId agent) const {
  return agent.index() < agents_.size() && agents_[agent.index()] == AgentState::active;
}

bool Engine::send(AgentRef from, AgentRef to, Message message) {
  ++sent_;
  if (!reachable(to.id)) {
    ++dead_letters_;
    return false;
  }
  post(now_ + options_.control_latency, MessageDelivery{from, to, std::move(message)});
  return true;
}

void Engine::write_trace(const SimEvent& event) const {
  std::string agent;
  const auto detail = describe(event, &agent);
  *trace_ << format_number(event.fire_at) << '\t' << agent << '\t' << kind_name(event.payload) << '\t' << detail
          << '\n';
}

SimTime Engine::run(EventSink& sink, std::optional<SimTime> until) {
  while (!queue_.empty()) {
    if (until && queue_.front().fire_at > *until) break;
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    SimEvent event = std::move(queue_.back());
    queue_.pop_back();
    now_ = event.fire_at;

    if (auto* delivery = std::get_if<MessageDelivery>(&event.payload)) {
      if (!reachable(delivery->to.id)) {
        ++dead_letters_;
        continue;
      }
      ++delivered_;
    }
    ++dispatched_;
    if (trace_) write_trace(event);
    try {
      sink.dispatch(event);
    } catch (const std::exception& e) {
      std::string agent;
      const auto detail = describe(event, &agent);
      throw SimulationError("handler fault at t=" + format_number(event.fire_at) + " in " + agent + " (" +
                            kind_name(event.payload) + ": " + detail + "): " + e.what());
    }
  }
  if (until && *until > now_) now_ = *until;
  return now_;
}

}  // namespace fogsim
