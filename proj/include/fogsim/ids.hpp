#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>

namespace fogsim {

/// Integer identifier tagged by the entity it names, so a device id can never
/// be passed where a node id is expected.
template <class Tag>
struct StrongId {
  std::uint32_t value{};

  constexpr StrongId() = default;
  constexpr explicit StrongId(std::uint32_t v) : value(v) {}
  constexpr explicit StrongId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr explicit StrongId(int v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr std::size_t index() const { return value; }
  constexpr auto operator<=>(const StrongId&) const = default;
};

template <class Tag>
std::ostream& operator<<(std::ostream& os, StrongId<Tag> id) {
  return os << id.value;
}

using NodeId = StrongId<struct NodeIdTag>;
using DeviceId = StrongId<struct DeviceIdTag>;
using TaskId = StrongId<struct TaskIdTag>;
using EventId = StrongId<struct EventIdTag>;

/// Simulated time in seconds.
using SimTime = double;

}  // namespace fogsim

template <class Tag>
struct std::hash<fogsim::StrongId<Tag>> {
  std::size_t operator()(fogsim::StrongId<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
