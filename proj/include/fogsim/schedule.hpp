#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fogsim/ids.hpp"

namespace fogsim {

/// Reserved execution window of one device batch on a node.
struct Slot {
  DeviceId device;
  SimTime start = 0.0;
  SimTime completion = 0.0;

  double length() const { return completion - start; }
  bool operator==(const Slot&) const = default;
};

struct Interval {
  SimTime start = 0.0;
  SimTime completion = 0.0;

  bool operator==(const Interval&) const = default;
};

/// Earliest gap of at least `duration` that starts no earlier than
/// `earliest`. `slots` must be sorted by start and pairwise disjoint. The tail
/// gap is unbounded unless `horizon` caps the latest admissible completion.
/// Throws std::invalid_argument when duration <= 0.
std::optional<Interval> find_slot(std::span<const Slot> slots, double duration, SimTime earliest,
                                  std::optional<SimTime> horizon = std::nullopt);

/// Sorted, pairwise non-overlapping slot list with at most one slot per device.
/// Touching intervals ([0,10] then [10,15]) do not overlap.
class Schedule {
 public:
  std::span<const Slot> slots() const { return slots_; }
  std::size_t size() const { return slots_.size(); }
  bool empty() const { return slots_.empty(); }

  /// True when [start, completion) intersects no existing slot.
  bool fits(SimTime start, SimTime completion) const;

  /// Same as fits() but ignores the slot owned by `ignore`.
  bool fits_except(SimTime start, SimTime completion, DeviceId ignore) const;

  /// Throws std::logic_error on overlap, duplicate device, or empty interval.
  void insert(const Slot& slot);

  std::optional<Slot> remove(DeviceId device);
  const Slot* find(DeviceId device) const;

  /// Latest completion, or nullopt when empty.
  std::optional<SimTime> horizon() const;

  std::optional<Interval> find_slot(double duration, SimTime earliest,
                                    std::optional<SimTime> horizon = std::nullopt) const {
    return fogsim::find_slot(slots_, duration, earliest, horizon);
  }

  /// Re-checks sortedness and disjointness; used by soundness checks.
  bool well_formed() const;

  bool operator==(const Schedule&) const = default;

 private:
  std::vector<Slot> slots_;
};

}  // namespace fogsim
