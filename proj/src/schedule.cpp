#include "fogsim/schedule.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fogsim {

std::optional<Interval> find_slot(std::span<const Slot> slots, double duration, SimTime earliest,
                                  std::optional<SimTime> horizon) {
  if (!(duration > 0.0)) throw std::invalid_argument("find_slot: duration must be positive");

  // Completions are sorted because slots are sorted and disjoint; everything
  // finishing at or before `earliest` cannot constrain the search.
  auto it = std::upper_bound(slots.begin(), slots.end(), earliest,
                             [](SimTime t, const Slot& s) { return t < s.completion; });
  SimTime cursor = earliest;
  for (; it != slots.end(); ++it) {
    if (it->start - cursor >= duration) break;
    cursor = std::max(cursor, it->completion);
  }
  const Interval found{cursor, cursor + duration};
  if (horizon && found.completion > *horizon) return std::nullopt;
  return found;
}

namespace {

bool overlaps(SimTime a0, SimTime a1, SimTime b0, SimTime b1) { return a0 < b1 && b0 < a1; }

}  // namespace

bool Schedule::fits(SimTime start, SimTime completion) const {
  auto it = std::upper_bound(slots_.begin(), slots_.end(), start,
                             [](SimTime t, const Slot& s) { return t < s.completion; });
  return it == slots_.end() || !overlaps(start, completion, it->start, it->completion);
}

bool Schedule::fits_except(SimTime start, SimTime completion, DeviceId ignore) const {
  for (const auto& s : slots_) {
    if (s.device == ignore) continue;
    if (s.start >= completion) break;
    if (overlaps(start, completion, s.start, s.completion)) return false;
  }
  return true;
}

void Schedule::insert(const Slot& slot) {
  if (!(slot.start < slot.completion)) {
    throw std::logic_error("slot for device " + std::to_string(slot.device.value) + " has empty interval");
  }
  if (find(slot.device)) {
    throw std::logic_error("device " + std::to_string(slot.device.value) + " already holds a slot");
  }
  if (!fits(slot.start, slot.completion)) {
    throw std::logic_error("slot for device " + std::to_string(slot.device.value) + " overlaps the schedule");
  }
  auto pos = std::upper_bound(slots_.begin(), slots_.end(), slot.start,
                              [](SimTime t, const Slot& s) { return t < s.start; });
  slots_.insert(pos, slot);
}

std::optional<Slot> Schedule::remove(DeviceId device) {
  auto it = std::find_if(slots_.begin(), slots_.end(), [&](const Slot& s) { return s.device == device; });
  if (it == slots_.end()) return std::nullopt;
  Slot out = *it;
  slots_.erase(it);
  return out;
}

const Slot* Schedule::find(DeviceId device) const {
  auto it = std::find_if(slots_.begin(), slots_.end(), [&](const Slot& s) { return s.device == device; });
  return it == slots_.end() ? nullptr : &*it;
}

std::optional<SimTime> Schedule::horizon() const {
  if (slots_.empty()) return std::nullopt;
  return slots_.back().completion;
}

bool Schedule::well_formed() const {
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    if (!(slots_[k].start < slots_[k].completion)) return false;
    if (k > 0 && slots_[k - 1].completion > slots_[k].start) return false;
  }
  return true;
}

}  // namespace fogsim
