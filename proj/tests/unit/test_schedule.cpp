#include "doctest.h"

#include <algorithm>

#include "fogsim/schedule.hpp"
#include "support.hpp"

using namespace fogsim;
using namespace fogsim::testing;

namespace {

Slot slot(std::uint32_t d, double s, double c) { return Slot{DeviceId(d), s, c}; }

// Every candidate start is either `earliest` or the end of some slot; take
// the smallest one whose window is free.
std::optional<Interval> brute_force_gap(const std::vector<Slot>& slots, double duration, double earliest) {
  std::vector<double> starts{earliest};
  for (const auto& s : slots)
    if (s.completion >= earliest) starts.push_back(s.completion);
  std::sort(starts.begin(), starts.end());
  for (double st : starts) {
    const bool free = std::none_of(slots.begin(), slots.end(), [&](const Slot& s) {
      return st < s.completion && s.start < st + duration;
    });
    if (free) return Interval{st, st + duration};
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("find_slot examples") {
    std::vector<Slot> none;
    CHECK(find_slot(none, 10, 0) == Interval{0, 10});
    std::vector<Slot> one{slot(0, 0, 10)};
    CHECK(find_slot(one, 5, 0) == Interval{10, 15});
    std::vector<Slot> two{slot(0, 0, 10), slot(1, 20, 30)};
    CHECK(find_slot(two, 5, 2) == Interval{10, 15});
    CHECK(find_slot(two, 11, 2) == Interval{30, 41});
    CHECK_THROWS_AS(find_slot(two, 0, 0), std::invalid_argument);
  }

  TEST_CASE("horizon caps the tail gap") {
    std::vector<Slot> one{slot(0, 0, 10)};
    CHECK(find_slot(one, 5, 0, 15.0) == Interval{10, 15});
    CHECK_FALSE(find_slot(one, 5, 0, 14.0));
  }

  TEST_CASE("touching intervals do not overlap") {
    Schedule s;
    s.insert(slot(0, 0, 10));
    CHECK(s.fits(10, 15));
    s.insert(slot(1, 10, 15));
    CHECK_FALSE(s.fits(9, 11));
    CHECK_THROWS_AS(s.insert(slot(2, 14, 16)), std::logic_error);
    CHECK_THROWS_AS(s.insert(slot(0, 20, 21)), std::logic_error);
    CHECK_THROWS_AS(s.insert(slot(3, 20, 20)), std::logic_error);
    CHECK(s.horizon() == 15.0);
  }

  TEST_CASE("remove and fits_except") {
    Schedule s;
    s.insert(slot(0, 0, 10));
    s.insert(slot(1, 20, 30));
    CHECK(s.fits_except(5, 25, DeviceId(9)) == false);
    CHECK(s.fits_except(12, 28, DeviceId(1)));
    CHECK(s.remove(DeviceId(1)) == slot(1, 20, 30));
    CHECK_FALSE(s.remove(DeviceId(1)));
    CHECK(s.size() == 1);
  }

  TEST_CASE("find_slot agrees with gap enumeration on random schedules") {
    Gen g(21);
    for (int i = 0; i < 400; ++i) {
      const auto slots = g.slots(8);
      const double duration = g.real(0.5, 40.0);
      const double earliest = g.real(0.0, 150.0);
      const auto got = find_slot(slots, duration, earliest);
      const auto want = brute_force_gap(slots, duration, earliest);
      REQUIRE(got);
      CHECK(got->start == doctest::Approx(want->start));
      CHECK(got->completion - got->start == doctest::Approx(duration));

      Schedule s;
      for (const auto& x : slots) s.insert(x);
      CHECK(s.fits(got->start, got->completion));
      s.insert(Slot{DeviceId(100), got->start, got->completion});
      CHECK(s.well_formed());
    }
  }
}
