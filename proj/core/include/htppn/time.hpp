#pragma once

#include <cstdint>
#include <limits>

namespace htppn {

// Integer time base. kTimeInfinity is the "inf" sentinel used for open window
// upper bounds; arithmetic on it saturates.
using Time = std::int64_t;

inline constexpr Time kTimeInfinity = std::numeric_limits<Time>::max();

constexpr bool is_infinite(Time t) { return t == kTimeInfinity; }

constexpr Time saturating_add(Time a, Time b) {
  if (is_infinite(a) || is_infinite(b)) return kTimeInfinity;
  if (b > 0 && a > kTimeInfinity - b) return kTimeInfinity;
  return a + b;
}

struct TimeWindow {
  Time min = 0;
  Time max = kTimeInfinity;

  constexpr Time width() const {
    return is_infinite(max) ? kTimeInfinity : max - min;
  }
  constexpr bool bounded() const { return !is_infinite(max); }

  bool operator==(const TimeWindow&) const = default;
};

}  // namespace htppn
