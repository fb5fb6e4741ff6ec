#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htppn/errors.hpp"
#include "htppn/model.hpp"
#include "htppn/time.hpp"

namespace htppn {

/// Timing verdict for one concrete transition.
///
/// enable_*      when the transition can become enabled (absolute time)
/// teb_*         its own firing window after enabling
/// completion_*  enable + teb + duration
///
/// Inside a loop body the bounds are the hull over all iterations.
struct ScheduleWindow {
  std::string transition;
  Time enable_min = 0;
  Time enable_max = 0;
  Time teb_min = 0;
  Time teb_max = 0;
  Time completion_min = 0;
  Time completion_max = 0;
  bool schedulable = false;  // teb_max - teb_min > 0
  bool reachable = true;     // a token can reach every input place

  bool operator==(const ScheduleWindow&) const = default;
};

struct TimingViolation {
  std::string transition;
  std::string reason;

  bool operator==(const TimingViolation&) const = default;
};

struct SchedulabilityReport {
  std::vector<ScheduleWindow> windows;  // sorted by transition id
  // Every concrete transition on an input-to-output path is schedulable.
  bool consistent = true;
  std::vector<TimingViolation> violations;

  const ScheduleWindow* find(std::string_view transition) const;

  bool operator==(const SchedulabilityReport&) const = default;
};

/// Forward interval propagation from the input place at [0,0]. A place's
/// arrival is the hull over its producers, shifted by the place window; a
/// transition is enabled at the componentwise max over its input places.
/// Loop back-edges (arcs out of a dummy carrying `iterations`) are unrolled
/// ceil(k) times first. Throws CyclicTiming if a cycle remains.
SchedulabilityReport propagate_windows(const FlatNet& net);

enum class PolicyKind { Earliest, Latest, Random };

struct Policy {
  PolicyKind kind = PolicyKind::Earliest;
  std::uint64_t seed = 0;

  static Policy earliest() { return {PolicyKind::Earliest, 0}; }
  static Policy latest() { return {PolicyKind::Latest, 0}; }
  static Policy random(std::uint64_t seed) { return {PolicyKind::Random, seed}; }
};

struct TraceStep {
  Time fire_time = 0;
  Time completion_time = 0;
  std::string transition;
  Marking marking_after;

  bool operator==(const TraceStep&) const = default;
};

struct Trace {
  std::vector<TraceStep> steps;
  Marking final_marking;

  bool operator==(const Trace&) const = default;
};

class Deadlock : public Error {
 public:
  explicit Deadlock(Trace trace)
      : Error("deadlock: no transition can fire and the output place is unmarked"), trace_(std::move(trace)) {}

  const Trace& trace() const { return trace_; }

 private:
  Trace trace_;
};

inline constexpr std::size_t kDefaultStepLimit = 100'000;

/// Timed token game. Each enabled transition draws a firing time from its
/// window when it becomes enabled (lower bound, upper bound, or uniform per
/// policy; an open upper bound counts as the lower bound); the earliest
/// planned firing happens next, ties to the lowest id. Choices between
/// dummy guards follow their probabilities (random) or the most likely guard
/// (earliest/latest). A loop back-edge fires ceil(k) - 1 times per entry.
/// Stops once the output place is marked. Throws Deadlock when stuck, and
/// Error when the step limit is exceeded.
Trace simulate_run(const FlatNet& net, const Policy& policy, std::size_t step_limit = kDefaultStepLimit);

/// "p:1,q:2"
std::string format_marking(const Marking& marking);

}  // namespace htppn
