#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace holdlab {

/// Broken simulator invariant (capacity overflow, negative counts...).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Dwell is whichever of the boarding and alighting streams takes longer.
inline double dwell_time(int boarding, int alighting, double board_s_per_pax, double alight_s_per_pax) {
  return std::max(board_s_per_pax * boarding, alight_s_per_pax * alighting);
}

struct BoardingOutcome {
  int boarded = 0;
  int holdup = 0;
  bool operator==(const BoardingOutcome&) const = default;
};

/// Capacity-limited boarding. `onboard` is the load on arrival, before
/// `alighting` riders leave.
inline BoardingOutcome boarding_count(int waiting, int capacity, int onboard, int alighting) {
  if (waiting < 0 || capacity < 0 || onboard < 0 || alighting < 0)
    throw InvariantViolation("boarding_count: negative count");
  if (onboard > capacity)
    throw InvariantViolation("boarding_count: onboard " + std::to_string(onboard) + " exceeds capacity " +
                             std::to_string(capacity));
  const int slack = capacity - onboard + alighting;
  BoardingOutcome out;
  out.boarded = std::min(waiting, slack);
  out.holdup = std::max(0, waiting - slack);
  return out;
}

struct HeadwayPair {
  double forward = 0.0;
  double backward = 0.0;
  bool operator==(const HeadwayPair&) const = default;
};

struct AxisBus {
  int id = 0;
  double position = 0.0;
  long long order = 0;  // tie-break at equal positions: lower (order, id) is ahead
};

/// Nearest forward/backward distance from `x` to the other buses on one
/// line axis of length `length`. Equal positions: the lower (order, id)
/// is ahead.
/// Missing neighbour: the full loop on circular lines, otherwise the
/// distance to the terminus (forward) or origin (backward).
inline HeadwayPair axis_headways(double x, int self_id, const std::vector<AxisBus>& others, double length,
                                 bool circular, long long self_order = 0) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double fwd = inf;
  double bwd = inf;
  for (const AxisBus& o : others) {
    if (o.id == self_id) continue;
    const double p = o.position;
    const bool ahead = o.order < self_order || (o.order == self_order && o.id < self_id);
    if (circular) {
      const double d = std::fmod(p - x + length, length);
      if (d == 0.0) {
        if (ahead) fwd = 0.0;
        else bwd = 0.0;
        continue;
      }
      fwd = std::min(fwd, d);
      bwd = std::min(bwd, length - d);
    } else {
      if (p > x || (p == x && ahead)) fwd = std::min(fwd, p - x);
      if (p < x || (p == x && !ahead)) bwd = std::min(bwd, x - p);
    }
  }
  if (fwd == inf) fwd = circular ? length : length - x;
  if (bwd == inf) bwd = circular ? length : x;
  return {std::clamp(fwd, 0.0, length), std::clamp(bwd, 0.0, length)};
}

}  // namespace holdlab
