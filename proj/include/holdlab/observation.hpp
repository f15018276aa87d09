#pragma once

#include <array>
#include <cstddef>

namespace holdlab {

/// Binary holding action. The numeric values are part of the reward
/// language contract: 0 holds for one more action step, 1 releases.
enum class Action : int { Hold = 0, Release = 1 };

constexpr int to_int(Action a) { return static_cast<int>(a); }

/// The 6-slot state seen by every stop agent, in raw units
/// (metres, passengers, seconds).
struct AgentObservation {
  enum Slot : std::size_t { kFwdSame = 0, kBwdSame, kFwdOther, kBwdOther, kOnboard, kHolding, kSize };

  std::array<double, kSize> values{};

  double fwd_same() const { return values[kFwdSame]; }
  double bwd_same() const { return values[kBwdSame]; }
  double fwd_other() const { return values[kFwdOther]; }
  double bwd_other() const { return values[kBwdOther]; }
  double onboard() const { return values[kOnboard]; }
  double holding() const { return values[kHolding]; }

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  bool operator==(const AgentObservation&) const = default;
};

}  // namespace holdlab
