#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "holdlab/scenario.hpp"

namespace holdlab {

struct PassengerRecord {
  int id = 0;
  StopIndex origin_stop = 0;
  // Line actually boarded; equals generated_line until boarding.
  LineIndex line = 0;
  LineIndex generated_line = 0;
  double arrive_time = 0.0;
  StopIndex alight_stop = 0;
  std::optional<double> board_time;
  std::optional<double> alight_time;
  bool shared = false;
  std::uint64_t feasible_lines = 0;  // bit m set: line m may carry this rider
  int bus = -1;

  bool can_ride(LineIndex m) const { return (feasible_lines >> m) & 1u; }
  bool operator==(const PassengerRecord&) const = default;
};

/// Piecewise-homogeneous Poisson arrivals per (stop, line) demand entry,
/// destinations uniform over downstream stops, sorted by arrival time and
/// numbered 0..n-1. Throws ConfigError for demand at a stop with nowhere
/// to go.
std::vector<PassengerRecord> generate_passengers(const ScenarioConfig& scenario, std::uint64_t seed);

/// Slots downstream of `origin_slot` on a line, in travel order.
std::vector<int> downstream_slots(const LineConfig& line, int origin_slot);

}  // namespace holdlab
