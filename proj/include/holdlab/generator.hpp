#pragma once

#include <cstdint>

#include "holdlab/scenario.hpp"

namespace holdlab {

struct GenParams {
  int lines_min = 2, lines_max = 10;
  int stops_min = 16, stops_max = 25;
  double pax_min = 100.0, pax_max = 1100.0;  // per stop over the whole run
  double spacing_min = 400.0, spacing_max = 900.0;
  // departure interval sized so the busiest segment averages this share of capacity
  double target_load = 0.5;
  double interval_min = 120.0, interval_max = 600.0;

  void validate() const;
};

/// Random multi-line network with shared corridors copied from earlier
/// lines. Deterministic per seed.
ScenarioConfig gen_scenario(const GenParams& params, std::uint64_t seed);

/// Expected passengers generated at a stop over the run (all lines).
double expected_stop_total(const ScenarioConfig& s, StopIndex stop);

}  // namespace holdlab
