#pragma once

#include <memory>
#include <string>
#include <vector>

#include "holdlab/scenario.hpp"
#include "holdlab/simulation.hpp"

namespace holdlab::test {

// Linear line with stops at the given positions; constant speed.
inline ScenarioConfig linear_scenario(const std::vector<double>& positions, double interval, int fleet,
                                      double first = 0.0, int duration = 3600) {
  ScenarioConfig s;
  s.name = "linear";
  s.sim_duration_s = duration;
  LineConfig line;
  line.id = "A";
  line.route_length = positions.back();
  line.departure_interval = interval;
  line.fleet_size = fleet;
  line.first_departure = first;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    s.stops.push_back({"s" + std::to_string(k)});
    line.stops.push_back({static_cast<StopIndex>(k), positions[k]});
  }
  s.lines.push_back(line);
  return s;
}

class AlwaysHold final : public ControllerHook {
 public:
  Action decide(const DecisionPoint& p) override {
    max_offered = std::max(max_offered, p.holding_elapsed);
    ++decisions;
    return Action::Hold;
  }
  int max_offered = 0;
  int decisions = 0;
};

}  // namespace holdlab::test
