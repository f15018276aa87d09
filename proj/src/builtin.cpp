#include "holdlab/builtin.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "holdlab/rng.hpp"

namespace holdlab {

namespace {

constexpr double kSpeed = 5.55;

// Single circular loop, constant speed, boarding-only dwell.
ScenarioConfig case1() {
  ScenarioConfig s;
  s.name = "case1";
  s.capacity = 1000;
  s.board_time_per_pax = 3.0;
  s.alight_time_per_pax = 0.0;
  LineConfig line;
  line.id = "1";
  line.circular = true;
  line.route_length = 10656.0;
  line.fleet_size = 6;
  line.departure_interval = 320.0;
  line.travel.model = TravelModel::Constant;
  line.travel.speed_mps = kSpeed;
  for (int k = 0; k < 8; ++k) {
    s.stops.push_back({"S" + std::to_string(k + 1)});
    line.stops.push_back({k, 666.0 + 1332.0 * k});
  }
  s.lines.push_back(line);

  // Rates are part of the scenario, not of the run seed.
  std::mt19937_64 rng(derive_seed(20240601, kStreamDemand));
  std::uniform_real_distribution<double> rate(40.0, 180.0);
  s.demand.hourly_multipliers = {0.6, 0.8, 1.2, 0.5};
  for (int k = 0; k < 8; ++k) s.demand.entries.push_back({k, 0, std::round(rate(rng) * 10.0) / 10.0, {}});
  return s;
}

// Two linear lines meeting on an 8-stop corridor: 10 own stops, the
// corridor, then 9 own stops.
ScenarioConfig case2() {
  ScenarioConfig s;
  s.name = "case2-synthetic";
  s.capacity = 120;
  s.board_time_per_pax = 3.0;
  s.alight_time_per_pax = 1.8;
  s.demand.rate_jitter = 0.1;
  const double corridor_gap = 600.0;
  for (int k = 0; k < 8; ++k) s.stops.push_back({"C" + std::to_string(k + 1)});

  const std::vector<std::pair<std::string, double>> defs{{"1", 24950.0}, {"52", 22580.0}};
  const std::vector<double> first{0.0, 150.0};
  for (std::size_t m = 0; m < defs.size(); ++m) {
    LineConfig line;
    line.id = defs[m].first;
    line.route_length = defs[m].second;
    line.departure_interval = 300.0;
    line.first_departure = first[m];
    line.fleet_size = 0;
    const double branch_gap = (line.route_length - 7 * corridor_gap) / 19.0;
    double pos = 0.0;
    for (int k = 0; k < 27; ++k) {
      StopIndex idx;
      if (k >= 10 && k < 18) {
        idx = k - 10;
      } else {
        idx = static_cast<StopIndex>(s.stops.size());
        const int own = k < 10 ? k + 1 : k - 7;
        s.stops.push_back({"L" + line.id + "-" + std::to_string(own)});
      }
      if (k > 0) pos += (k > 10 && k < 18) ? corridor_gap : branch_gap;
      if (k == 26) pos = line.route_length;
      line.stops.push_back({idx, pos});
    }
    line.travel.model = TravelModel::Gamma;
    line.travel.speed_mps = kSpeed;
    line.travel.gamma_shape = 4.0;
    for (std::size_t g = 0; g + 1 < line.stops.size(); ++g)
      line.travel.segment_mean_s.push_back((line.stops[g + 1].position - line.stops[g].position) / kSpeed);
    s.lines.push_back(line);
  }

  // Demand peaks towards the corridor and in the second hour; corridor
  // stops get a boost on each serving line. Rounded so the CSV copy is exact.
  const std::vector<double> hour_shape{0.8, 1.25, 1.0, 0.7};
  for (std::size_t m = 0; m < s.lines.size(); ++m) {
    const auto& line = s.lines[m];
    for (std::size_t k = 0; k + 1 < line.stops.size(); ++k) {
      const double x = (static_cast<double>(k) - 13.5) / 8.0;
      double base = 12.5 + 42.5 * std::exp(-x * x);
      if (k >= 10 && k < 18) base *= 1.3;
      if (m == 1) base *= 0.9;
      DemandEntry e;
      e.stop = line.stops[k].stop;
      e.line = static_cast<LineIndex>(m);
      for (double f : hour_shape) e.hourly_rates.push_back(std::round(base * f * 10.0) / 10.0);
      e.rate_pax_h = e.hourly_rates.front();
      s.demand.entries.push_back(e);
    }
  }
  return s;
}

// 1 line, 3 stops, 2 buses; small enough to enumerate every holding plan.
ScenarioConfig tiny() {
  ScenarioConfig s;
  s.name = "tiny";
  s.capacity = 60;
  s.board_time_per_pax = 3.0;
  s.alight_time_per_pax = 1.8;
  s.sim_duration_s = 1200;
  LineConfig line;
  line.id = "T";
  line.circular = true;
  line.route_length = 3000.0;
  line.fleet_size = 2;
  line.departure_interval = 200.0;
  line.travel.model = TravelModel::Constant;
  line.travel.speed_mps = kSpeed;
  for (int k = 0; k < 3; ++k) {
    s.stops.push_back({"T" + std::to_string(k + 1)});
    line.stops.push_back({k, 500.0 + 1000.0 * k});
    s.demand.entries.push_back({k, 0, 120.0 + 60.0 * k, {}});
  }
  s.lines.push_back(line);
  return s;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"case1", "case2-synthetic", "case2", "tiny"};
  return names;
}

ScenarioConfig builtin_scenario(std::string_view name) {
  ScenarioConfig s;
  if (name == "case1") s = case1();
  else if (name == "case2-synthetic" || name == "case2") s = case2();
  else if (name == "tiny") s = tiny();
  else throw ConfigError("unknown builtin scenario '" + std::string(name) + "'");
  validate(s);
  return s;
}

ScenarioConfig resolve_scenario(const std::string& spec) {
  constexpr std::string_view prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) return builtin_scenario(std::string_view(spec).substr(prefix.size()));
  return load_scenario(spec);
}

}  // namespace holdlab
