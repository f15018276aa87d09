#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace holdlab {

using StopIndex = int;
using LineIndex = int;

/// Raised for malformed or inconsistent scenario descriptions.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TravelModel { Constant, Gamma };

struct TravelTimeConfig {
  TravelModel model = TravelModel::Constant;
  double speed_mps = 5.55;
  // Gamma: one mean per segment (stop k -> k+1, plus the wrap segment on
  // circular lines).
  std::vector<double> segment_mean_s;
  double gamma_shape = 4.0;
};

struct LineStop {
  StopIndex stop = 0;
  double position = 0.0;  // metres from the line origin
};

struct LineConfig {
  std::string id;
  double route_length = 0.0;
  std::vector<LineStop> stops;
  double departure_interval = 0.0;
  // Circular lines: number of buses dispatched. Linear lines: cap on
  // dispatches, 0 means "dispatch every interval for the whole run".
  int fleet_size = 0;
  double first_departure = 0.0;
  bool circular = false;
  TravelTimeConfig travel;

  std::size_t segment_count() const {
    return circular ? stops.size() : (stops.empty() ? 0 : stops.size() - 1);
  }
  double segment_length(std::size_t k) const;
  /// Mean free-flow speed over the whole line.
  double mean_speed() const;
  /// Index into `stops` for a global stop, or -1.
  int stop_slot(StopIndex stop) const;
};

struct StopConfig {
  std::string id;
};

struct DemandEntry {
  StopIndex stop = 0;
  LineIndex line = 0;
  double rate_pax_h = 0.0;
  // Explicit per-hour rates (pax/h); when present they replace
  // rate_pax_h * hourly_multipliers.
  std::vector<double> hourly_rates;
};

struct DemandConfig {
  std::vector<double> hourly_multipliers;
  double rate_jitter = 0.0;  // each rate scaled by U[1-j, 1+j] per seed
  std::vector<DemandEntry> entries;

  /// Effective rate (pax/h) of an entry during hour `hour`, before jitter.
  double rate_at(const DemandEntry& e, std::size_t hour) const;
};

struct ScenarioConfig {
  std::string name;
  std::vector<StopConfig> stops;
  std::vector<LineConfig> lines;
  int capacity = 120;
  double board_time_per_pax = 3.0;
  double alight_time_per_pax = 1.8;
  int sim_duration_s = 14400;
  int action_step_s = 5;
  int max_hold_s = 90;
  DemandConfig demand;
  double shared_passenger_fraction = 1.0;
  // false: buses of a line leave a stop in arrival order (single berth).
  bool allow_overtaking = false;
  std::uint64_t seed = 0;

  int stop_index(std::string_view id) const;
  int line_index(std::string_view id) const;
  /// Lines serving a stop, in line order.
  std::vector<LineIndex> serving_lines(StopIndex stop) const;
  bool is_shared(StopIndex stop) const { return serving_lines(stop).size() > 1; }
};

/// Throws ConfigError on the first violated invariant.
void validate(const ScenarioConfig& scenario);

/// Reference space headway used by presets and input normalisation.
double ideal_headway(const ScenarioConfig& scenario);

nlohmann::json to_json(const ScenarioConfig& scenario);
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& scenario, const std::string& path);

/// Replaces the demand entries with rows from a CSV of
/// `stop,line,hour,rate` (header optional). Rates are pax/h for that hour.
void apply_demand_csv(ScenarioConfig& scenario, std::string_view csv_text);
std::string demand_to_csv(const ScenarioConfig& scenario);

}  // namespace holdlab
