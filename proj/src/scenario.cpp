#include "holdlab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace holdlab {

using nlohmann::json;

double LineConfig::segment_length(std::size_t k) const {
  const double from = stops.at(k).position;
  if (k + 1 < stops.size()) return stops[k + 1].position - from;
  // wrap segment of a circular line
  return route_length - from + stops.front().position;
}

double LineConfig::mean_speed() const {
  if (travel.model == TravelModel::Constant) return travel.speed_mps;
  double length = 0.0;
  double time = 0.0;
  for (std::size_t k = 0; k < segment_count(); ++k) {
    length += segment_length(k);
    time += travel.segment_mean_s.at(k);
  }
  return time > 0.0 ? length / time : 0.0;
}

int LineConfig::stop_slot(StopIndex stop) const {
  for (std::size_t k = 0; k < stops.size(); ++k)
    if (stops[k].stop == stop) return static_cast<int>(k);
  return -1;
}

double DemandConfig::rate_at(const DemandEntry& e, std::size_t hour) const {
  if (!e.hourly_rates.empty())
    return e.hourly_rates[std::min(hour, e.hourly_rates.size() - 1)];
  if (hourly_multipliers.empty()) return e.rate_pax_h;
  return e.rate_pax_h * hourly_multipliers[std::min(hour, hourly_multipliers.size() - 1)];
}

int ScenarioConfig::stop_index(std::string_view id) const {
  for (std::size_t i = 0; i < stops.size(); ++i)
    if (stops[i].id == id) return static_cast<int>(i);
  return -1;
}

int ScenarioConfig::line_index(std::string_view id) const {
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lines[i].id == id) return static_cast<int>(i);
  return -1;
}

std::vector<LineIndex> ScenarioConfig::serving_lines(StopIndex stop) const {
  std::vector<LineIndex> out;
  for (std::size_t m = 0; m < lines.size(); ++m)
    if (lines[m].stop_slot(stop) >= 0) out.push_back(static_cast<LineIndex>(m));
  return out;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void validate(const ScenarioConfig& s) {
  require(!s.lines.empty(), "scenario has no lines");
  require(s.lines.size() <= 64, "at most 64 lines are supported");
  require(s.capacity > 0, "capacity must be positive");
  require(s.board_time_per_pax >= 0 && s.alight_time_per_pax >= 0,
          "per-passenger boarding/alighting times must be >= 0");
  require(s.sim_duration_s > 0, "sim_duration_s must be positive");
  require(s.action_step_s > 0, "action_step_s must be positive");
  require(s.max_hold_s > 0 && s.max_hold_s % s.action_step_s == 0,
          "max_hold_s must be a positive multiple of action_step_s");
  require(s.shared_passenger_fraction >= 0 && s.shared_passenger_fraction <= 1,
          "shared_passenger_fraction must lie in [0,1]");
  require(s.demand.rate_jitter >= 0 && s.demand.rate_jitter < 1, "rate_jitter must lie in [0,1)");
  for (double m : s.demand.hourly_multipliers) require(m >= 0, "hourly multipliers must be >= 0");

  std::map<std::string, int> seen;
  for (const auto& st : s.stops) require(seen[st.id]++ == 0, "duplicate stop id " + st.id);
  seen.clear();
  for (const auto& line : s.lines) {
    const std::string tag = "line " + line.id + ": ";
    require(seen[line.id]++ == 0, "duplicate line id " + line.id);
    require(line.stops.size() >= 2, tag + "needs at least two stops");
    require(line.route_length > 0, tag + "route_length must be positive");
    require(line.departure_interval > 0, tag + "departure_interval must be positive");
    require(line.first_departure >= 0, tag + "first_departure must be >= 0");
    require(line.fleet_size >= 0, tag + "fleet_size must be >= 0");
    if (line.circular) require(line.fleet_size > 0, tag + "circular lines need fleet_size > 0");
    else require(line.stops.front().position == 0.0, tag + "linear lines start at a stop at position 0");
    std::map<int, int> stop_seen;
    for (std::size_t k = 0; k < line.stops.size(); ++k) {
      const auto& ls = line.stops[k];
      require(ls.stop >= 0 && ls.stop < static_cast<int>(s.stops.size()), tag + "unknown stop");
      require(stop_seen[ls.stop]++ == 0, tag + "stop listed twice");
      require(ls.position >= 0, tag + "negative stop position");
      if (k > 0) require(ls.position > line.stops[k - 1].position, tag + "stop positions must increase");
      if (line.circular) require(ls.position < line.route_length, tag + "stop beyond route_length");
      else require(ls.position <= line.route_length, tag + "stop beyond route_length");
    }
    if (line.travel.model == TravelModel::Constant) {
      require(line.travel.speed_mps > 0, tag + "speed must be positive");
    } else {
      require(line.travel.segment_mean_s.size() == line.segment_count(),
              tag + "gamma model needs one mean per segment");
      require(line.travel.gamma_shape > 0, tag + "gamma shape must be positive");
      for (double m : line.travel.segment_mean_s) require(m > 0, tag + "segment means must be positive");
    }
  }
  for (const auto& e : s.demand.entries) {
    require(e.line >= 0 && e.line < static_cast<int>(s.lines.size()), "demand entry with unknown line");
    const auto& line = s.lines[e.line];
    const int slot = line.stop_slot(e.stop);
    require(slot >= 0, "demand entry for a stop the line does not serve");
    require(e.rate_pax_h >= 0, "negative arrival rate");
    for (double r : e.hourly_rates) require(r >= 0, "negative arrival rate");
  }
}

double ideal_headway(const ScenarioConfig& s) {
  double sum = 0.0;
  for (const auto& line : s.lines) {
    if (line.circular) sum += line.route_length / line.fleet_size;
    else sum += line.departure_interval * line.mean_speed();
  }
  return sum / static_cast<double>(s.lines.size());
}

// ---------------------------------------------------------------- JSON

json to_json(const ScenarioConfig& s) {
  json j;
  j["name"] = s.name;
  j["stops"] = json::array();
  for (const auto& st : s.stops) j["stops"].push_back({{"id", st.id}});
  j["lines"] = json::array();
  for (const auto& line : s.lines) {
    json l{{"id", line.id},
           {"route_length", line.route_length},
           {"departure_interval", line.departure_interval},
           {"fleet_size", line.fleet_size},
           {"first_departure", line.first_departure},
           {"circular", line.circular}};
    l["stops"] = json::array();
    for (const auto& ls : line.stops)
      l["stops"].push_back({{"stop", s.stops[ls.stop].id}, {"position", ls.position}});
    if (line.travel.model == TravelModel::Constant) {
      l["travel_time"] = {{"model", "constant"}, {"speed_mps", line.travel.speed_mps}};
    } else {
      l["travel_time"] = {{"model", "gamma"},
                          {"segment_mean_s", line.travel.segment_mean_s},
                          {"shape", line.travel.gamma_shape}};
    }
    j["lines"].push_back(std::move(l));
  }
  j["capacity"] = s.capacity;
  j["board_time_per_pax"] = s.board_time_per_pax;
  j["alight_time_per_pax"] = s.alight_time_per_pax;
  j["sim_duration_s"] = s.sim_duration_s;
  j["action_step_s"] = s.action_step_s;
  j["max_hold_s"] = s.max_hold_s;
  json d;
  d["hourly_multipliers"] = s.demand.hourly_multipliers;
  d["rate_jitter"] = s.demand.rate_jitter;
  d["rates"] = json::array();
  for (const auto& e : s.demand.entries) {
    json r{{"stop", s.stops[e.stop].id}, {"line", s.lines[e.line].id}, {"rate_pax_h", e.rate_pax_h}};
    if (!e.hourly_rates.empty()) r["hourly_rates"] = e.hourly_rates;
    d["rates"].push_back(std::move(r));
  }
  j["demand"] = std::move(d);
  j["shared_passenger_fraction"] = s.shared_passenger_fraction;
  j["allow_overtaking"] = s.allow_overtaking;
  j["seed"] = s.seed;
  return j;
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig s;
  try {
    s.name = get_or<std::string>(j, "name", "scenario");
    for (const auto& st : j.at("stops")) s.stops.push_back({st.at("id").get<std::string>()});
    for (const auto& l : j.at("lines")) {
      LineConfig line;
      line.id = l.at("id").get<std::string>();
      line.route_length = l.at("route_length").get<double>();
      line.departure_interval = l.at("departure_interval").get<double>();
      line.fleet_size = get_or<int>(l, "fleet_size", 0);
      line.first_departure = get_or<double>(l, "first_departure", 0.0);
      line.circular = get_or<bool>(l, "circular", false);
      for (const auto& ls : l.at("stops")) {
        const auto id = ls.at("stop").get<std::string>();
        const int idx = s.stop_index(id);
        if (idx < 0) throw ConfigError("line " + line.id + " references unknown stop " + id);
        line.stops.push_back({idx, ls.at("position").get<double>()});
      }
      const json& tt = l.at("travel_time");
      const auto model = tt.at("model").get<std::string>();
      if (model == "constant") {
        line.travel.model = TravelModel::Constant;
        line.travel.speed_mps = tt.at("speed_mps").get<double>();
      } else if (model == "gamma") {
        line.travel.model = TravelModel::Gamma;
        line.travel.segment_mean_s = tt.at("segment_mean_s").get<std::vector<double>>();
        line.travel.gamma_shape = get_or<double>(tt, "shape", 4.0);
      } else {
        throw ConfigError("unknown travel_time model " + model);
      }
      s.lines.push_back(std::move(line));
    }
    s.capacity = j.at("capacity").get<int>();
    s.board_time_per_pax = j.at("board_time_per_pax").get<double>();
    s.alight_time_per_pax = j.at("alight_time_per_pax").get<double>();
    s.sim_duration_s = j.at("sim_duration_s").get<int>();
    s.action_step_s = j.at("action_step_s").get<int>();
    s.max_hold_s = j.at("max_hold_s").get<int>();
    const json& d = j.at("demand");
    s.demand.hourly_multipliers = get_or<std::vector<double>>(d, "hourly_multipliers", {});
    s.demand.rate_jitter = get_or<double>(d, "rate_jitter", 0.0);
    for (const auto& r : d.at("rates")) {
      DemandEntry e;
      const auto stop = r.at("stop").get<std::string>();
      const auto line = r.at("line").get<std::string>();
      e.stop = s.stop_index(stop);
      e.line = s.line_index(line);
      if (e.stop < 0 || e.line < 0) throw ConfigError("demand entry references unknown stop/line");
      e.rate_pax_h = get_or<double>(r, "rate_pax_h", 0.0);
      e.hourly_rates = get_or<std::vector<double>>(r, "hourly_rates", {});
      s.demand.entries.push_back(std::move(e));
    }
    s.shared_passenger_fraction = get_or<double>(j, "shared_passenger_fraction", 1.0);
    s.allow_overtaking = get_or<bool>(j, "allow_overtaking", false);
    s.seed = get_or<std::uint64_t>(j, "seed", 0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario JSON: ") + e.what());
  }
  validate(s);
  return s;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const ScenarioConfig& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << to_json(scenario).dump(2) << '\n';
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

void apply_demand_csv(ScenarioConfig& s, std::string_view csv_text) {
  std::map<std::pair<int, int>, std::vector<double>> table;
  std::istringstream in{std::string(csv_text)};
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 4) throw ConfigError("demand CSV row " + std::to_string(row) + ": expected 4 columns");
    if (row == 1 && cells[0] == "stop") continue;
    const int stop = s.stop_index(cells[0]);
    const int ln = s.line_index(cells[1]);
    if (stop < 0 || ln < 0)
      throw ConfigError("demand CSV row " + std::to_string(row) + ": unknown stop or line");
    std::size_t hour = 0;
    double rate = 0;
    try {
      hour = std::stoul(cells[2]);
      rate = std::stod(cells[3]);
    } catch (const std::exception&) {
      throw ConfigError("demand CSV row " + std::to_string(row) + ": bad number");
    }
    auto& v = table[{stop, ln}];
    if (v.size() <= hour) v.resize(hour + 1, 0.0);
    v[hour] = rate;
  }
  s.demand.entries.clear();
  for (auto& [key, rates] : table) {
    DemandEntry e;
    e.stop = key.first;
    e.line = key.second;
    e.rate_pax_h = rates.empty() ? 0.0 : std::accumulate(rates.begin(), rates.end(), 0.0) / rates.size();
    e.hourly_rates = std::move(rates);
    s.demand.entries.push_back(std::move(e));
  }
  validate(s);
}

std::string demand_to_csv(const ScenarioConfig& s) {
  std::ostringstream out;
  out << "stop,line,hour,rate\n";
  const std::size_t hours = static_cast<std::size_t>((s.sim_duration_s + 3599) / 3600);
  for (const auto& e : s.demand.entries)
    for (std::size_t h = 0; h < hours; ++h)
      out << s.stops[e.stop].id << ',' << s.lines[e.line].id << ',' << h << ',' << s.demand.rate_at(e, h) << '\n';
  return out.str();
}

}  // namespace holdlab
