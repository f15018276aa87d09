#include "holdlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace holdlab {

using nlohmann::json;

double population_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

namespace {

struct Acc {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double x) {
    sum += x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

json line_json(const LineMetrics& m) {
  return {{"label", m.label},
          {"SD_time_headways", m.sd_headway},
          {"avg_passenger_travel_time", m.avg_travel},
          {"avg_passenger_waiting_time", m.avg_waiting},
          {"avg_holding_time", m.avg_holding},
          {"completed_trips", m.completed},
          {"boarded", m.boarded},
          {"headway_samples", m.headway_samples},
          {"departures", m.departures}};
}

}  // namespace

double MetricsReport::avg_holding() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& l : lines) {
    sum += l.avg_holding * static_cast<double>(l.departures);
    n += l.departures;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double MetricsReport::sd_headway() const {
  if (lines.empty()) return 0.0;
  double s = 0.0;
  for (const auto& l : lines) s += l.sd_headway;
  return s / static_cast<double>(lines.size());
}

json MetricsReport::to_json() const {
  json j;
  j["lines"] = json::array();
  for (const auto& l : lines) j["lines"].push_back(line_json(l));
  if (has_shared) j["shared"] = line_json(shared);
  j["overall"] = {{"avg_passenger_travel_time", avg_travel},
                  {"avg_passenger_waiting_time", avg_waiting},
                  {"avg_holding_time", avg_holding()},
                  {"SD_time_headways", sd_headway()},
                  {"completed_trips", completed},
                  {"boarded", boarded},
                  {"total_passengers", total_passengers}};
  j["incomplete_trip_fraction"] = incomplete_trip_fraction;
  j["stops"] = json::array();
  for (const auto& s : stops)
    j["stops"].push_back({{"stop", s.stop},
                          {"SD_time_headways", s.sd_headway},
                          {"avg_passenger_waiting_time", s.avg_waiting},
                          {"boarded", s.boarded}});
  return j;
}

MetricsReport compute_metrics(const Simulation& sim) {
  const ScenarioConfig& s = sim.scenario();
  const std::size_t n_lines = s.lines.size();
  const std::size_t n_stops = s.stops.size();
  MetricsReport r;
  r.has_shared = n_lines > 1;

  // Time headways: gaps between successive same-line arrivals at a stop.
  std::map<std::pair<LineIndex, StopIndex>, std::vector<int>> arrivals;
  for (const auto& a : sim.arrivals()) arrivals[{a.line, a.stop}].push_back(a.t);
  std::vector<std::vector<double>> line_gaps(n_lines), stop_gaps(n_stops);
  std::vector<double> shared_gaps;
  for (auto& [key, ts] : arrivals) {
    std::sort(ts.begin(), ts.end());
    for (std::size_t k = 1; k < ts.size(); ++k) {
      const double g = ts[k] - ts[k - 1];
      line_gaps[key.first].push_back(g);
      stop_gaps[key.second].push_back(g);
      if (sim.stops()[key.second].shared) shared_gaps.push_back(g);
    }
  }

  std::vector<Acc> travel(n_lines), wait(n_lines), hold(n_lines), stop_wait(n_stops);
  Acc all_travel, all_wait, sh_travel, sh_wait, sh_hold;
  std::size_t incomplete = 0;
  for (const auto& p : sim.passengers()) {
    const bool shared_origin = sim.stops()[p.origin_stop].shared;
    if (p.board_time) {
      const double w = *p.board_time - p.arrive_time;
      wait[p.line].add(w);
      all_wait.add(w);
      stop_wait[p.origin_stop].add(w);
      if (shared_origin) sh_wait.add(w);
    }
    if (p.alight_time) {
      const double tt = *p.alight_time - p.arrive_time;
      travel[p.line].add(tt);
      all_travel.add(tt);
      if (shared_origin) sh_travel.add(tt);
    } else {
      ++incomplete;
    }
  }
  for (const auto& h : sim.holds()) {
    hold[h.line].add(h.duration);
    if (sim.stops()[h.stop].shared) sh_hold.add(h.duration);
  }

  for (std::size_t m = 0; m < n_lines; ++m) {
    LineMetrics l;
    l.label = s.lines[m].id;
    l.sd_headway = population_sd(line_gaps[m]);
    l.headway_samples = line_gaps[m].size();
    l.avg_travel = travel[m].mean();
    l.completed = travel[m].n;
    l.avg_waiting = wait[m].mean();
    l.boarded = wait[m].n;
    l.avg_holding = hold[m].mean();
    l.departures = hold[m].n;
    r.lines.push_back(l);
  }
  if (r.has_shared) {
    r.shared.label = "shared";
    r.shared.sd_headway = population_sd(shared_gaps);
    r.shared.headway_samples = shared_gaps.size();
    r.shared.avg_travel = sh_travel.mean();
    r.shared.completed = sh_travel.n;
    r.shared.avg_waiting = sh_wait.mean();
    r.shared.boarded = sh_wait.n;
    r.shared.avg_holding = sh_hold.mean();
    r.shared.departures = sh_hold.n;
  }
  r.avg_travel = all_travel.mean();
  r.completed = all_travel.n;
  r.avg_waiting = all_wait.mean();
  r.boarded = all_wait.n;
  r.total_passengers = sim.passengers().size();
  r.incomplete_trip_fraction =
      r.total_passengers ? static_cast<double>(incomplete) / static_cast<double>(r.total_passengers) : 0.0;
  for (std::size_t i = 0; i < n_stops; ++i) {
    StopMetrics sm;
    sm.stop = s.stops[i].id;
    sm.sd_headway = population_sd(stop_gaps[i]);
    sm.headway_samples = stop_gaps[i].size();
    sm.avg_waiting = stop_wait[i].mean();
    sm.boarded = stop_wait[i].n;
    r.stops.push_back(sm);
  }
  return r;
}

}  // namespace holdlab
