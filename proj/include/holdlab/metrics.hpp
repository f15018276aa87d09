#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "holdlab/simulation.hpp"

namespace holdlab {

struct LineMetrics {
  std::string label;
  double sd_headway = 0.0;   // s, pooled over stops
  double avg_travel = 0.0;   // s, completed trips
  double avg_waiting = 0.0;  // s, boarded riders
  double avg_holding = 0.0;  // s per departure
  std::size_t completed = 0;
  std::size_t boarded = 0;
  std::size_t headway_samples = 0;
  std::size_t departures = 0;
};

struct StopMetrics {
  std::string stop;
  double sd_headway = 0.0;
  double avg_waiting = 0.0;
  std::size_t boarded = 0;
  std::size_t headway_samples = 0;
};

struct MetricsReport {
  std::vector<LineMetrics> lines;
  bool has_shared = false;
  LineMetrics shared;
  double avg_travel = 0.0;
  double avg_waiting = 0.0;
  std::size_t completed = 0;
  std::size_t boarded = 0;
  std::size_t total_passengers = 0;
  double incomplete_trip_fraction = 0.0;
  std::vector<StopMetrics> stops;

  double avg_holding() const;
  double sd_headway() const;  // mean of per-line values
  nlohmann::json to_json() const;
};

/// Population standard deviation; 0 for fewer than two samples.
double population_sd(const std::vector<double>& xs);

MetricsReport compute_metrics(const Simulation& sim);

}  // namespace holdlab
