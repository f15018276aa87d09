#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "holdlab/metrics.hpp"
#include "holdlab/simulation.hpp"

namespace holdlab {

using ControllerFactory = std::function<std::unique_ptr<ControllerHook>(const ScenarioConfig&, std::uint64_t seed)>;

struct SeedRow {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  MetricsReport metrics;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

struct EvalReport {
  std::string label;
  std::vector<SeedRow> rows;  // sorted by seed
  MeanSd sd_headway, avg_travel, avg_waiting, avg_holding, incomplete;
  std::size_t failures = 0;

  std::string to_csv() const;
  nlohmann::json aggregate_json() const;
  /// One Table-1 style row: mean±sd per column.
  std::string table_row() const;
};

std::string table_header();

MeanSd mean_sd(const std::vector<double>& xs);

/// One simulation per seed; failures become flagged rows. The result does
/// not depend on seed order or on `threads`.
EvalReport evaluate_multi_seed(const ScenarioConfig& scenario, const ControllerFactory& factory,
                               std::vector<std::uint64_t> seeds, const std::string& label, int threads = 1);

/// "1..10", "3,5,9" or "7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace holdlab
