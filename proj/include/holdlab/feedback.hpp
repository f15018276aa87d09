#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "holdlab/dqn.hpp"
#include "holdlab/metrics.hpp"

namespace holdlab {

constexpr std::size_t kTrajectoryWindow = 50;

/// Last min(size, window) steps, order preserved.
std::vector<TrajectoryStep> truncate_trajectory(const std::vector<TrajectoryStep>& traj,
                                                std::size_t window = kTrajectoryWindow);

/// Per-line, shared-stop and overall result objects keyed as the analyzer
/// prompt describes them. Single-line systems carry no shared object.
nlohmann::json test_results_json(const MetricsReport& rslt);

/// Two-element array: training history, then test history plus results.
/// `traj` is embedded as given; truncate first.
nlohmann::json encode_feedback_json(const std::vector<double>& evol, const std::vector<TrajectoryStep>& traj,
                                    const MetricsReport& rslt);

}  // namespace holdlab
