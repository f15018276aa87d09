#include "holdlab/feedback.hpp"

namespace holdlab {

using nlohmann::json;

std::vector<TrajectoryStep> truncate_trajectory(const std::vector<TrajectoryStep>& traj, std::size_t window) {
  if (traj.size() <= window) return traj;
  return {traj.end() - static_cast<std::ptrdiff_t>(window), traj.end()};
}

namespace {

json state_json(const AgentObservation& o) {
  json a = json::array();
  for (double v : o.values) a.push_back(v);
  return a;
}

}  // namespace

json test_results_json(const MetricsReport& rslt) {
  json out = json::object();
  for (std::size_t m = 0; m < rslt.lines.size(); ++m) {
    const auto& l = rslt.lines[m];
    out["test_results_line_" + std::to_string(m + 1)] = {{"SD_time_headways", l.sd_headway},
                                                         {"avg_passenger_travel_time", l.avg_travel},
                                                         {"avg_passenger_waiting_time", l.avg_waiting},
                                                         {"avg_holding_time", l.avg_holding}};
  }
  if (rslt.lines.size() > 1 && rslt.has_shared)
    out["test_results_shared_part"] = {{"SD_time_headways", rslt.shared.sd_headway},
                                       {"avg_passenger_travel_time", rslt.shared.avg_travel},
                                       {"avg_passenger_waiting_time", rslt.shared.avg_waiting}};
  out["test_results_overall"] = {{"avg_passenger_travel_time", rslt.avg_travel},
                                 {"avg_passenger_waiting_time", rslt.avg_waiting}};
  return out;
}

json encode_feedback_json(const std::vector<double>& evol, const std::vector<TrajectoryStep>& traj,
                          const MetricsReport& rslt) {
  json history{{"current_states", json::array()},
               {"actions", json::array()},
               {"rewards", json::array()},
               {"next_states", json::array()}};
  for (const auto& s : traj) {
    history["current_states"].push_back(state_json(s.current_state));
    history["actions"].push_back(s.action);
    history["rewards"].push_back(s.reward);
    history["next_states"].push_back(state_json(s.next_state));
  }
  json test = test_results_json(rslt);
  test["test_history"] = std::move(history);
  json training{{"training_history", {{"total_rewards", evol}}}};
  return json::array({std::move(training), std::move(test)});
}

}  // namespace holdlab
