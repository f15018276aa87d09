#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "holdlab/pso.hpp"
#include "holdlab/simulation.hpp"

namespace holdlab {

/// Hold while the follower is further away than the leader.
Action feedback_decide(const AgentObservation& obs, int max_hold_s = 90);

class FeedbackController final : public ControllerHook {
 public:
  explicit FeedbackController(int max_hold_s = 90) : max_hold_(max_hold_s) {}
  Action decide(const DecisionPoint& point) override { return feedback_decide(point.obs, max_hold_); }

 private:
  int max_hold_;
};

/// Planned hold in seconds: gap-closing time scaled by spare capacity,
/// clamped to [0, max_hold] and rounded to the action step.
int model_based_hold(const AgentObservation& obs, double speed_mps, int capacity, int action_step_s = 5,
                     int max_hold_s = 90);

/// Fixes the planned hold at the first decision of each dwell and holds
/// until it has elapsed.
class ModelBasedController final : public ControllerHook {
 public:
  explicit ModelBasedController(const ScenarioConfig& scenario);
  Action decide(const DecisionPoint& point) override;

 private:
  std::vector<double> speed_;  // per line
  int capacity_;
  int step_;
  int max_hold_;
  std::map<int, int> planned_;  // bus -> seconds
};

struct PlanSlot {
  LineIndex line = 0;
  StopIndex stop = 0;
  int bus = 0;
  auto key() const { return std::tie(line, stop, bus); }
  bool operator<(const PlanSlot& o) const { return key() < o.key(); }
  bool operator==(const PlanSlot& o) const { return key() == o.key(); }
};

/// Hold durations per (stop, bus) for one optimisation window. Only the
/// first visit of a bus to a stop inside the window uses its slot; other
/// events release immediately.
struct HoldingPlan {
  int window_start = 0;
  int window_end = 0;
  std::vector<PlanSlot> slots;
  std::vector<int> durations;  // seconds, quantised

  std::optional<std::size_t> slot_index(LineIndex line, StopIndex stop, int bus) const;
  nlohmann::json to_json() const;
};

class PlanController final : public ControllerHook {
 public:
  explicit PlanController(const HoldingPlan* plan = nullptr) : plan_(plan) {}
  void set_plan(const HoldingPlan* plan);
  Action decide(const DecisionPoint& point) override;

 private:
  const HoldingPlan* plan_;
  std::vector<char> used_;
  std::map<int, int> active_;  // bus -> target hold of the current dwell
};

enum class PsoMode { Robust, Stochastic };

struct PsoPlannerConfig {
  PsoMode mode = PsoMode::Robust;
  int window_s = 2000;
  int scenarios = 5;
  PsoParams pso;
  // Empty: durations are multiples of the action step in [0, max_hold].
  // Otherwise each coordinate snaps to the nearest grid value.
  std::vector<int> hold_grid;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct PsoOutcome {
  HoldingPlan plan;
  double fitness = 0.0;
  double zero_plan_fitness = 0.0;
  std::vector<double> initial_fitness;
  std::vector<double> best_history;
};

/// Rolls plans forward on cloned snapshots with resampled futures.
class PsoPlanner {
 public:
  explicit PsoPlanner(PsoPlannerConfig cfg) : cfg_(std::move(cfg)) {}

  const PsoPlannerConfig& config() const { return cfg_; }

  /// Decision slots expected in [t, t + window): every (line, stop, bus)
  /// for buses dispatched before the window ends.
  std::vector<PlanSlot> forecast_slots(const Simulation& snapshot) const;
  /// K scenario snapshots; scenario k resamples the future with a seed
  /// derived from (cfg.seed, window start, k).
  std::vector<Simulation> make_scenarios(const Simulation& snapshot) const;

  int quantize(double seconds, int action_step_s, int max_hold_s) const;
  HoldingPlan plan_from(const Simulation& snapshot, const std::vector<PlanSlot>& slots,
                        const std::vector<double>& position) const;
  /// Waiting time accrued inside the window for one plan on one scenario.
  static double window_waiting_time(const Simulation& scenario, const HoldingPlan& plan);
  double fitness(const std::vector<Simulation>& scenarios, const HoldingPlan& plan, PsoMode mode) const;

  PsoOutcome optimize(const Simulation& snapshot) const;

 private:
  PsoPlannerConfig cfg_;
};

/// Re-optimises a plan at every window boundary and follows it.
class PsoController final : public ControllerHook {
 public:
  explicit PsoController(PsoPlannerConfig cfg) : planner_(std::move(cfg)) {}
  void before_tick(const Simulation& sim) override;
  Action decide(const DecisionPoint& point) override { return follower_.decide(point); }
  const std::vector<PsoOutcome>& history() const { return history_; }

 private:
  PsoPlanner planner_;
  HoldingPlan plan_;
  PlanController follower_;
  std::vector<PsoOutcome> history_;
};

}  // namespace holdlab
