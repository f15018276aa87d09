#include "holdlab/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "holdlab/rng.hpp"

namespace holdlab {

using nlohmann::json;

Action feedback_decide(const AgentObservation& obs, int max_hold_s) {
  const bool hold = obs.bwd_same() > obs.fwd_same() && obs.holding() < max_hold_s;
  return hold ? Action::Hold : Action::Release;
}

int model_based_hold(const AgentObservation& obs, double speed_mps, int capacity, int action_step_s,
                     int max_hold_s) {
  if (!(speed_mps > 0)) throw std::invalid_argument("model_based_hold: speed must be positive");
  const double load = capacity > 0 ? obs.onboard() / capacity : 0.0;
  double g = (obs.bwd_same() - obs.fwd_same()) / (2.0 * speed_mps) * (1.0 - load);
  g = std::clamp(g, 0.0, static_cast<double>(max_hold_s));
  const int q = static_cast<int>(std::lround(g / action_step_s)) * action_step_s;
  return std::clamp(q, 0, max_hold_s);
}

ModelBasedController::ModelBasedController(const ScenarioConfig& scenario)
    : capacity_(scenario.capacity), step_(scenario.action_step_s), max_hold_(scenario.max_hold_s) {
  for (const auto& line : scenario.lines) speed_.push_back(line.mean_speed());
}

Action ModelBasedController::decide(const DecisionPoint& point) {
  if (point.holding_elapsed == 0)
    planned_[point.bus] = model_based_hold(point.obs, speed_[point.line], capacity_, step_, max_hold_);
  return point.holding_elapsed < planned_[point.bus] ? Action::Hold : Action::Release;
}

// ---------------------------------------------------------------- plans

std::optional<std::size_t> HoldingPlan::slot_index(LineIndex line, StopIndex stop, int bus) const {
  const PlanSlot key{line, stop, bus};
  auto it = std::lower_bound(slots.begin(), slots.end(), key);
  if (it == slots.end() || !(*it == key)) return std::nullopt;
  return static_cast<std::size_t>(it - slots.begin());
}

json HoldingPlan::to_json() const {
  json j{{"window_start", window_start}, {"window_end", window_end}, {"slots", json::array()}};
  for (std::size_t i = 0; i < slots.size(); ++i)
    j["slots"].push_back({{"line", slots[i].line}, {"stop", slots[i].stop}, {"bus", slots[i].bus},
                          {"hold", durations[i]}});
  return j;
}

void PlanController::set_plan(const HoldingPlan* plan) {
  plan_ = plan;
  used_.assign(plan ? plan->slots.size() : 0, 0);
}

Action PlanController::decide(const DecisionPoint& point) {
  if (point.holding_elapsed == 0) {
    int target = 0;
    if (plan_ && point.t >= plan_->window_start && point.t < plan_->window_end) {
      if (used_.size() != plan_->slots.size()) used_.assign(plan_->slots.size(), 0);
      if (auto idx = plan_->slot_index(point.line, point.stop, point.bus); idx && !used_[*idx]) {
        used_[*idx] = 1;
        target = plan_->durations[*idx];
      }
    }
    active_[point.bus] = target;
  }
  auto it = active_.find(point.bus);
  const int target = it == active_.end() ? 0 : it->second;
  return point.holding_elapsed < target ? Action::Hold : Action::Release;
}

// ---------------------------------------------------------------- PSO

std::vector<PlanSlot> PsoPlanner::forecast_slots(const Simulation& snapshot) const {
  const int end = snapshot.time() + cfg_.window_s;
  std::vector<PlanSlot> slots;
  for (const auto& bus : snapshot.buses()) {
    if (bus.phase == BusPhase::Retired || bus.dispatch_time >= end) continue;
    for (const auto& ls : snapshot.scenario().lines[bus.line].stops) slots.push_back({bus.line, ls.stop, bus.id});
  }
  std::sort(slots.begin(), slots.end());
  return slots;
}

std::vector<Simulation> PsoPlanner::make_scenarios(const Simulation& snapshot) const {
  std::vector<Simulation> out;
  const auto window = static_cast<std::uint64_t>(snapshot.time());
  for (int k = 0; k < std::max(1, cfg_.scenarios); ++k) {
    Simulation s = snapshot.clone_for_rollout();
    s.resample_future(derive_seed(cfg_.seed, kStreamScenario, (window << 8) | static_cast<std::uint64_t>(k)));
    out.push_back(std::move(s));
  }
  return out;
}

int PsoPlanner::quantize(double seconds, int action_step_s, int max_hold_s) const {
  if (!cfg_.hold_grid.empty()) {
    int best = cfg_.hold_grid.front();
    for (int g : cfg_.hold_grid)
      if (std::fabs(g - seconds) < std::fabs(best - seconds)) best = g;
    return best;
  }
  const int q = static_cast<int>(std::lround(seconds / action_step_s)) * action_step_s;
  return std::clamp(q, 0, max_hold_s);
}

HoldingPlan PsoPlanner::plan_from(const Simulation& snapshot, const std::vector<PlanSlot>& slots,
                                  const std::vector<double>& position) const {
  const ScenarioConfig& s = snapshot.scenario();
  HoldingPlan plan;
  plan.window_start = snapshot.time();
  plan.window_end = std::min(snapshot.time() + cfg_.window_s, s.sim_duration_s);
  plan.slots = slots;
  plan.durations.reserve(position.size());
  for (double x : position) plan.durations.push_back(quantize(x, s.action_step_s, s.max_hold_s));
  return plan;
}

double PsoPlanner::window_waiting_time(const Simulation& scenario, const HoldingPlan& plan) {
  Simulation sim = scenario.clone_for_rollout();
  PlanController ctrl(&plan);
  sim.run_until(plan.window_end, ctrl);
  const double ws = plan.window_start;
  const double we = plan.window_end;
  double total = 0.0;
  for (const auto& p : sim.passengers()) {
    if (p.arrive_time >= we) continue;
    if (p.board_time && *p.board_time <= ws) continue;
    const double start = std::max(p.arrive_time, ws);
    const double end = p.board_time ? std::min(*p.board_time, we) : we;
    if (end > start) total += end - start;
  }
  return total;
}

double PsoPlanner::fitness(const std::vector<Simulation>& scenarios, const HoldingPlan& plan, PsoMode mode) const {
  double worst = 0.0;
  double sum = 0.0;
  for (const auto& s : scenarios) {
    const double w = window_waiting_time(s, plan);
    worst = std::max(worst, w);
    sum += w;
  }
  return mode == PsoMode::Robust ? worst : sum / static_cast<double>(scenarios.size());
}

PsoOutcome PsoPlanner::optimize(const Simulation& snapshot) const {
  const ScenarioConfig& s = snapshot.scenario();
  const auto slots = forecast_slots(snapshot);
  const auto scenarios = make_scenarios(snapshot);
  const double hi = cfg_.hold_grid.empty() ? s.max_hold_s
                                           : *std::max_element(cfg_.hold_grid.begin(), cfg_.hold_grid.end());
  const double lo = cfg_.hold_grid.empty() ? 0.0
                                           : *std::min_element(cfg_.hold_grid.begin(), cfg_.hold_grid.end());

  auto evaluate_batch = [&](const std::vector<std::vector<double>>& xs) {
    std::vector<double> out(xs.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t i = begin; i < xs.size(); i += stride)
        out[i] = fitness(scenarios, plan_from(snapshot, slots, xs[i]), cfg_.mode);
    };
    const auto threads = static_cast<std::size_t>(std::max(1, cfg_.threads));
    if (threads == 1) {
      work(0, 1);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(work, k, threads);
      for (auto& t : pool) t.join();
    }
    return out;
  };

  auto rng = make_rng(cfg_.seed, kStreamPso, static_cast<std::uint64_t>(snapshot.time()));
  const std::vector<std::vector<double>> seeds{std::vector<double>(slots.size(), lo)};
  const PsoResult r = pso_minimize(slots.size(), lo, hi, evaluate_batch, cfg_.pso, rng, seeds);

  PsoOutcome out;
  out.plan = plan_from(snapshot, slots, r.best);
  out.fitness = r.best_fitness;
  out.zero_plan_fitness = r.initial_fitness.front();
  out.initial_fitness = r.initial_fitness;
  out.best_history = r.history;
  return out;
}

void PsoController::before_tick(const Simulation& sim) {
  const int window = planner_.config().window_s;
  if (sim.done() || sim.time() % window != 0) return;
  PsoOutcome outcome = planner_.optimize(sim);
  plan_ = outcome.plan;
  follower_.set_plan(&plan_);
  outcome.initial_fitness.clear();
  history_.push_back(std::move(outcome));
}

}  // namespace holdlab
