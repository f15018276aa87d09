#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "holdlab/dynamics.hpp"
#include "holdlab/observation.hpp"
#include "holdlab/passengers.hpp"
#include "holdlab/scenario.hpp"

namespace holdlab {

class Simulation;

// Blocked: released, but waiting for an earlier same-line bus to leave the stop.
enum class BusPhase { Pending, Moving, Dwelling, Holding, Blocked, Retired };

struct BusState {
  int id = 0;
  LineIndex line = 0;
  int ordinal = 0;  // dispatch order within the line
  double dispatch_time = 0.0;
  BusPhase phase = BusPhase::Pending;

  double position = 0.0;  // metres on the line axis, in [0, route_length)
  // current leg between stops
  double leg_start = 0.0;
  double leg_length = 0.0;
  double leg_time = 0.0;
  int leg_ticks = 0;
  int leg_elapsed = 0;
  int next_slot = 0;

  int stop_slot = -1;  // slot of the stop while dwelling/holding
  std::vector<int> onboard;
  int dwell_remaining = 0;
  int hold_remaining = 0;
  int holding_elapsed = 0;
  int arrival_tick = 0;

  bool in_service() const {
    return phase == BusPhase::Moving || at_stop();
  }
  bool at_stop() const {
    return phase == BusPhase::Dwelling || phase == BusPhase::Holding || phase == BusPhase::Blocked;
  }
};

struct StopState {
  StopIndex stop = 0;
  std::vector<LineIndex> served_lines;
  std::vector<double> position_on_line;  // per line; NaN when not served
  std::vector<int> waiting;              // passenger ids, FIFO by arrival
  std::vector<int> holdup;               // per line, riders left behind by the last bus
  bool shared = false;

  bool serves(LineIndex m) const;
};

/// One decision request handed to a controller.
struct DecisionPoint {
  int t = 0;
  int bus = 0;
  LineIndex line = 0;
  StopIndex stop = 0;
  int holding_elapsed = 0;
  AgentObservation obs;
  std::uint64_t id = 0;
};

/// Controller interface shared by every holding strategy.
class ControllerHook {
 public:
  virtual ~ControllerHook() = default;
  /// Called at the start of each tick with the state before the tick.
  virtual void before_tick(const Simulation&) {}
  virtual Action decide(const DecisionPoint& point) = 0;
  /// Observation of the same bus one action step after `point`.
  virtual void on_followup(const DecisionPoint&, Action, const AgentObservation&) {}
};

class NoHolding final : public ControllerHook {
 public:
  Action decide(const DecisionPoint&) override { return Action::Release; }
};

enum class EventKind { Dispatch, Arrival, Boarding, Decision, Departure, Retire };

const char* to_string(EventKind kind);

struct Event {
  int t = 0;
  EventKind kind = EventKind::Arrival;
  int bus = -1;
  StopIndex stop = -1;
  nlohmann::json payload;
};

struct ArrivalRecord {
  LineIndex line;
  StopIndex stop;
  int bus;
  int t;
};

struct HoldRecord {
  LineIndex line;
  StopIndex stop;
  int bus;
  int duration;
};

struct PassengerCounts {
  std::size_t not_arrived = 0;
  std::size_t waiting = 0;
  std::size_t onboard = 0;
  std::size_t alighted = 0;
  std::size_t total = 0;
};

struct SimOptions {
  bool record_events = false;
};

/// Raised when a controller throws mid-run; carries the tail of the trace.
class SimulationAborted : public std::runtime_error {
 public:
  SimulationAborted(const std::string& what, std::string trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::string& trace() const { return trace_; }

 private:
  std::string trace_;
};

/// Tick-based (1 s) multi-line bus simulation. Copyable: a copy is an
/// independent snapshot that can be rolled forward separately.
class Simulation {
 public:
  Simulation(ScenarioConfig scenario, std::uint64_t seed, SimOptions options = {});
  Simulation(std::shared_ptr<const ScenarioConfig> scenario, std::vector<PassengerRecord> passengers,
             std::uint64_t seed, SimOptions options = {});

  /// Processes the current tick and advances the clock by one second.
  void step(ControllerHook& controller);
  void run(ControllerHook& controller);
  void run_until(int tick, ControllerHook& controller);

  /// Next tick to be processed; equals the number of processed ticks.
  int time() const { return t_; }
  bool done() const { return t_ >= scenario_->sim_duration_s; }

  const ScenarioConfig& scenario() const { return *scenario_; }
  std::shared_ptr<const ScenarioConfig> scenario_ptr() const { return scenario_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<BusState>& buses() const { return buses_; }
  const std::vector<StopState>& stops() const { return stops_; }
  const std::vector<PassengerRecord>& passengers() const { return passengers_; }
  const std::vector<ArrivalRecord>& arrivals() const { return arrival_log_; }
  const std::vector<HoldRecord>& holds() const { return hold_log_; }
  const std::vector<Event>& events() const { return events_; }

  /// Headways of `bus` to every line, anchored at stop `anchor`.
  std::vector<HeadwayPair> compute_headways(int bus, StopIndex anchor) const;
  AgentObservation observe(int bus, StopIndex anchor) const;

  PassengerCounts counts() const;
  /// Empty when every conservation/capacity/holding invariant holds.
  std::vector<std::string> check_invariants() const;

  /// Replaces passengers that have not yet arrived with a fresh draw from
  /// the scenario's demand model, and reseeds travel times.
  void resample_future(std::uint64_t seed);

  /// Copy without the event log and with recording off, for rollouts.
  Simulation clone_for_rollout() const;

  std::string event_log_ndjson() const;

 private:
  void init(std::uint64_t seed);
  void emit(int t, EventKind kind, int bus, StopIndex stop, nlohmann::json payload);
  void dispatch(BusState& bus, int t);
  void start_leg(BusState& bus, int from_slot, int to_slot, double start_pos, double fraction);
  void arrive(BusState& bus, int slot, int t);
  void decide(BusState& bus, int t, ControllerHook& controller);
  Action ask(ControllerHook& controller, const DecisionPoint& point);
  bool blocked(const BusState& bus) const;
  void depart(BusState& bus, int t);
  double sample_segment_time(const LineConfig& line, std::size_t segment);

  struct Followup {
    int due;
    DecisionPoint origin;
    Action action;
  };

  std::shared_ptr<const ScenarioConfig> scenario_;
  std::uint64_t seed_ = 0;
  SimOptions options_;
  int t_ = 0;
  std::vector<PassengerRecord> passengers_;
  std::size_t next_arrival_ = 0;
  std::size_t alighted_ = 0;
  std::vector<BusState> buses_;
  std::vector<StopState> stops_;
  std::vector<Followup> followups_;
  std::vector<ArrivalRecord> arrival_log_;
  std::vector<HoldRecord> hold_log_;
  std::vector<Event> events_;
  std::vector<std::string> violations_;
  std::uint64_t next_decision_id_ = 0;
  std::mt19937_64 travel_rng_;
};

}  // namespace holdlab
