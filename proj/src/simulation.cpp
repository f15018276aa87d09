#include "holdlab/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "holdlab/rng.hpp"

namespace holdlab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int ticks_for(double seconds) {
  return static_cast<int>(std::ceil(seconds - 1e-9));
}

}  // namespace

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Dispatch: return "dispatch";
    case EventKind::Arrival: return "arrival";
    case EventKind::Boarding: return "boarding";
    case EventKind::Decision: return "decision";
    case EventKind::Departure: return "departure";
    case EventKind::Retire: return "retire";
  }
  return "unknown";
}

bool StopState::serves(LineIndex m) const {
  return std::find(served_lines.begin(), served_lines.end(), m) != served_lines.end();
}

Simulation::Simulation(ScenarioConfig scenario, std::uint64_t seed, SimOptions options)
    : scenario_(std::make_shared<const ScenarioConfig>(std::move(scenario))), seed_(seed), options_(options) {
  validate(*scenario_);
  passengers_ = generate_passengers(*scenario_, seed);
  init(seed);
}

Simulation::Simulation(std::shared_ptr<const ScenarioConfig> scenario, std::vector<PassengerRecord> passengers,
                       std::uint64_t seed, SimOptions options)
    : scenario_(std::move(scenario)), seed_(seed), options_(options), passengers_(std::move(passengers)) {
  validate(*scenario_);
  std::stable_sort(passengers_.begin(), passengers_.end(),
                   [](const auto& a, const auto& b) { return a.arrive_time < b.arrive_time; });
  for (std::size_t i = 0; i < passengers_.size(); ++i) passengers_[i].id = static_cast<int>(i);
  init(seed);
}

void Simulation::init(std::uint64_t seed) {
  const ScenarioConfig& s = *scenario_;
  const std::size_t n_lines = s.lines.size();
  stops_.resize(s.stops.size());
  for (std::size_t i = 0; i < s.stops.size(); ++i) {
    StopState& st = stops_[i];
    st.stop = static_cast<StopIndex>(i);
    st.position_on_line.assign(n_lines, std::numeric_limits<double>::quiet_NaN());
    st.holdup.assign(n_lines, 0);
    st.served_lines = s.serving_lines(st.stop);
    for (LineIndex m : st.served_lines) {
      const auto& line = s.lines[m];
      st.position_on_line[m] = line.stops[line.stop_slot(st.stop)].position;
    }
    st.shared = st.served_lines.size() > 1;
  }

  struct Planned {
    double time;
    LineIndex line;
    int ordinal;
  };
  std::vector<Planned> plan;
  for (std::size_t m = 0; m < n_lines; ++m) {
    const auto& line = s.lines[m];
    int count = line.fleet_size;
    if (!line.circular && count == 0) {
      const double span = s.sim_duration_s - line.first_departure;
      count = span > 0 ? static_cast<int>(std::ceil(span / line.departure_interval)) : 0;
    }
    for (int k = 0; k < count; ++k)
      plan.push_back({line.first_departure + k * line.departure_interval, static_cast<LineIndex>(m), k});
  }
  std::stable_sort(plan.begin(), plan.end(), [](const Planned& a, const Planned& b) {
    return std::tie(a.time, a.line, a.ordinal) < std::tie(b.time, b.line, b.ordinal);
  });
  buses_.clear();
  for (const auto& p : plan) {
    BusState b;
    b.id = static_cast<int>(buses_.size());
    b.line = p.line;
    b.ordinal = p.ordinal;
    b.dispatch_time = p.time;
    buses_.push_back(std::move(b));
  }
  travel_rng_ = make_rng(seed, kStreamTravel);
}

void Simulation::emit(int t, EventKind kind, int bus, StopIndex stop, json payload) {
  if (!options_.record_events) return;
  events_.push_back(Event{t, kind, bus, stop, std::move(payload)});
}

double Simulation::sample_segment_time(const LineConfig& line, std::size_t segment) {
  if (line.travel.model == TravelModel::Constant) return line.segment_length(segment) / line.travel.speed_mps;
  const double mean = line.travel.segment_mean_s[segment];
  const double shape = line.travel.gamma_shape;
  std::gamma_distribution<double> g(shape, mean / shape);
  return std::max(1.0, g(travel_rng_));
}

void Simulation::start_leg(BusState& bus, int from_slot, int to_slot, double start_pos, double fraction) {
  const LineConfig& line = scenario_->lines[bus.line];
  const auto segment = static_cast<std::size_t>(from_slot);
  bus.leg_start = start_pos;
  bus.leg_length = line.segment_length(segment) * fraction;
  bus.leg_time = std::max(1e-9, sample_segment_time(line, segment) * fraction);
  bus.leg_ticks = std::max(1, ticks_for(bus.leg_time));
  bus.leg_elapsed = 0;
  bus.next_slot = to_slot;
  bus.phase = BusPhase::Moving;
  bus.stop_slot = -1;
}

void Simulation::dispatch(BusState& bus, int t) {
  const LineConfig& line = scenario_->lines[bus.line];
  emit(t, EventKind::Dispatch, bus.id, -1, {{"line", line.id}, {"ordinal", bus.ordinal}});
  bus.position = 0.0;
  bus.holding_elapsed = 0;
  const double first = line.stops.front().position;
  if (first == 0.0) {
    arrive(bus, 0, t);
    return;
  }
  // Circular line whose origin lies inside the wrap segment.
  const int last = static_cast<int>(line.stops.size()) - 1;
  const double wrap = line.segment_length(static_cast<std::size_t>(last));
  start_leg(bus, last, 0, 0.0, first / wrap);
}

void Simulation::arrive(BusState& bus, int slot, int t) {
  const ScenarioConfig& s = *scenario_;
  const LineConfig& line = s.lines[bus.line];
  const StopIndex stop = line.stops[slot].stop;
  StopState& st = stops_[stop];
  if (bus.phase == BusPhase::Holding) violations_.push_back("passenger exchange during holding");

  bus.position = line.stops[slot].position;
  bus.stop_slot = slot;
  bus.arrival_tick = t;
  bus.holding_elapsed = 0;
  bus.hold_remaining = 0;
  arrival_log_.push_back({bus.line, stop, bus.id, t});

  const bool terminal = !line.circular && slot == static_cast<int>(line.stops.size()) - 1;
  const int onboard_before = static_cast<int>(bus.onboard.size());
  int alighted = 0;
  std::vector<int> staying;
  staying.reserve(bus.onboard.size());
  for (int pid : bus.onboard) {
    PassengerRecord& p = passengers_[pid];
    if (terminal || p.alight_stop == stop) {
      p.alight_time = static_cast<double>(t);
      ++alighted;
      ++alighted_;
    } else {
      staying.push_back(pid);
    }
  }
  bus.onboard = std::move(staying);

  if (terminal) {
    emit(t, EventKind::Arrival, bus.id, stop, {{"line", line.id}, {"alighted", alighted}, {"dwell", 0}});
    emit(t, EventKind::Retire, bus.id, stop, json::object());
    bus.phase = BusPhase::Retired;
    bus.stop_slot = -1;
    return;
  }

  int eligible = 0;
  for (int pid : st.waiting)
    if (passengers_[pid].can_ride(bus.line)) ++eligible;
  const BoardingOutcome outcome = boarding_count(eligible, s.capacity, onboard_before, alighted);
  if (outcome.boarded + outcome.holdup != eligible) violations_.push_back("boarding identity broken");

  int to_board = outcome.boarded;
  std::vector<int> remaining;
  remaining.reserve(st.waiting.size());
  for (int pid : st.waiting) {
    PassengerRecord& p = passengers_[pid];
    if (to_board > 0 && p.can_ride(bus.line)) {
      p.board_time = static_cast<double>(t);
      p.line = bus.line;
      p.bus = bus.id;
      bus.onboard.push_back(pid);
      --to_board;
    } else {
      remaining.push_back(pid);
    }
  }
  st.waiting = std::move(remaining);
  st.holdup[bus.line] = outcome.holdup;
  // riders left by another line may just have boarded this one
  for (std::size_t l = 0; l < st.holdup.size(); ++l) {
    if (static_cast<int>(l) == bus.line || st.holdup[l] == 0) continue;
    int still = 0;
    for (int pid : st.waiting)
      if (passengers_[pid].can_ride(static_cast<int>(l))) ++still;
    st.holdup[l] = std::min(st.holdup[l], still);
  }

  const double dwell = dwell_time(outcome.boarded, alighted, s.board_time_per_pax, s.alight_time_per_pax);
  bus.dwell_remaining = ticks_for(dwell);
  bus.phase = BusPhase::Dwelling;
  emit(t, EventKind::Arrival, bus.id, stop, {{"line", line.id}, {"alighted", alighted}, {"dwell", dwell}});
  emit(t, EventKind::Boarding, bus.id, stop,
       {{"waiting", eligible},
        {"boarded", outcome.boarded},
        {"holdup", outcome.holdup},
        {"onboard", bus.onboard.size()}});
}

Action Simulation::ask(ControllerHook& controller, const DecisionPoint& point) {
  try {
    return controller.decide(point);
  } catch (const std::exception& e) {
    std::string trace;
    if (options_.record_events) trace = event_log_ndjson();
    throw SimulationAborted(std::string("controller failed at t=") + std::to_string(point.t) + ": " + e.what(),
                            std::move(trace));
  }
}

void Simulation::decide(BusState& bus, int t, ControllerHook& controller) {
  const ScenarioConfig& s = *scenario_;
  const LineConfig& line = s.lines[bus.line];
  const StopIndex stop = line.stops[bus.stop_slot].stop;
  if (bus.holding_elapsed % s.action_step_s != 0) violations_.push_back("decision off the action-step grid");

  DecisionPoint point;
  point.t = t;
  point.bus = bus.id;
  point.line = bus.line;
  point.stop = stop;
  point.holding_elapsed = bus.holding_elapsed;
  point.obs = observe(bus.id, stop);
  point.id = next_decision_id_++;

  const bool forced = bus.holding_elapsed >= s.max_hold_s;
  const Action action = forced ? Action::Release : ask(controller, point);
  emit(t, EventKind::Decision, bus.id, stop,
       {{"action", to_int(action)}, {"holding_elapsed", bus.holding_elapsed}, {"forced", forced},
        {"state", point.obs.values}});

  if (action == Action::Hold) {
    bus.phase = BusPhase::Holding;
    bus.hold_remaining = s.action_step_s;
  } else {
    hold_log_.push_back({bus.line, stop, bus.id, bus.holding_elapsed});
    if (blocked(bus)) bus.phase = BusPhase::Blocked;
    else depart(bus, t);
  }
  if (!forced) followups_.push_back({t + s.action_step_s, point, action});
}

bool Simulation::blocked(const BusState& bus) const {
  if (scenario_->allow_overtaking) return false;
  for (const BusState& o : buses_) {
    if (o.id == bus.id || o.line != bus.line || !o.at_stop() || o.stop_slot != bus.stop_slot) continue;
    if (o.arrival_tick < bus.arrival_tick || (o.arrival_tick == bus.arrival_tick && o.id < bus.id)) return true;
  }
  return false;
}

void Simulation::depart(BusState& bus, int t) {
  const LineConfig& line = scenario_->lines[bus.line];
  emit(t, EventKind::Departure, bus.id, line.stops[bus.stop_slot].stop, {{"holding", bus.holding_elapsed}});
  const int n = static_cast<int>(line.stops.size());
  const int from = bus.stop_slot;
  start_leg(bus, from, (from + 1) % n, line.stops[from].position, 1.0);
}

void Simulation::step(ControllerHook& controller) {
  controller.before_tick(*this);
  const ScenarioConfig& s = *scenario_;
  const int t = t_;

  while (next_arrival_ < passengers_.size() && passengers_[next_arrival_].arrive_time <= t) {
    const PassengerRecord& p = passengers_[next_arrival_];
    stops_[p.origin_stop].waiting.push_back(p.id);
    ++next_arrival_;
  }

  std::vector<int> ready;
  for (BusState& bus : buses_) {
    switch (bus.phase) {
      case BusPhase::Pending:
        if (bus.dispatch_time <= t) {
          dispatch(bus, t);
          if (bus.phase == BusPhase::Dwelling && bus.dwell_remaining == 0) ready.push_back(bus.id);
        }
        break;
      case BusPhase::Moving: {
        const LineConfig& line = s.lines[bus.line];
        ++bus.leg_elapsed;
        if (bus.leg_elapsed >= bus.leg_ticks) {
          arrive(bus, bus.next_slot, t);
          if (bus.phase == BusPhase::Dwelling && bus.dwell_remaining == 0) ready.push_back(bus.id);
        } else {
          const double frac = std::min(1.0, bus.leg_elapsed / bus.leg_time);
          double pos = bus.leg_start + bus.leg_length * frac;
          if (line.circular) pos = std::fmod(pos, line.route_length);
          bus.position = pos;
        }
        break;
      }
      case BusPhase::Dwelling:
        if (bus.dwell_remaining > 0 && --bus.dwell_remaining == 0) ready.push_back(bus.id);
        break;
      case BusPhase::Holding:
        ++bus.holding_elapsed;
        if (--bus.hold_remaining == 0) ready.push_back(bus.id);
        break;
      case BusPhase::Blocked:
        if (!blocked(bus)) depart(bus, t);
        break;
      case BusPhase::Retired:
        break;
    }
  }

  if (!followups_.empty()) {
    std::vector<Followup> keep;
    std::vector<Followup> due;
    for (auto& f : followups_) (f.due <= t ? due : keep).push_back(std::move(f));
    followups_ = std::move(keep);
    for (const auto& f : due) {
      const AgentObservation next = observe(f.origin.bus, f.origin.stop);
      controller.on_followup(f.origin, f.action, next);
    }
  }

  for (int id : ready) decide(buses_[id], t, controller);
  ++t_;
}

void Simulation::run(ControllerHook& controller) {
  while (!done()) step(controller);
}

void Simulation::run_until(int tick, ControllerHook& controller) {
  while (!done() && t_ < tick) step(controller);
}

std::vector<HeadwayPair> Simulation::compute_headways(int bus_id, StopIndex anchor) const {
  const ScenarioConfig& s = *scenario_;
  const BusState& bus = buses_.at(bus_id);
  const LineConfig& own = s.lines[bus.line];
  const int own_slot = own.stop_slot(anchor);
  if (own_slot < 0) throw InvariantViolation("headway anchor is not on the bus's line");
  double offset = bus.position - own.stops[own_slot].position;
  if (own.circular) offset = std::fmod(offset + own.route_length, own.route_length);

  std::vector<HeadwayPair> out(s.lines.size());
  for (LineIndex m : stops_[anchor].served_lines) {
    const LineConfig& line = s.lines[m];
    const double L = line.route_length;
    double x = stops_[anchor].position_on_line[m] + offset;
    x = line.circular ? std::fmod(x, L) : std::clamp(x, 0.0, L);

    std::vector<AxisBus> others;
    for (const BusState& other : buses_)
      if (other.line == m && other.in_service()) others.push_back({other.id, other.position, other.arrival_tick});
    out[m] = axis_headways(x, bus_id, others, L, line.circular, bus.arrival_tick);
  }
  return out;
}

AgentObservation Simulation::observe(int bus_id, StopIndex anchor) const {
  const BusState& bus = buses_.at(bus_id);
  const auto h = compute_headways(bus_id, anchor);
  AgentObservation obs;
  obs[AgentObservation::kFwdSame] = h[bus.line].forward;
  obs[AgentObservation::kBwdSame] = h[bus.line].backward;
  double fo = kInf;
  double bo = kInf;
  for (LineIndex m : stops_[anchor].served_lines) {
    if (m == bus.line) continue;
    fo = std::min(fo, h[m].forward);
    bo = std::min(bo, h[m].backward);
  }
  obs[AgentObservation::kFwdOther] = fo == kInf ? 0.0 : fo;
  obs[AgentObservation::kBwdOther] = bo == kInf ? 0.0 : bo;
  obs[AgentObservation::kOnboard] = static_cast<double>(bus.onboard.size());
  obs[AgentObservation::kHolding] = static_cast<double>(bus.holding_elapsed);
  return obs;
}

PassengerCounts Simulation::counts() const {
  PassengerCounts c;
  c.total = passengers_.size();
  c.not_arrived = passengers_.size() - next_arrival_;
  for (const auto& st : stops_) c.waiting += st.waiting.size();
  for (const auto& b : buses_) c.onboard += b.onboard.size();
  c.alighted = alighted_;
  return c;
}

std::vector<std::string> Simulation::check_invariants() const {
  const ScenarioConfig& s = *scenario_;
  std::vector<std::string> out = violations_;
  const PassengerCounts c = counts();
  if (c.not_arrived + c.waiting + c.onboard + c.alighted != c.total)
    out.push_back("passenger conservation broken at t=" + std::to_string(t_));
  for (const auto& b : buses_) {
    if (static_cast<int>(b.onboard.size()) > s.capacity)
      out.push_back("bus " + std::to_string(b.id) + " over capacity");
    if (b.holding_elapsed < 0 || b.holding_elapsed > s.max_hold_s)
      out.push_back("bus " + std::to_string(b.id) + " holding out of bounds");
  }
  for (const auto& st : stops_) {
    for (int h : st.holdup) {
      if (h < 0) out.push_back("negative holdup count");
      if (h > static_cast<int>(st.waiting.size())) out.push_back("holdup exceeds waiting queue");
    }
    if (!st.shared && st.served_lines.size() > 1) out.push_back("non-shared stop with several lines");
  }
  for (const auto& p : passengers_) {
    if (p.board_time && *p.board_time < p.arrive_time) out.push_back("boarded before arriving");
    if (p.alight_time && (!p.board_time || *p.alight_time < *p.board_time)) out.push_back("alighted before boarding");
  }
  return out;
}

void Simulation::resample_future(std::uint64_t seed) {
  auto fresh = generate_passengers(*scenario_, seed);
  passengers_.resize(next_arrival_);
  const double cutoff = static_cast<double>(t_) - 1.0;
  for (auto& p : fresh) {
    if (p.arrive_time <= cutoff) continue;
    p.id = static_cast<int>(passengers_.size());
    passengers_.push_back(p);
  }
  travel_rng_ = make_rng(seed, kStreamTravel);
}

Simulation Simulation::clone_for_rollout() const {
  Simulation copy(*this);
  copy.events_.clear();
  copy.options_.record_events = false;
  return copy;
}

std::string Simulation::event_log_ndjson() const {
  std::ostringstream out;
  for (const auto& e : events_) {
    json j{{"t", e.t}, {"kind", to_string(e.kind)}, {"bus", e.bus}};
    j["stop"] = e.stop >= 0 ? json(scenario_->stops[e.stop].id) : json(nullptr);
    j["payload"] = e.payload;
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace holdlab
