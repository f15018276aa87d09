#include "holdlab/passengers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "holdlab/rng.hpp"

namespace holdlab {

std::vector<int> downstream_slots(const LineConfig& line, int origin_slot) {
  std::vector<int> out;
  const int n = static_cast<int>(line.stops.size());
  if (line.circular) {
    for (int k = 1; k < n; ++k) out.push_back((origin_slot + k) % n);
  } else {
    for (int k = origin_slot + 1; k < n; ++k) out.push_back(k);
  }
  return out;
}

namespace {

bool reachable(const LineConfig& line, StopIndex from, StopIndex to) {
  const int a = line.stop_slot(from);
  const int b = line.stop_slot(to);
  if (a < 0 || b < 0 || a == b) return false;
  return line.circular || b > a;
}

}  // namespace

std::vector<PassengerRecord> generate_passengers(const ScenarioConfig& s, std::uint64_t seed) {
  std::vector<PassengerRecord> out;
  const double horizon = s.sim_duration_s;
  const std::size_t hours = static_cast<std::size_t>(std::ceil(horizon / 3600.0));
  std::mt19937_64 share_rng = make_rng(seed, kStreamSharing);

  for (std::size_t ei = 0; ei < s.demand.entries.size(); ++ei) {
    const DemandEntry& e = s.demand.entries[ei];
    const LineConfig& line = s.lines[e.line];
    const int origin_slot = line.stop_slot(e.stop);
    const auto down = downstream_slots(line, origin_slot);

    std::mt19937_64 rng = make_rng(seed, kStreamDemand, ei);
    double jitter = 1.0;
    if (s.demand.rate_jitter > 0) {
      std::uniform_real_distribution<double> j(1.0 - s.demand.rate_jitter, 1.0 + s.demand.rate_jitter);
      jitter = j(rng);
    }
    for (std::size_t h = 0; h < hours; ++h) {
      const double rate = s.demand.rate_at(e, h) * jitter / 3600.0;
      if (rate <= 0) continue;
      if (down.empty())
        throw ConfigError("stop " + s.stops[e.stop].id + " has demand on line " + line.id +
                          " but no downstream stops");
      const double end = std::min(horizon, 3600.0 * (h + 1));
      std::exponential_distribution<double> gap(rate);
      std::uniform_int_distribution<std::size_t> pick(0, down.size() - 1);
      double t = 3600.0 * h;
      while (true) {
        t += gap(rng);
        if (t >= end) break;
        PassengerRecord p;
        p.origin_stop = e.stop;
        p.line = e.line;
        p.generated_line = e.line;
        p.arrive_time = t;
        p.alight_stop = line.stops[down[pick(rng)]].stop;
        p.feasible_lines = std::uint64_t{1} << e.line;
        out.push_back(p);
      }
    }
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const PassengerRecord& a, const PassengerRecord& b) { return a.arrive_time < b.arrive_time; });

  // Shared riders: origin and destination both served by another line that
  // reaches the destination.
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    PassengerRecord& p = out[i];
    p.id = static_cast<int>(i);
    std::uint64_t extra = 0;
    for (std::size_t m = 0; m < s.lines.size(); ++m) {
      if (static_cast<LineIndex>(m) == p.generated_line) continue;
      if (reachable(s.lines[m], p.origin_stop, p.alight_stop)) extra |= std::uint64_t{1} << m;
    }
    if (extra == 0) continue;
    if (s.shared_passenger_fraction < 1.0 && u01(share_rng) >= s.shared_passenger_fraction) continue;
    p.shared = true;
    p.feasible_lines |= extra;
  }
  return out;
}

}  // namespace holdlab
