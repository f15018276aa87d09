#include "holdlab/generator.hpp"

#include <algorithm>
#include <random>

#include "holdlab/rng.hpp"

namespace holdlab {

void GenParams::validate() const {
  if (lines_min < 1 || lines_max < lines_min) throw ConfigError("bad line-count range");
  if (stops_min < 2 || stops_max < stops_min) throw ConfigError("bad stop-count range");
  if (pax_min < 0 || pax_max < pax_min) throw ConfigError("bad passenger range");
  if (spacing_min <= 0 || spacing_max < spacing_min) throw ConfigError("bad spacing range");
  if (!(target_load > 0) || interval_min <= 0 || interval_max < interval_min) throw ConfigError("bad headway sizing");
}

double expected_stop_total(const ScenarioConfig& s, StopIndex stop) {
  const std::size_t hours = static_cast<std::size_t>((s.sim_duration_s + 3599) / 3600);
  double total = 0.0;
  for (const auto& e : s.demand.entries) {
    if (e.stop != stop) continue;
    for (std::size_t h = 0; h < hours; ++h) {
      const double span = std::min(3600.0, s.sim_duration_s - 3600.0 * static_cast<double>(h));
      total += s.demand.rate_at(e, h) * span / 3600.0;
    }
  }
  return total;
}

ScenarioConfig gen_scenario(const GenParams& p, std::uint64_t seed) {
  p.validate();
  std::mt19937_64 rng(derive_seed(seed, kStreamScenario));
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  ScenarioConfig s;
  s.name = "gen-" + std::to_string(seed);
  s.capacity = 120;
  s.board_time_per_pax = 3.0;
  s.alight_time_per_pax = 1.8;
  s.seed = seed;

  const int n_lines = uniform_int(p.lines_min, p.lines_max);
  for (int m = 0; m < n_lines; ++m) {
    LineConfig line;
    line.id = "G" + std::to_string(m + 1);
    line.first_departure = uniform_int(0, 5) * 30.0;
    const int n = uniform_int(p.stops_min, p.stops_max);

    // Shared run: a contiguous stretch of an earlier line, same spacing.
    std::vector<StopIndex> run;
    std::vector<double> run_gaps;
    int insert_at = -1;
    if (m > 0 && n >= 4 && uniform(0.0, 1.0) < 0.7) {
      const auto& src = s.lines[static_cast<std::size_t>(uniform_int(0, m - 1))];
      const int max_len = std::min({6, n - 2, static_cast<int>(src.stops.size())});
      if (max_len >= 2) {
        const int len = uniform_int(2, max_len);
        const int from = uniform_int(0, static_cast<int>(src.stops.size()) - len);
        for (int k = 0; k < len; ++k) {
          run.push_back(src.stops[static_cast<std::size_t>(from + k)].stop);
          if (k > 0)
            run_gaps.push_back(src.stops[static_cast<std::size_t>(from + k)].position -
                               src.stops[static_cast<std::size_t>(from + k - 1)].position);
        }
        insert_at = uniform_int(0, n - len);
      }
    }

    double pos = 0.0;
    int own = 0;
    for (int k = 0; k < n;) {
      if (k == insert_at) {
        for (std::size_t r = 0; r < run.size(); ++r) {
          if (k > 0) pos += r == 0 ? std::round(uniform(p.spacing_min, p.spacing_max)) : run_gaps[r - 1];
          line.stops.push_back({run[r], pos});
          ++k;
        }
        continue;
      }
      if (k > 0) pos += std::round(uniform(p.spacing_min, p.spacing_max));
      const auto idx = static_cast<StopIndex>(s.stops.size());
      s.stops.push_back({line.id + "-" + std::to_string(++own)});
      line.stops.push_back({idx, pos});
      ++k;
    }
    line.route_length = pos;
    line.travel.model = TravelModel::Gamma;
    line.travel.gamma_shape = 4.0;
    for (std::size_t g = 0; g + 1 < line.stops.size(); ++g)
      line.travel.segment_mean_s.push_back((line.stops[g + 1].position - line.stops[g].position) /
                                           line.travel.speed_mps);
    s.lines.push_back(std::move(line));
  }

  // Per-stop totals split evenly across the lines that can carry a rider
  // onward from that stop.
  const double hours = s.sim_duration_s / 3600.0;
  for (std::size_t stop = 0; stop < s.stops.size(); ++stop) {
    std::vector<LineIndex> onward;
    for (std::size_t m = 0; m < s.lines.size(); ++m) {
      const int slot = s.lines[m].stop_slot(static_cast<StopIndex>(stop));
      if (slot >= 0 && slot + 1 < static_cast<int>(s.lines[m].stops.size())) onward.push_back(static_cast<LineIndex>(m));
    }
    if (onward.empty()) continue;
    const double total = std::round(uniform(p.pax_min, p.pax_max));
    for (LineIndex m : onward)
      s.demand.entries.push_back({static_cast<StopIndex>(stop), m, total / hours / static_cast<double>(onward.size()), {}});
  }
  // Headway from the expected peak load: riders pick a downstream stop
  // uniformly, so the flow over segment g sums r_j * (n-1-g)/(n-1-j).
  for (std::size_t m = 0; m < s.lines.size(); ++m) {
    LineConfig& line = s.lines[m];
    const std::size_t n = line.stops.size();
    std::vector<double> rate(n, 0.0);
    for (const auto& e : s.demand.entries)
      if (e.line == static_cast<LineIndex>(m)) rate[static_cast<std::size_t>(line.stop_slot(e.stop))] += e.rate_pax_h;
    double peak = 0.0;
    for (std::size_t g = 0; g + 1 < n; ++g) {
      double flow = 0.0;
      for (std::size_t j = 0; j <= g; ++j)
        flow += rate[j] * static_cast<double>(n - 1 - g) / static_cast<double>(n - 1 - j);
      peak = std::max(peak, flow);
    }
    const double fit = peak > 0 ? p.target_load * s.capacity * 3600.0 / peak : p.interval_max;
    const double snapped = std::floor(fit / 30.0) * 30.0;
    line.departure_interval = std::clamp(snapped, p.interval_min, p.interval_max);
  }
  validate(s);
  return s;
}

}  // namespace holdlab
