#include "holdlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace holdlab {

using nlohmann::json;

MeanSd mean_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double sum = 0.0;
  for (double x : xs) sum += x;
  return {sum / static_cast<double>(xs.size()), population_sd(xs)};
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw std::invalid_argument("bad seed '" + s + "'");
    return static_cast<std::uint64_t>(v);
  };
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(num(part));
      continue;
    }
    const auto lo = num(part.substr(0, dots));
    const auto hi = num(part.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("empty seed range '" + part + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("no seeds given");
  return out;
}

EvalReport evaluate_multi_seed(const ScenarioConfig& scenario, const ControllerFactory& factory,
                               std::vector<std::uint64_t> seeds, const std::string& label, int threads) {
  if (seeds.empty()) throw std::invalid_argument("evaluate_multi_seed needs at least one seed");
  std::sort(seeds.begin(), seeds.end());
  EvalReport rep;
  rep.label = label;
  rep.rows.resize(seeds.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < seeds.size(); i += stride) {
      SeedRow& row = rep.rows[i];
      row.seed = seeds[i];
      try {
        auto ctrl = factory(scenario, seeds[i]);
        Simulation sim(scenario, seeds[i]);
        sim.run(*ctrl);
        row.metrics = compute_metrics(sim);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(seeds.size())));
  if (n == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(work, k, n);
    for (auto& t : pool) t.join();
  }

  std::vector<double> sd, tt, wt, ht, inc;
  for (const auto& r : rep.rows) {
    if (!r.ok) {
      ++rep.failures;
      continue;
    }
    sd.push_back(r.metrics.sd_headway());
    tt.push_back(r.metrics.avg_travel);
    wt.push_back(r.metrics.avg_waiting);
    ht.push_back(r.metrics.avg_holding());
    inc.push_back(r.metrics.incomplete_trip_fraction);
  }
  rep.sd_headway = mean_sd(sd);
  rep.avg_travel = mean_sd(tt);
  rep.avg_waiting = mean_sd(wt);
  rep.avg_holding = mean_sd(ht);
  rep.incomplete = mean_sd(inc);
  return rep;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string cell(const MeanSd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", m.mean, m.sd);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

json ms_json(const MeanSd& m) { return {{"mean", m.mean}, {"sd", m.sd}}; }

}  // namespace

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "seed,status,SD_time_headways,avg_passenger_travel_time,avg_passenger_waiting_time,avg_holding_time,"
         "incomplete_trip_fraction,error\n";
  for (const auto& r : rows) {
    out << r.seed << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok)
      out << fmt(r.metrics.sd_headway()) << ',' << fmt(r.metrics.avg_travel) << ',' << fmt(r.metrics.avg_waiting)
          << ',' << fmt(r.metrics.avg_holding()) << ',' << fmt(r.metrics.incomplete_trip_fraction) << ",";
    else
      out << ",,,,,";
    out << csv_escape(r.error) << '\n';
  }
  return out.str();
}

json EvalReport::aggregate_json() const {
  json seeds = json::array();
  for (const auto& r : rows) seeds.push_back(r.seed);
  return {{"label", label},
          {"seeds", seeds},
          {"runs", rows.size()},
          {"failures", failures},
          {"SD_time_headways", ms_json(sd_headway)},
          {"avg_passenger_travel_time", ms_json(avg_travel)},
          {"avg_passenger_waiting_time", ms_json(avg_waiting)},
          {"avg_holding_time", ms_json(avg_holding)},
          {"incomplete_trip_fraction", ms_json(incomplete)}};
}

std::string table_header() {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-24s %-18s %-18s %-18s %-18s\n", "Method", "SD headways (s)", "Avg TT (s)",
                "Avg WT (s)", "Avg HT (s)");
  return buf;
}

std::string EvalReport::table_row() const {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-24s %-19s %-19s %-19s %-19s\n", label.c_str(), cell(sd_headway).c_str(),
                cell(avg_travel).c_str(), cell(avg_waiting).c_str(), cell(avg_holding).c_str());
  return buf;
}

}  // namespace holdlab
