#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "holdlab/builtin.hpp"
#include "holdlab/cli.hpp"
#include "holdlab/controllers.hpp"
#include "holdlab/evaluation.hpp"
#include "holdlab/generator.hpp"

using namespace holdlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string demand_csv(const ScenarioConfig& s) {
  std::ostringstream out;
  out << "stop_id,line,hour,rate_pax_h\n";
  for (const auto& e : s.demand.entries)
    for (std::size_t h = 0; h < e.hourly_rates.size(); ++h)
      out << s.stops[e.stop].id << "," << s.lines[e.line].id << "," << h << "," << e.hourly_rates[h] << "\n";
  return out.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HOLDLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("holdlab_cli_" + name);
  fs::remove_all(p);
  return p;
}

ControllerFactory feedback_factory() {
  return [](const ScenarioConfig& s, std::uint64_t) { return std::make_unique<FeedbackController>(s.max_hold_s); };
}

}  // namespace

TEST(Builtin, Case1Layout) {
  const ScenarioConfig s = builtin_scenario("case1");
  ASSERT_EQ(s.lines.size(), 1u);
  const auto& l = s.lines[0];
  EXPECT_TRUE(l.circular);
  EXPECT_EQ(l.route_length, 10656.0);
  ASSERT_EQ(l.stops.size(), 8u);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(l.stops[k].position, 666.0 + 1332.0 * k);
  EXPECT_EQ(l.fleet_size, 6);
  EXPECT_EQ(s.capacity, 1000);
  EXPECT_EQ(s.max_hold_s, 90);
  EXPECT_EQ(s.action_step_s, 5);
  for (const auto& e : s.demand.entries) {
    EXPECT_GE(e.rate_pax_h, 40.0);
    EXPECT_LE(e.rate_pax_h, 180.0);
  }
}

TEST(Builtin, Case2Layout) {
  const ScenarioConfig s = builtin_scenario("case2");
  ASSERT_EQ(s.lines.size(), 2u);
  EXPECT_EQ(s.lines[0].stops.size(), 27u);
  EXPECT_EQ(s.lines[1].stops.size(), 27u);
  EXPECT_EQ(s.capacity, 120);
  std::set<StopIndex> a, b;
  for (const auto& ls : s.lines[0].stops) a.insert(ls.stop);
  for (const auto& ls : s.lines[1].stops) b.insert(ls.stop);
  std::vector<StopIndex> shared;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
  EXPECT_EQ(shared.size(), 8u);
  for (const auto& line : s.lines) {
    EXPECT_FALSE(line.circular);
    EXPECT_EQ(line.stops.back().position, line.route_length);
  }
  EXPECT_EQ(to_json(s), to_json(builtin_scenario("case2-synthetic")));
}

TEST(Builtin, Case2DemandTableIsCheckedIn) {
  const fs::path csv = fs::path(HOLDLAB_DATA) / "case2_demand.csv";
  const std::string want = demand_csv(builtin_scenario("case2"));
  if (std::getenv("HOLDLAB_UPDATE_DATA")) std::ofstream(csv, std::ios::binary) << want;
  ASSERT_TRUE(fs::exists(csv)) << "regenerate with HOLDLAB_UPDATE_DATA=1";
  EXPECT_EQ(read_file(csv), want);
}

TEST(Builtin, ResolveAndUnknown) {
  EXPECT_EQ(resolve_scenario("builtin:tiny").name, "tiny");
  EXPECT_ANY_THROW(builtin_scenario("case9"));
  EXPECT_ANY_THROW(resolve_scenario("/nonexistent/scenario.json"));
}

TEST(Generator, DeterministicPerSeed) {
  const GenParams p;
  EXPECT_EQ(to_json(gen_scenario(p, 4)).dump(), to_json(gen_scenario(p, 4)).dump());
  EXPECT_NE(to_json(gen_scenario(p, 4)).dump(), to_json(gen_scenario(p, 5)).dump());
}

TEST(Generator, RespectsRangesOverManySeeds) {
  const GenParams p;
  int with_shared = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const ScenarioConfig s = gen_scenario(p, seed);
    ASSERT_GE(static_cast<int>(s.lines.size()), p.lines_min);
    ASSERT_LE(static_cast<int>(s.lines.size()), p.lines_max);
    std::map<StopIndex, int> served;
    for (const auto& line : s.lines) {
      ASSERT_GE(static_cast<int>(line.stops.size()), p.stops_min);
      ASSERT_LE(static_cast<int>(line.stops.size()), p.stops_max);
      for (std::size_t k = 1; k < line.stops.size(); ++k) {
        const double gap = line.stops[k].position - line.stops[k - 1].position;
        ASSERT_GE(gap, p.spacing_min - 1e-9);
        ASSERT_LE(gap, p.spacing_max + 1e-9);
      }
      for (const auto& ls : line.stops) ++served[ls.stop];
    }
    bool shared = false;
    for (const auto& [stop, n] : served) shared |= n > 1;
    with_shared += shared;
    for (std::size_t k = 0; k < s.stops.size(); ++k) {
      const double total = expected_stop_total(s, static_cast<StopIndex>(k));
      if (total == 0.0) continue;  // terminal stops with no onward line
      ASSERT_GE(total, p.pax_min - 0.5);
      ASSERT_LE(total, p.pax_max + 0.5);
    }
  }
  EXPECT_GT(with_shared, 900);
}

TEST(Generator, HeadwaySizedToPeakLoad) {
  const GenParams p;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ScenarioConfig s = gen_scenario(p, seed);
    for (std::size_t m = 0; m < s.lines.size(); ++m) {
      const auto& line = s.lines[m];
      const std::size_t n = line.stops.size();
      std::vector<double> rate(n, 0.0);
      for (const auto& e : s.demand.entries)
        if (e.line == static_cast<LineIndex>(m)) rate[static_cast<std::size_t>(line.stop_slot(e.stop))] += e.rate_pax_h;
      // riders per bus over each segment, destinations uniform downstream
      double peak = 0.0;
      for (std::size_t g = 0; g + 1 < n; ++g) {
        double flow = 0.0;
        for (std::size_t j = 0; j <= g; ++j) flow += rate[j] * double(n - 1 - g) / double(n - 1 - j);
        peak = std::max(peak, flow * line.departure_interval / 3600.0);
      }
      const double I = line.departure_interval;
      ASSERT_EQ(std::fmod(I, 30.0), 0.0);
      ASSERT_GE(I, p.interval_min);
      ASSERT_LE(I, p.interval_max);
      if (I > p.interval_min) EXPECT_LE(peak, p.target_load * s.capacity + 1e-9) << s.name << " " << line.id;
      if (I < p.interval_max) EXPECT_GT(peak * (I + 30) / I, p.target_load * s.capacity) << s.name << " " << line.id;
    }
  }
}

TEST(Generator, DegenerateRanges) {
  GenParams p;
  p.lines_min = p.lines_max = 2;
  p.stops_min = p.stops_max = 16;
  p.spacing_min = p.spacing_max = 500;
  p.pax_min = p.pax_max = 300;
  const ScenarioConfig s = gen_scenario(p, 1);
  EXPECT_EQ(s.lines.size(), 2u);
  for (const auto& l : s.lines) EXPECT_EQ(l.stops.size(), 16u);
  p.lines_min = 3;
  EXPECT_ANY_THROW(p.validate());
}

TEST(Evaluation, SingleSeedHasZeroSpread) {
  const ScenarioConfig s = builtin_scenario("tiny");
  const EvalReport r = evaluate_multi_seed(s, feedback_factory(), {3}, "fb");
  EXPECT_EQ(r.avg_travel.sd, 0.0);
  EXPECT_EQ(r.rows.size(), 1u);
}

TEST(Evaluation, IndependentOfSeedOrderAndThreads) {
  const ScenarioConfig s = builtin_scenario("case1");
  const EvalReport a = evaluate_multi_seed(s, feedback_factory(), {1, 2, 3, 4, 5, 6}, "fb", 1);
  const EvalReport b = evaluate_multi_seed(s, feedback_factory(), {6, 4, 2, 5, 3, 1}, "fb", 3);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.aggregate_json(), b.aggregate_json());
  EXPECT_EQ(a.rows.front().seed, 1u);
}

TEST(Evaluation, FailuresBecomeRows) {
  const ScenarioConfig s = builtin_scenario("tiny");
  ControllerFactory bad = [](const ScenarioConfig&, std::uint64_t seed) -> std::unique_ptr<ControllerHook> {
    if (seed == 2) throw std::runtime_error("boom");
    return std::make_unique<NoHolding>();
  };
  const EvalReport r = evaluate_multi_seed(s, bad, {1, 2, 3}, "x");
  EXPECT_EQ(r.failures, 1u);
  EXPECT_FALSE(r.rows[1].ok);
  EXPECT_NE(r.rows[1].error.find("boom"), std::string::npos);
}

TEST(Evaluation, MeanSdAndSeedLists) {
  const MeanSd m = mean_sd({2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_EQ(m.mean, 5.0);
  EXPECT_EQ(m.sd, 2.0);
  EXPECT_EQ(parse_seed_list("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(parse_seed_list("3,5,9"), (std::vector<std::uint64_t>{3, 5, 9}));
  EXPECT_EQ(parse_seed_list("7"), (std::vector<std::uint64_t>{7}));
  EXPECT_ANY_THROW(parse_seed_list("5..1"));
  EXPECT_ANY_THROW(parse_seed_list("a"));
}

TEST(Cli, GenScenarioWritesLoadableJson) {
  const fs::path dir = fresh_dir("gen");
  ASSERT_EQ(run_cli("gen-scenario --seed 3 --out " + dir.string()), 0);
  const ScenarioConfig s = resolve_scenario((dir / "scenario.json").string());
  EXPECT_EQ(to_json(s).dump(), to_json(gen_scenario(GenParams{}, 3)).dump());
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST(Cli, EvaluateWritesOneRowPerSeed) {
  const fs::path dir = fresh_dir("eval");
  ASSERT_EQ(run_cli("evaluate --scenario builtin:case1 --controller feedback --seeds 1..10 --threads 2 --out " +
                    dir.string()),
            0);
  const std::string csv = read_file(dir / "metrics.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("seeds").size(), 10u);
  fs::remove_all(dir);
}

TEST(Cli, TrainShortRun) {
  const fs::path dir = fresh_dir("train");
  ASSERT_EQ(run_cli("train --scenario builtin:tiny --reward preset:local --episodes 2 --epochs 2 --seed 1 --out " +
                    dir.string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "checkpoint.json"));
  EXPECT_EQ(json::parse(read_file(dir / "evol.json")).at("total_rewards").size(), 2u);
  const fs::path sim = fresh_dir("train_sim");
  EXPECT_EQ(run_cli("simulate --scenario builtin:tiny --controller rl --checkpoint " +
                    (dir / "checkpoint.json").string() + " --out " + sim.string()),
            0);
  EXPECT_TRUE(fs::exists(sim / "metrics.json"));
  fs::remove_all(dir);
  fs::remove_all(sim);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("simulate --bogus-flag 1"), 2);
  EXPECT_EQ(run_cli("train --optimizer rmsprop"), 2);
}

TEST(Cli, RunFailureExitsOneWithErrorJson) {
  const fs::path dir = fresh_dir("fail");
  EXPECT_EQ(run_cli("simulate --scenario builtin:nope --out " + dir.string()), 1);
  EXPECT_TRUE(fs::exists(dir / "error.json"));
  fs::remove_all(dir);
}
