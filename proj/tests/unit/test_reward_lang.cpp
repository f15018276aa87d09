#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "holdlab/reward_lang.hpp"
#include "holdlab/reward_presets.hpp"

using namespace holdlab;

namespace {

AgentObservation state(std::array<double, 6> v) {
  AgentObservation o;
  o.values = v;
  return o;
}

double run(const std::string& src, const AgentObservation& cur = {}, int action = 1, const AgentObservation& nxt = {}) {
  return evaluate(parse_reward(src), cur, action, nxt);
}

// Straight arithmetic of the appendix-b reward, written independently of the DSL.
double appendix_b_oracle(const std::array<double, 6>& c, int a, const std::array<double, 6>& n) {
  const double ideal = 1650;
  const double same = std::fabs(n[0] - ideal) + std::fabs(n[1] - ideal);
  const double diff = (n[2] > 0 || n[3] > 0) ? std::fabs(n[2] - ideal) + std::fabs(n[3] - ideal) : 0.0;
  const double hold = a == 0 ? (n[5] - c[5]) * (n[5] - c[5]) : 0.0;
  auto sd = [](double x0, double x1, double x2, double x3) {
    const double m = (x0 + x1 + x2 + x3) / 4;
    return std::sqrt(((x0 - m) * (x0 - m) + (x1 - m) * (x1 - m) + (x2 - m) * (x2 - m) + (x3 - m) * (x3 - m)) / 4);
  };
  const double cs = sd(c[0], c[1], c[2], c[3]);
  const double ns = sd(n[0], n[1], n[2], n[3]);
  const double bonus = ns < cs ? (cs - ns) * 10 : 0.0;
  const double wait = n[5] * (c[4] / 50);
  const double dyn = n[5] > 60 ? 1.5 * hold : hold;
  return -(same + diff + dyn + wait) + bonus;
}

}  // namespace

TEST(Parse, ConstantProgram) {
  const RewardProgram p = parse_reward("return 0;");
  EXPECT_TRUE(p.lets.empty());
  EXPECT_EQ(evaluate(p, {}, 0, {}), 0.0);
}

TEST(Parse, ErrorsCarryPosition) {
  try {
    parse_reward("let a = 1;\nreturn cur[9];");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(e.message().find("out of range"), std::string::npos);
    EXPECT_EQ(e.to_json().at("line"), 2);
  }
  EXPECT_THROW(parse_reward("return foo;"), ParseError);
  EXPECT_THROW(parse_reward("return abs(1, 2);"), ParseError);
  EXPECT_THROW(parse_reward("return min(1);"), ParseError);
  EXPECT_THROW(parse_reward("return 1 +;"), ParseError);
  EXPECT_THROW(parse_reward("return 1"), ParseError);
  EXPECT_THROW(parse_reward("return cur[1.5];"), ParseError);
  EXPECT_THROW(parse_reward("return 1 < 2 < 3;"), ParseError);
  EXPECT_THROW(parse_reward("return if(1, 2, 3);"), ParseError);
  EXPECT_THROW(parse_reward("return true + 1;"), ParseError);
  EXPECT_THROW(parse_reward("return mean(1, 2);"), ParseError);
  EXPECT_THROW(parse_reward("return open(1);"), ParseError);
  EXPECT_THROW(parse_reward("return 1e5;"), ParseError);
  EXPECT_THROW(parse_reward("let x = 1; let x = 2; return x;"), ParseError);
  EXPECT_THROW(parse_reward("return y; let y = 1;"), ParseError);
}

TEST(Evaluate, Arithmetic) {
  EXPECT_EQ(run("return 10 - 4 - 3;"), 3.0);
  EXPECT_EQ(run("return 2 ** 3 ** 2;"), 512.0);
  EXPECT_EQ(run("return -2 ** 2;"), -4.0);
  EXPECT_EQ(run("return 1 + 2 * 3;"), 7.0);
  EXPECT_EQ(run("return 12 / 4 / 3;"), 1.0);
  EXPECT_EQ(run("return clamp(7, 0, 5) + min(3, 1, 2) + max(1, 4);"), 10.0);
  EXPECT_EQ(run("return sqrt(16) + abs(-2.5);"), 6.5);
  EXPECT_EQ(run("return mean([1, 2, 3, 6]);"), 3.0);
  EXPECT_EQ(run("return std([2, 4, 4, 4, 5, 5, 7, 9]);"), 2.0);
  EXPECT_EQ(run("return if(not (1 > 2) and (true or false), 1, 0);"), 1.0);
  EXPECT_EQ(run("let a = 2; let b = a * a; return b + a;"), 6.0);
}

TEST(Evaluate, StateAndAction) {
  const auto c = state({1, 2, 3, 4, 5, 6});
  const auto n = state({10, 20, 30, 40, 50, 60});
  EXPECT_EQ(run("return cur[0] + nxt[5] + action;", c, 1, n), 62.0);
  EXPECT_EQ(run("return current_state[1] * next_state[2];", c, 0, n), 60.0);
  EXPECT_EQ(run("return if(action == 0, 1, 2);", c, 0, n), 1.0);
}

TEST(Evaluate, ErrorsAreTyped) {
  EXPECT_THROW(run("return 1 / (cur[0] - cur[0]);"), EvalError);
  EXPECT_THROW(run("return sqrt(-1);"), EvalError);
  EXPECT_THROW(run("return 10 ** 400;"), EvalError);
  EXPECT_THROW(run("return clamp(1, 5, 0);"), EvalError);
}

TEST(Evaluate, PureAcrossCalls) {
  const RewardProgram p = reward_preset("appendix-b", 1650);
  const auto c = state({1200, 2100, 0, 0, 40, 10});
  const auto n = state({1300, 2000, 0, 0, 40, 15});
  const double a = evaluate(p, c, 0, n);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(evaluate(p, c, 0, n), a);
}

TEST(Presets, AppendixBExamples) {
  const RewardProgram p = reward_preset("appendix-b", 1650);
  const auto c = state({1650, 1650, 0, 0, 50, 0});
  EXPECT_EQ(evaluate(p, c, 1, state({1650, 1650, 0, 0, 50, 0})), 0.0);
  EXPECT_EQ(evaluate(p, c, 0, state({1650, 1650, 0, 0, 50, 5})), -30.0);
  // five named components survive the transliteration
  int named = 0;
  for (const auto& l : p.lets)
    for (const char* n : {"headway_penalty_same_line", "headway_penalty_diff_line", "holding_penalty",
                          "std_dev_reduction_reward", "waiting_time_penalty"})
      named += l.name == n;
  EXPECT_EQ(named, 5);
}

TEST(Presets, AppendixBMatchesOracle) {
  const RewardProgram p = reward_preset("appendix-b", 1650);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> h(0, 4000), pax(0, 120), hold(0, 90);
  for (int i = 0; i < 20; ++i) {
    std::array<double, 6> c{h(rng), h(rng), i % 3 ? h(rng) : 0.0, i % 3 ? h(rng) : 0.0, pax(rng), hold(rng)};
    std::array<double, 6> n{h(rng), h(rng), i % 3 ? h(rng) : 0.0, i % 3 ? h(rng) : 0.0, c[4], hold(rng)};
    const int a = i % 2;
    const double want = appendix_b_oracle(c, a, n);
    const double got = evaluate(p, state(c), a, state(n));
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::fabs(want)));
  }
}

TEST(Presets, LocalExample) {
  const RewardProgram p = reward_preset("local", 1650);
  const double r = evaluate(p, state({1000, 1500, 0, 0, 0, 0}), 1, state({1000, 1300, 0, 0, 0, 0}));
  EXPECT_NEAR(r, 200.0 / 1650.0, 1e-12);
  EXPECT_NEAR(r, 0.12121, 1e-5);
}

TEST(Presets, LocalPlusGlobalPenalisesHoldOnly) {
  const RewardProgram lg = reward_preset("local+global", 1650);
  const RewardProgram l = reward_preset("local", 1650);
  const auto c = state({1000, 1500, 0, 0, 0, 0});
  const auto n = state({1000, 1300, 0, 0, 0, 0});
  EXPECT_EQ(evaluate(lg, c, 1, n), evaluate(l, c, 1, n));
  EXPECT_NEAR(evaluate(lg, c, 0, n), evaluate(l, c, 0, n) - 0.1, 1e-12);
}

TEST(Presets, GlobalIsSparse) {
  const RewardProgram g = reward_preset("global", 1650);
  EXPECT_EQ(evaluate(g, state({1, 2, 3, 4, 5, 6}), 0, state({6, 5, 4, 3, 2, 1})), 0.0);
  ASSERT_TRUE(g.metadata.terminal_travel_time_scale);
  EXPECT_EQ(*g.metadata.terminal_travel_time_scale, 1e-4);
  EXPECT_FALSE(reward_preset("local", 1650).metadata.terminal_travel_time_scale);
  EXPECT_THROW(reward_preset("nope", 1650), std::invalid_argument);
}

TEST(PrettyPrint, RoundTripsEveryPreset) {
  for (const auto& name : preset_names()) {
    const RewardProgram p = reward_preset(name, 1776);
    const RewardProgram q = parse_reward(pretty_print(p));
    EXPECT_TRUE(structurally_equal(p, q)) << name;
    EXPECT_EQ(pretty_print(q), pretty_print(p)) << name;
    EXPECT_EQ(q.metadata.thoughts, p.metadata.thoughts) << name;
  }
}

TEST(PrettyPrint, KeepsPrecedenceAndAssociativity) {
  for (const char* src : {"return 10 - (4 - 3);", "return (10 - 4) - 3;", "return (2 ** 3) ** 2;",
                          "return 2 ** 3 ** 2;", "return -(1 + 2) * 3;", "return (-2) ** 2;",
                          "return 12 / (4 / 3);", "return if((1 < 2) == true, 1.25, 0.5);",
                          "return 0.1 + 1234567.891;"}) {
    const RewardProgram p = parse_reward(src);
    const RewardProgram q = parse_reward(pretty_print(p));
    EXPECT_TRUE(structurally_equal(p, q)) << src << " -> " << pretty_print(p);
    EXPECT_EQ(evaluate(p, {}, 1, {}), evaluate(q, {}, 1, {})) << src;
  }
}

TEST(Probe, FlagsErrorsAndHugeValues) {
  EXPECT_FALSE(probe_program(reward_preset("appendix-b", 1650)).error);
  EXPECT_TRUE(probe_program(parse_reward("return 1 / cur[0];")).error);
  const ProbeReport big = probe_program(parse_reward("return cur[0] ** 3;"));
  EXPECT_FALSE(big.error);
  ASSERT_EQ(big.warnings.size(), 1u);
  EXPECT_TRUE(probe_program(parse_reward("return 1;")).warnings.empty());
}

TEST(Metadata, CommentsBecomeThoughts) {
  const RewardProgram p = parse_reward("# first idea\n#second\nreturn 1; # trailing\n");
  ASSERT_GE(p.metadata.thoughts.size(), 2u);
  EXPECT_EQ(p.metadata.thoughts[0], "first idea");
}
