#include <gtest/gtest.h>

#include <set>

#include "holdlab/builtin.hpp"
#include "holdlab/feedback.hpp"
#include "holdlab/prompts.hpp"

using namespace holdlab;
using nlohmann::json;

namespace {

const std::set<std::string> kCallSpecific{"current_reward_function", "analysis", "trajectories",
                                          "previous_reward_function", "previous_analysis", "current_test_results"};

std::vector<TrajectoryStep> numbered(int n) {
  std::vector<TrajectoryStep> out;
  for (int i = 0; i < n; ++i) {
    TrajectoryStep s;
    s.current_state[0] = i;
    s.action = i % 2;
    s.reward = 0.5 * i;
    s.next_state[0] = i + 1;
    out.push_back(s);
  }
  return out;
}

MetricsReport report(int lines, bool shared) {
  MetricsReport r;
  for (int m = 0; m < lines; ++m) {
    LineMetrics l;
    l.sd_headway = 60.5 + m;
    l.avg_travel = 1300.25 + m;
    l.avg_waiting = 220.125 + m;
    l.avg_holding = 9.0 + m;
    r.lines.push_back(l);
  }
  r.has_shared = shared;
  r.shared.sd_headway = 33.0;
  r.shared.avg_travel = 900.0;
  r.shared.avg_waiting = 150.0;
  r.avg_travel = 1301.0;
  r.avg_waiting = 221.0;
  return r;
}

}  // namespace

TEST(Prompts, ContextFillsEveryNonCallPlaceholder) {
  for (const char* sc : {"case1", "case2"}) {
    const auto vars = PromptContext::from_scenario(builtin_scenario(sc)).variables();
    for (const auto& id : template_ids()) {
      const auto& t = prompt_template(id);
      for (const auto& name : placeholders(t.body)) {
        if (kCallSpecific.count(name)) continue;
        EXPECT_TRUE(vars.count(name)) << id << " needs {" << name << "} for " << sc;
      }
      EXPECT_TRUE(placeholders(t.system).empty()) << id;
    }
  }
}

TEST(Prompts, RenderedTemplatesHaveNoLeftovers) {
  auto vars = PromptContext::from_scenario(builtin_scenario("case2")).variables();
  for (const auto& k : kCallSpecific) vars[k] = "<" + k + ">";
  for (const auto& id : template_ids()) {
    const std::string out = render(prompt_template(id).body, vars);
    EXPECT_TRUE(placeholders(out).empty()) << id;
    EXPECT_EQ(out.find("{max_hold}"), std::string::npos);
  }
}

TEST(Prompts, RenderThrowsOnMissingValue) {
  EXPECT_THROW(render("hold {max_hold} s, {missing}", {{"max_hold", "90"}}), TemplateError);
  EXPECT_EQ(render("a {x} b", {{"x", "{y}"}}), "a {y} b");
  EXPECT_EQ(render("json {\"k\": 1}", {}), "json {\"k\": 1}");
  EXPECT_EQ(placeholders("{b} {a} {b}"), (std::vector<std::string>{"b", "a"}));
}

TEST(Prompts, ContextFromScenario) {
  const PromptContext one = PromptContext::from_scenario(builtin_scenario("case1"));
  EXPECT_EQ(one.lines, 1);
  EXPECT_EQ(one.stops_per_line, (std::vector<int>{8}));
  const PromptContext two = PromptContext::from_scenario(builtin_scenario("case2"));
  EXPECT_EQ(two.lines, 2);
  EXPECT_EQ(two.shared_stops, 8);
  EXPECT_NE(two.variables().at("system_overview").find("2 bus lines"), std::string::npos);
  EXPECT_EQ(one.variables().at("feedback_format").find("test_results_line_2"), std::string::npos);
  EXPECT_NE(two.variables().at("feedback_format").find("test_results_shared_part"), std::string::npos);
}

TEST(Prompts, UnknownTemplate) { EXPECT_ANY_THROW(prompt_template("summarizer")); }

TEST(FeedbackJson, TruncationKeepsTail) {
  EXPECT_EQ(truncate_trajectory(numbered(30)).size(), 30u);
  EXPECT_EQ(truncate_trajectory(numbered(50)).size(), 50u);
  const auto t = truncate_trajectory(numbered(120));
  ASSERT_EQ(t.size(), 50u);
  EXPECT_EQ(t.front().current_state[0], 70.0);
  EXPECT_EQ(t.back().current_state[0], 119.0);
  EXPECT_TRUE(truncate_trajectory({}).empty());
}

TEST(FeedbackJson, EncodesTwoObjectsWithExactKeys) {
  const json j = encode_feedback_json({1.5, -2.0}, numbered(3), report(2, true));
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0].size(), 1u);
  EXPECT_EQ(j[0]["training_history"]["total_rewards"], json({1.5, -2.0}));
  const json& t = j[1];
  std::set<std::string> keys;
  for (auto it = t.begin(); it != t.end(); ++it) keys.insert(it.key());
  EXPECT_EQ(keys, (std::set<std::string>{"test_history", "test_results_line_1", "test_results_line_2",
                                         "test_results_shared_part", "test_results_overall"}));
  const json& h = t["test_history"];
  EXPECT_EQ(h["current_states"].size(), 3u);
  EXPECT_EQ(h["current_states"][2].size(), 6u);
  EXPECT_EQ(h["actions"], json({0, 1, 0}));
  EXPECT_EQ(h["rewards"], json({0.0, 0.5, 1.0}));
  EXPECT_EQ(t["test_results_line_2"]["SD_time_headways"], 61.5);
  EXPECT_EQ(t["test_results_line_1"]["avg_holding_time"], 9.0);
  EXPECT_EQ(t["test_results_shared_part"].size(), 3u);
  EXPECT_EQ(t["test_results_overall"].size(), 2u);
}

TEST(FeedbackJson, SingleLineOmitsSharedAndSecondLine) {
  const json t = encode_feedback_json({}, {}, report(1, false))[1];
  EXPECT_TRUE(t.contains("test_results_line_1"));
  EXPECT_FALSE(t.contains("test_results_line_2"));
  EXPECT_FALSE(t.contains("test_results_shared_part"));
  // shared flag alone does not add the object on one line
  EXPECT_FALSE(encode_feedback_json({}, {}, report(1, true))[1].contains("test_results_shared_part"));
}

TEST(FeedbackJson, EmptyHistoryStaysWellFormed) {
  const json j = encode_feedback_json({}, {}, report(1, false));
  EXPECT_TRUE(j[0]["training_history"]["total_rewards"].is_array());
  EXPECT_TRUE(j[0]["training_history"]["total_rewards"].empty());
  EXPECT_TRUE(j[1]["test_history"]["actions"].empty());
}

TEST(FeedbackJson, NumbersRoundTripThroughText) {
  const std::vector<double> evol{0.1, 1.0 / 3.0, -1e-9, 123456.789};
  const json back = json::parse(encode_feedback_json(evol, numbered(2), report(1, false)).dump());
  EXPECT_EQ(back[0]["training_history"]["total_rewards"].get<std::vector<double>>(), evol);
}
