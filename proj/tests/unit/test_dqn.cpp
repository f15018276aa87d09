#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "holdlab/builtin.hpp"
#include "holdlab/controllers.hpp"
#include "holdlab/dqn.hpp"
#include "holdlab/reward_presets.hpp"

using namespace holdlab;

namespace {

using DNet = Mlp<double>;

TdBatch<double> random_batch(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  TdBatch<double> b;
  b.states.resize(6, static_cast<Eigen::Index>(n));
  b.next_states.resize(6, static_cast<Eigen::Index>(n));
  b.rewards.resize(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (int i = 0; i < 6; ++i) {
      b.states(i, static_cast<Eigen::Index>(j)) = g(rng);
      b.next_states(i, static_cast<Eigen::Index>(j)) = g(rng);
    }
    b.rewards(static_cast<Eigen::Index>(j)) = g(rng);
    b.actions.push_back(static_cast<int>(j % 2));
    b.terminal.push_back(j % 5 == 0);
  }
  return b;
}

TrainConfig tiny_train(int episodes, int epochs) {
  TrainConfig c;
  c.episodes = episodes;
  c.epochs = epochs;
  c.hidden = {16, 16};
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Epsilon, LinearDecayWithFloor) {
  EXPECT_DOUBLE_EQ(epsilon(0), 1.0);
  EXPECT_DOUBLE_EQ(epsilon(25), 0.51);
  EXPECT_NEAR(epsilon(50), 0.02, 1e-12);
  EXPECT_DOUBLE_EQ(epsilon(69), 0.02);
  EXPECT_THROW(epsilon(-1), std::invalid_argument);
}

TEST(SelectAction, GreedyAndTies) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(select_action({2.0, 1.0}, 0.0, rng), 0);
  EXPECT_EQ(select_action({1.0, 2.0}, 0.0, rng), 1);
  EXPECT_EQ(select_action({1.0, 1.0}, 0.0, rng), 1);
}

TEST(SelectAction, FullExplorationIsFair) {
  std::mt19937_64 rng(2);
  int holds = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) holds += select_action({0.0, 10.0}, 1.0, rng) == 0;
  EXPECT_NEAR(static_cast<double>(holds) / n, 0.5, 0.02);
  // eps = 0.51: greedy release plus half the exploration picks release
  holds = 0;
  for (int i = 0; i < n; ++i) holds += select_action({0.0, 10.0}, 0.51, rng) == 0;
  EXPECT_NEAR(static_cast<double>(holds) / n, 0.255, 0.02);
}

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
  Mlp<float> net({6, 400, 400, 400, 400, 2});
  Mlp<float>::Mat x = Mlp<float>::Mat::Random(6, 3);
  EXPECT_TRUE(net.forward(x).isZero());
}

TEST(Mlp, HandComputedForward) {
  DNet net({2, 2, 1});
  net.weight(0) << 1, -1, 2, 0.5;
  net.bias(0) << 0, -3;
  net.weight(1) << 1, 2;
  net.bias(1) << 0.5;
  DNet::Mat x(2, 2);
  x << 3, 1,
       1, 2;
  // col 0: z = (2, 3.5) -> relu (2, 3.5) -> 2 + 7 + 0.5
  // col 1: z = (-1, 0)  -> relu (0, 0)   -> 0.5
  const auto y = net.forward(x);
  EXPECT_DOUBLE_EQ(y(0, 0), 9.5);
  EXPECT_DOUBLE_EQ(y(0, 1), 0.5);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  DNet net({6, 8, 8, 2});
  net.init_uniform(rng);
  const auto b = random_batch(10, rng);
  const auto y = td_targets(net, b, 0.95);
  DNet::Grads g;
  td_loss_and_grad<double>(net, b, y, &g);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t l = 0; l < net.layers(); ++l) {
    for (Eigen::Index k = 0; k < net.weight(l).size(); ++k) {
      DNet plus = net, minus = net;
      plus.weight(l).data()[k] += h;
      minus.weight(l).data()[k] -= h;
      const double num = (td_loss_and_grad<double>(plus, b, y, nullptr) - td_loss_and_grad<double>(minus, b, y, nullptr)) / (2 * h);
      worst = std::max(worst, std::fabs(num - g.dW[l].data()[k]) / std::max(1.0, std::fabs(num)));
    }
    for (Eigen::Index k = 0; k < net.bias(l).size(); ++k) {
      DNet plus = net, minus = net;
      plus.bias(l)(k) += h;
      minus.bias(l)(k) -= h;
      const double num = (td_loss_and_grad<double>(plus, b, y, nullptr) - td_loss_and_grad<double>(minus, b, y, nullptr)) / (2 * h);
      worst = std::max(worst, std::fabs(num - g.db[l](k)) / std::max(1.0, std::fabs(num)));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(DqnUpdate, ZeroLearningRateIsBitwiseNoOp) {
  std::mt19937_64 rng(4);
  Mlp<float> net({6, 16, 2});
  net.init_uniform(rng);
  const Mlp<float> before = net;
  std::mt19937_64 brng(9);
  const auto bd = random_batch(8, brng);
  TdBatch<float> b{bd.states.cast<float>(), bd.actions, bd.rewards.cast<float>(), bd.next_states.cast<float>(),
                   bd.terminal};
  dqn_update(net, b, 0.95, 0.0);
  EXPECT_TRUE(net == before);
  TdBatch<float> empty;
  EXPECT_EQ(dqn_update(net, empty, 0.95, 0.1), 0.0);
  EXPECT_TRUE(net == before);
}

TEST(DqnUpdate, LossInvariantToBatchOrder) {
  std::mt19937_64 rng(6);
  DNet net({6, 8, 2});
  net.init_uniform(rng);
  const auto b = random_batch(12, rng);
  std::vector<Eigen::Index> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  TdBatch<double> p = b;
  for (Eigen::Index j = 0; j < 12; ++j) {
    p.states.col(j) = b.states.col(perm[j]);
    p.next_states.col(j) = b.next_states.col(perm[j]);
    p.rewards(j) = b.rewards(perm[j]);
    p.actions[j] = b.actions[perm[j]];
    p.terminal[j] = b.terminal[perm[j]];
  }
  const double la = td_loss_and_grad<double>(net, b, td_targets(net, b, 0.95), nullptr);
  const double lb = td_loss_and_grad<double>(net, p, td_targets(net, p, 0.95), nullptr);
  EXPECT_NEAR(la, lb, 1e-12);
}

TEST(DqnUpdate, SingleLinearStepMatchesClosedForm) {
  // Q = W s + b, one transition: target r + gamma * max Q(s'), step on Q(s, a).
  DNet net({6, 2});
  net.weight(0).setZero();
  net.weight(0)(0, 0) = 0.5;
  net.weight(0)(1, 1) = 1.0;
  net.bias(0) << 0.1, -0.2;
  TdBatch<double> b;
  b.states.resize(6, 1);
  b.states << 1, 2, 0, 0, 0, 0;
  b.next_states.resize(6, 1);
  b.next_states << 2, 1, 0, 0, 0, 0;
  b.rewards.resize(1);
  b.rewards << 1.0;
  b.actions = {0};
  b.terminal = {0};
  // Q(s) = (0.6, 1.8); Q(s') = (1.1, 0.8); y = 1 + 0.9 * 1.1 = 1.99
  // err = 0.6 - 1.99 = -1.39; dL/dq0 = -2.78
  const double loss = dqn_update(net, b, 0.9, 0.1);
  EXPECT_NEAR(loss, 1.39 * 1.39, 1e-12);
  EXPECT_NEAR(net.weight(0)(0, 0), 0.5 + 0.278 * 1, 1e-12);
  EXPECT_NEAR(net.weight(0)(0, 1), 0.278 * 2, 1e-12);
  EXPECT_NEAR(net.bias(0)(0), 0.1 + 0.278, 1e-12);
  EXPECT_DOUBLE_EQ(net.weight(0)(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(net.bias(0)(1), -0.2);
}

TEST(ReplayBuffer, RingOverwriteAndUniformSampling) {
  ReplayBuffer buf(4);
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.t = i;
    buf.push(t);
  }
  ASSERT_EQ(buf.size(), 4u);
  std::vector<int> ticks;
  for (std::size_t i = 0; i < buf.size(); ++i) ticks.push_back(buf.at(i).t);
  std::sort(ticks.begin(), ticks.end());
  EXPECT_EQ(ticks, (std::vector<int>{2, 3, 4, 5}));

  std::mt19937_64 rng(3);
  std::vector<int> hits(4, 0);
  const int n = 40000;
  for (auto i : buf.sample(n, rng)) ++hits[i];
  double chi2 = 0.0;
  for (int h : hits) chi2 += (h - n / 4.0) * (h - n / 4.0) / (n / 4.0);
  EXPECT_LT(chi2, 16.27);  // 3 dof, p = 0.001
}

TEST(Training, NoEpochsLeavesInitialNetwork) {
  const ScenarioConfig s = builtin_scenario("tiny");
  const auto cfg = tiny_train(1, 0);
  const TrainResult r = run_training(s, reward_preset("local", 1000), cfg);
  EXPECT_TRUE(r.agent.net == make_agent(s, cfg).net);
  EXPECT_GT(r.transitions, 0u);
}

TEST(Training, ZeroRewardGivesZeroEvolution) {
  const ScenarioConfig s = builtin_scenario("tiny");
  const TrainResult r = run_training(s, parse_reward("return 0;"), tiny_train(3, 2));
  ASSERT_EQ(r.evol.size(), 3u);
  for (double v : r.evol) EXPECT_EQ(v, 0.0);
}

TEST(Training, TransitionsSpanOneActionStep) {
  const ScenarioConfig s = builtin_scenario("tiny");
  TrainHooks hooks;
  std::size_t seen = 0;
  hooks.on_transition = [&](const Transition& t) {
    ++seen;
    EXPECT_EQ(t.t_next - t.t, s.action_step_s);
    // after a release the slot keeps the hold taken at the stop just left
    EXPECT_EQ(t.next_state.holding(), t.state.holding() + (t.action == 0 ? s.action_step_s : 0));
  };
  run_training(s, reward_preset("local", 1000), tiny_train(2, 1), hooks);
  EXPECT_GT(seen, 10u);
}

TEST(Training, DeterministicForSeed) {
  const ScenarioConfig s = builtin_scenario("tiny");
  const auto a = run_training(s, reward_preset("local", 1000), tiny_train(3, 5));
  const auto b = run_training(s, reward_preset("local", 1000), tiny_train(3, 5));
  EXPECT_EQ(a.evol, b.evol);
  EXPECT_TRUE(a.agent.net == b.agent.net);
}

TEST(Training, RewardScaleFromFirstEpisode) {
  const ScenarioConfig s = builtin_scenario("tiny");
  EXPECT_EQ(run_training(s, parse_reward("return 0 - 500;"), tiny_train(2, 1)).reward_scale, 500.0);
  EXPECT_EQ(run_training(s, reward_preset("local", 1000), tiny_train(2, 1)).reward_scale, 1.0);
  auto cfg = tiny_train(2, 1);
  cfg.reward_scale = 3.0;
  EXPECT_EQ(run_training(s, parse_reward("return 0 - 500;"), cfg).reward_scale, 3.0);
}

TEST(Training, ScaledRewardTrainsTheSameNetwork) {
  // power-of-two factor keeps the division exact
  const ScenarioConfig s = builtin_scenario("case1");
  const std::string body =
      "let same = abs(cur[0] - cur[1]) - abs(nxt[0] - nxt[1]);\n"
      "let other = abs(cur[2] - cur[3]) - abs(nxt[2] - nxt[3]);\n";
  auto plain = tiny_train(2, 4);
  plain.reward_scale = 1.0;
  auto scaled = plain;
  scaled.reward_scale = 4.0;
  const auto a = run_training(s, parse_reward(body + "return (same + other) / 1776;"), plain);
  const auto b = run_training(s, parse_reward(body + "return 4 * ((same + other) / 1776);"), scaled);
  EXPECT_TRUE(a.agent.net == b.agent.net);
  ASSERT_EQ(a.evol.size(), b.evol.size());
  for (std::size_t e = 0; e < a.evol.size(); ++e) EXPECT_DOUBLE_EQ(b.evol[e], 4 * a.evol[e]);
}

TEST(Checkpoint, RoundTripIsExact) {
  const ScenarioConfig s = builtin_scenario("tiny");
  const auto r = run_training(s, reward_preset("local", 1000), tiny_train(2, 3));
  const auto path = std::filesystem::temp_directory_path() / "holdlab_ckpt_test.json";
  save_checkpoint(r.agent, path.string());
  const QAgent back = load_checkpoint(path.string());
  std::filesystem::remove(path);
  EXPECT_TRUE(back.net == r.agent.net);
  EXPECT_EQ(back.norm.headway_scale, r.agent.norm.headway_scale);
  AgentObservation o;
  o[0] = 800;
  o[1] = 1200;
  EXPECT_EQ(back.q(o), r.agent.q(o));
}

TEST(RunTest, DeterministicAndTrajectoryMatchesReward) {
  const ScenarioConfig s = builtin_scenario("tiny");
  const auto r = run_training(s, reward_preset("local", 1000), tiny_train(2, 3));
  const RewardProgram rw = reward_preset("local", 1000);
  const auto a = run_test(r.agent, s, rw, 77);
  const auto b = run_test(r.agent, s, rw, 77);
  EXPECT_EQ(a.traj, b.traj);
  EXPECT_EQ(a.rslt.to_json(), b.rslt.to_json());
  for (const auto& st : a.traj)
    EXPECT_EQ(st.reward, evaluate(rw, st.current_state, st.action, st.next_state));
}

TEST(RunTest, FeedbackAsQFunctionMatchesController) {
  const ScenarioConfig s = builtin_scenario("case1");
  QFunction q = [&](const AgentObservation& o) -> QValues {
    return feedback_decide(o, s.max_hold_s) == Action::Hold ? QValues{1.0, 0.0} : QValues{0.0, 1.0};
  };
  const auto via_q = run_test(q, s, parse_reward("return 0;"), 12);
  Simulation sim(s, 12);
  FeedbackController fb(s.max_hold_s);
  sim.run(fb);
  EXPECT_EQ(via_q.rslt.to_json(), compute_metrics(sim).to_json());
}
