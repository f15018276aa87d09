#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "holdlab/metrics.hpp"
#include "holdlab/mlp.hpp"
#include "holdlab/reward_lang.hpp"
#include "holdlab/simulation.hpp"

namespace holdlab {

struct Transition {
  AgentObservation state;
  int action = 1;
  double reward = 0.0;
  AgentObservation next_state;
  bool terminal = false;
  int t = 0;       // decision tick
  int t_next = 0;  // tick of next_state
};

/// Ring buffer shared by every stop agent; uniform sampling with
/// replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  std::size_t push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }
  Transition& at(std::size_t i) { return data_[i]; }
  std::vector<std::size_t> sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

/// Network inputs: headways / H, onboard / c, holding / max_hold.
struct Normalizer {
  double headway_scale = 1.0;
  double capacity = 1.0;
  double max_hold = 90.0;

  static Normalizer for_scenario(const ScenarioConfig& s);
  template <typename Scalar>
  void apply(const AgentObservation& o, Scalar* out) const {
    for (int i = 0; i < 4; ++i) out[i] = static_cast<Scalar>(o[i] / headway_scale);
    out[4] = static_cast<Scalar>(o[4] / capacity);
    out[5] = static_cast<Scalar>(o[5] / max_hold);
  }
};

using QNet = Mlp<float>;
using QValues = std::array<double, 2>;

struct QAgent {
  QNet net;
  Normalizer norm;
  QValues q(const AgentObservation& obs) const;
};

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  double learning_rate = 0.001;
  double gamma = 0.95;
  int episodes = 70;
  int epochs = 200;
  int batch_size = 64;
  std::size_t buffer_capacity = 100000;
  double eps_start = 1.0;
  double eps_end = 0.02;
  int eps_decay_episodes = 50;
  std::vector<int> hidden{400, 400, 400, 400};
  OptimizerKind optimizer = OptimizerKind::Sgd;
  // Rewards are divided by this before the TD update. 0: max(1, mean |r|)
  // over the first episode, then frozen. Greedy policies don't change.
  double reward_scale = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

double epsilon(int episode, const TrainConfig& cfg = {});

/// Epsilon-greedy; greedy ties go to release (action 1).
int select_action(const QValues& q, double eps, std::mt19937_64& rng);
int greedy_action(const QValues& q);

template <typename Scalar>
struct TdBatch {
  typename Mlp<Scalar>::Mat states;       // 6 x B
  std::vector<int> actions;
  typename Mlp<Scalar>::Vec rewards;
  typename Mlp<Scalar>::Mat next_states;  // 6 x B
  std::vector<char> terminal;
  std::size_t size() const { return actions.size(); }
};

/// r + gamma * max_a' Q(s', a') with the network as given (frozen).
template <typename Scalar>
typename Mlp<Scalar>::Vec td_targets(const Mlp<Scalar>& net, const TdBatch<Scalar>& b, double gamma) {
  const auto q_next = net.forward(b.next_states);
  typename Mlp<Scalar>::Vec y(static_cast<Eigen::Index>(b.size()));
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const Scalar best = std::max(q_next(0, j), q_next(1, j));
    y(j) = b.rewards(j) + (b.terminal[j] ? Scalar(0) : static_cast<Scalar>(gamma) * best);
  }
  return y;
}

/// Mean squared TD error against fixed targets, and its gradient.
template <typename Scalar>
double td_loss_and_grad(const Mlp<Scalar>& net, const TdBatch<Scalar>& b, const typename Mlp<Scalar>::Vec& y,
                        typename Mlp<Scalar>::Grads* grads) {
  typename Mlp<Scalar>::Cache cache;
  const auto q = net.forward(b.states, cache);
  const auto n = static_cast<Eigen::Index>(b.size());
  typename Mlp<Scalar>::Mat d_out = Mlp<Scalar>::Mat::Zero(q.rows(), n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar err = q(b.actions[j], j) - y(j);
    loss += static_cast<double>(err) * static_cast<double>(err);
    d_out(b.actions[j], j) = Scalar(2) * err / static_cast<Scalar>(n);
  }
  loss /= static_cast<double>(n);
  if (grads) *grads = net.backward(cache, d_out);
  return loss;
}

/// One gradient step on the TD loss. Returns the pre-step loss. An empty
/// batch is a no-op with loss 0; lr == 0 leaves the parameters untouched.
template <typename Scalar>
double dqn_update(Mlp<Scalar>& net, const TdBatch<Scalar>& b, double gamma, double lr,
                  AdamState<Scalar>* adam = nullptr) {
  if (b.size() == 0) return 0.0;
  const auto y = td_targets(net, b, gamma);
  if (lr == 0.0) return td_loss_and_grad<Scalar>(net, b, y, nullptr);
  typename Mlp<Scalar>::Grads g;
  const double loss = td_loss_and_grad<Scalar>(net, b, y, &g);
  if (adam) adam->step(net, g, static_cast<Scalar>(lr));
  else net.sgd_step(g, static_cast<Scalar>(lr));
  return loss;
}

TdBatch<float> make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& idx, const Normalizer& norm,
                          double reward_scale = 1.0);

/// Reward evaluation failed on a concrete transition.
class RewardFailure : public std::runtime_error {
 public:
  RewardFailure(const std::string& what, AgentObservation cur, int action, AgentObservation nxt)
      : std::runtime_error(what), cur(cur), action(action), nxt(nxt) {}
  nlohmann::json to_json() const;
  AgentObservation cur;
  int action;
  AgentObservation nxt;
};

struct TrajectoryStep {
  AgentObservation current_state;
  int action = 1;
  double reward = 0.0;
  AgentObservation next_state;
  bool operator==(const TrajectoryStep&) const = default;
};

struct TrainResult {
  QAgent agent;
  std::vector<double> evol;  // total reward per episode
  std::vector<double> losses;  // mean loss per episode
  std::size_t transitions = 0;
  double reward_scale = 1.0;
};

struct TrainHooks {
  // Called after each episode with (episode, total reward).
  std::function<void(int, double)> on_episode;
  // Captures every stored transition (tests).
  std::function<void(const Transition&)> on_transition;
};

QAgent make_agent(const ScenarioConfig& scenario, const TrainConfig& cfg);

TrainResult run_training(const ScenarioConfig& scenario, const RewardProgram& reward, const TrainConfig& cfg,
                         const TrainHooks& hooks = {});

/// Total time passengers have spent in the system by the end of the run
/// (completed trips plus time accrued by unfinished ones).
double accrued_travel_time(const Simulation& sim);

using QFunction = std::function<QValues(const AgentObservation&)>;

/// Greedy controller over any Q function; optionally records a reward
/// trajectory.
class QPolicyController : public ControllerHook {
 public:
  QPolicyController(QFunction q, const RewardProgram* reward = nullptr) : q_(std::move(q)), reward_(reward) {}
  Action decide(const DecisionPoint& point) override;
  void on_followup(const DecisionPoint& point, Action action, const AgentObservation& next) override;
  const std::vector<TrajectoryStep>& trajectory() const { return traj_; }

 private:
  QFunction q_;
  const RewardProgram* reward_;
  std::vector<TrajectoryStep> traj_;
};

struct TestResult {
  std::vector<TrajectoryStep> traj;
  MetricsReport rslt;
  std::string event_log;  // NDJSON when requested
};

TestResult run_test(const QFunction& q, const ScenarioConfig& scenario, const RewardProgram& reward,
                    std::uint64_t seed, SimOptions options = {});
TestResult run_test(const QAgent& agent, const ScenarioConfig& scenario, const RewardProgram& reward,
                    std::uint64_t seed, SimOptions options = {});

nlohmann::json checkpoint_json(const QAgent& agent);
QAgent agent_from_json(const nlohmann::json& j);
void save_checkpoint(const QAgent& agent, const std::string& path);
QAgent load_checkpoint(const std::string& path);

}  // namespace holdlab
