#include "holdlab/dqn.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "holdlab/rng.hpp"

namespace holdlab {

using nlohmann::json;

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

std::size_t ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
    return data_.size() - 1;
  }
  const std::size_t slot = next_;
  data_[slot] = t;
  next_ = (next_ + 1) % capacity_;
  return slot;
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  std::vector<std::size_t> out;
  if (data_.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pick(rng));
  return out;
}

Normalizer Normalizer::for_scenario(const ScenarioConfig& s) {
  Normalizer n;
  n.headway_scale = ideal_headway(s);
  n.capacity = s.capacity;
  n.max_hold = s.max_hold_s;
  return n;
}

QValues QAgent::q(const AgentObservation& obs) const {
  QNet::Mat x(6, 1);
  norm.apply(obs, x.data());
  const QNet::Mat out = net.forward(x);
  return {static_cast<double>(out(0, 0)), static_cast<double>(out(1, 0))};
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"gamma", gamma},
          {"episodes", episodes},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"buffer_capacity", buffer_capacity},
          {"eps_start", eps_start},
          {"eps_end", eps_end},
          {"eps_decay_episodes", eps_decay_episodes},
          {"hidden", hidden},
          {"reward_scale", reward_scale},
          {"optimizer", optimizer == OptimizerKind::Sgd ? "sgd" : "adam"},
          {"seed", seed}};
}

double epsilon(int episode, const TrainConfig& cfg) {
  if (episode < 0) throw std::invalid_argument("negative episode index");
  const double e = cfg.eps_start - (cfg.eps_start - cfg.eps_end) * episode / cfg.eps_decay_episodes;
  return std::max(cfg.eps_end, e);
}

int greedy_action(const QValues& q) { return q[0] > q[1] ? 0 : 1; }

int select_action(const QValues& q, double eps, std::mt19937_64& rng) {
  if (eps > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < eps) return std::uniform_int_distribution<int>(0, 1)(rng);
  }
  return greedy_action(q);
}

TdBatch<float> make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& idx, const Normalizer& norm,
                          double reward_scale) {
  TdBatch<float> b;
  const auto n = static_cast<Eigen::Index>(idx.size());
  b.states.resize(6, n);
  b.next_states.resize(6, n);
  b.rewards.resize(n);
  b.actions.resize(idx.size());
  b.terminal.resize(idx.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = buffer.at(idx[j]);
    norm.apply(t.state, b.states.col(j).data());
    norm.apply(t.next_state, b.next_states.col(j).data());
    b.rewards(j) = static_cast<float>(t.reward / reward_scale);
    b.actions[j] = t.action;
    b.terminal[j] = t.terminal;
  }
  return b;
}

json RewardFailure::to_json() const {
  return {{"kind", "RewardFailure"},
          {"message", what()},
          {"current_state", cur.values},
          {"action", action},
          {"next_state", nxt.values}};
}

namespace {

double reward_or_throw(const RewardProgram& reward, const AgentObservation& cur, int action,
                       const AgentObservation& nxt) {
  try {
    return evaluate(reward, cur, action, nxt);
  } catch (const EvalError& e) {
    throw RewardFailure(std::string("reward evaluation failed: ") + e.what(), cur, action, nxt);
  }
}

class TrainingHook : public ControllerHook {
 public:
  TrainingHook(const QAgent& agent, const RewardProgram& reward, double eps, std::mt19937_64& rng,
               ReplayBuffer& buffer, const TrainHooks& hooks)
      : agent_(agent), reward_(reward), eps_(eps), rng_(rng), buffer_(buffer), hooks_(hooks) {}

  void before_tick(const Simulation& sim) override { sim_ = &sim; }

  Action decide(const DecisionPoint& point) override {
    // Same draw order as select_action, but skips the forward pass for
    // exploratory steps.
    if (eps_ > 0.0) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      if (u(rng_) < eps_) return std::uniform_int_distribution<int>(0, 1)(rng_) == 0 ? Action::Hold : Action::Release;
    }
    return greedy_action(agent_.q(point.obs)) == 0 ? Action::Hold : Action::Release;
  }

  void on_followup(const DecisionPoint& point, Action action, const AgentObservation& next) override {
    Transition tr;
    tr.state = point.obs;
    tr.action = to_int(action);
    tr.next_state = next;
    tr.reward = reward_or_throw(reward_, point.obs, tr.action, next);
    tr.t = point.t;
    tr.t_next = sim_ ? sim_->time() : point.t;
    total += tr.reward;
    last_by_stop[point.stop] = buffer_.push(tr);
    if (hooks_.on_transition) hooks_.on_transition(tr);
  }

  double total = 0.0;
  std::map<StopIndex, std::size_t> last_by_stop;

 private:
  const QAgent& agent_;
  const RewardProgram& reward_;
  double eps_;
  std::mt19937_64& rng_;
  ReplayBuffer& buffer_;
  const TrainHooks& hooks_;
  const Simulation* sim_ = nullptr;
};

}  // namespace

QAgent make_agent(const ScenarioConfig& scenario, const TrainConfig& cfg) {
  std::vector<int> dims{6};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(2);
  QAgent agent{QNet(dims), Normalizer::for_scenario(scenario)};
  auto rng = make_rng(cfg.seed, kStreamInit);
  agent.net.init_uniform(rng);
  return agent;
}

double accrued_travel_time(const Simulation& sim) {
  const double now = sim.time();
  double total = 0.0;
  for (const auto& p : sim.passengers()) {
    if (p.arrive_time >= now) continue;
    total += (p.alight_time ? *p.alight_time : now) - p.arrive_time;
  }
  return total;
}

TrainResult run_training(const ScenarioConfig& scenario, const RewardProgram& reward, const TrainConfig& cfg,
                         const TrainHooks& hooks) {
  validate(scenario);
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (cfg.episodes < 0 || cfg.epochs < 0 || cfg.batch_size <= 0) throw std::invalid_argument("bad training sizes");

  TrainResult result;
  result.agent = make_agent(scenario, cfg);
  QAgent& agent = result.agent;
  ReplayBuffer buffer(cfg.buffer_capacity);
  auto explore_rng = make_rng(cfg.seed, kStreamExplore);
  auto replay_rng = make_rng(cfg.seed, kStreamReplay);
  std::optional<AdamState<float>> adam;
  if (cfg.optimizer == OptimizerKind::Adam) adam.emplace(agent.net);
  const auto shared = std::make_shared<const ScenarioConfig>(scenario);

  for (int e = 0; e < cfg.episodes; ++e) {
    const std::uint64_t episode_seed = derive_seed(cfg.seed, kStreamScenario, static_cast<std::uint64_t>(e));
    Simulation sim(shared, generate_passengers(scenario, episode_seed), episode_seed);
    TrainingHook hook(agent, reward, epsilon(e, cfg), explore_rng, buffer, hooks);
    sim.run(hook);

    double total = hook.total;
    if (reward.metadata.terminal_travel_time_scale) {
      const double terminal = -*reward.metadata.terminal_travel_time_scale * accrued_travel_time(sim);
      for (const auto& [stop, idx] : hook.last_by_stop) {
        Transition& t = buffer.at(idx);
        t.reward += terminal;
        t.terminal = true;
        total += terminal;
      }
    }
    result.evol.push_back(total);
    result.transitions = buffer.size();
    if (e == 0) {
      if (cfg.reward_scale > 0) {
        result.reward_scale = cfg.reward_scale;
      } else if (buffer.size() > 0) {
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < buffer.size(); ++i) abs_sum += std::fabs(buffer.at(i).reward);
        result.reward_scale = std::max(1.0, abs_sum / static_cast<double>(buffer.size()));
      }
    }

    double loss_sum = 0.0;
    for (int p = 0; p < cfg.epochs; ++p) {
      const auto idx = buffer.sample(static_cast<std::size_t>(cfg.batch_size), replay_rng);
      const auto batch = make_batch(buffer, idx, agent.norm, result.reward_scale);
      loss_sum += dqn_update(agent.net, batch, cfg.gamma, cfg.learning_rate, adam ? &*adam : nullptr);
    }
    result.losses.push_back(cfg.epochs ? loss_sum / cfg.epochs : 0.0);
    if (!agent.net.all_finite())
      throw std::runtime_error("non-finite network parameters after episode " + std::to_string(e));
    if (hooks.on_episode) hooks.on_episode(e, total);
  }
  return result;
}

Action QPolicyController::decide(const DecisionPoint& point) {
  return greedy_action(q_(point.obs)) == 0 ? Action::Hold : Action::Release;
}

void QPolicyController::on_followup(const DecisionPoint& point, Action action, const AgentObservation& next) {
  TrajectoryStep s;
  s.current_state = point.obs;
  s.action = to_int(action);
  s.next_state = next;
  if (reward_) s.reward = reward_or_throw(*reward_, point.obs, s.action, next);
  traj_.push_back(s);
}

TestResult run_test(const QFunction& q, const ScenarioConfig& scenario, const RewardProgram& reward,
                    std::uint64_t seed, SimOptions options) {
  Simulation sim(scenario, seed, options);
  QPolicyController ctrl(q, &reward);
  sim.run(ctrl);
  TestResult r;
  r.traj = ctrl.trajectory();
  r.rslt = compute_metrics(sim);
  if (options.record_events) r.event_log = sim.event_log_ndjson();
  return r;
}

TestResult run_test(const QAgent& agent, const ScenarioConfig& scenario, const RewardProgram& reward,
                    std::uint64_t seed, SimOptions options) {
  return run_test([&agent](const AgentObservation& o) { return agent.q(o); }, scenario, reward, seed, options);
}

json checkpoint_json(const QAgent& agent) {
  json j;
  j["format"] = "holdlab-qnet";
  j["version"] = 1;
  j["dims"] = agent.net.dims();
  j["normalizer"] = {{"headway_scale", agent.norm.headway_scale},
                     {"capacity", agent.norm.capacity},
                     {"max_hold", agent.norm.max_hold}};
  j["layers"] = json::array();
  for (std::size_t l = 0; l < agent.net.layers(); ++l) {
    const auto& W = agent.net.weight(l);
    json rows = json::array();
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(W.cols()));
      for (Eigen::Index k = 0; k < W.cols(); ++k) row[static_cast<std::size_t>(k)] = W(i, k);
      rows.push_back(row);
    }
    const auto& b = agent.net.bias(l);
    std::vector<double> bias(b.data(), b.data() + b.size());
    j["layers"].push_back({{"weight", rows}, {"bias", bias}});
  }
  return j;
}

QAgent agent_from_json(const json& j) {
  if (j.value("format", "") != "holdlab-qnet") throw std::runtime_error("not a holdlab checkpoint");
  if (j.value("version", 0) != 1) throw std::runtime_error("unsupported checkpoint version");
  QAgent agent;
  agent.net = QNet(j.at("dims").get<std::vector<int>>());
  const auto& n = j.at("normalizer");
  agent.norm.headway_scale = n.at("headway_scale");
  agent.norm.capacity = n.at("capacity");
  agent.norm.max_hold = n.at("max_hold");
  const auto& layers = j.at("layers");
  if (layers.size() != agent.net.layers()) throw std::runtime_error("checkpoint layer count mismatch");
  for (std::size_t l = 0; l < agent.net.layers(); ++l) {
    auto& W = agent.net.weight(l);
    const auto& rows = layers[l].at("weight");
    if (rows.size() != static_cast<std::size_t>(W.rows())) throw std::runtime_error("checkpoint shape mismatch");
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (row.size() != static_cast<std::size_t>(W.cols())) throw std::runtime_error("checkpoint shape mismatch");
      for (Eigen::Index k = 0; k < W.cols(); ++k) W(i, k) = static_cast<float>(row[static_cast<std::size_t>(k)].get<double>());
    }
    auto& b = agent.net.bias(l);
    const auto& bias = layers[l].at("bias");
    if (bias.size() != static_cast<std::size_t>(b.size())) throw std::runtime_error("checkpoint shape mismatch");
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = static_cast<float>(bias[static_cast<std::size_t>(i)].get<double>());
  }
  if (!agent.net.all_finite()) throw std::runtime_error("checkpoint contains non-finite parameters");
  return agent;
}

void save_checkpoint(const QAgent& agent, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << checkpoint_json(agent).dump() << '\n';
}

QAgent load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return agent_from_json(json::parse(in));
}

}  // namespace holdlab
