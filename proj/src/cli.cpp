#include "holdlab/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "holdlab/builtin.hpp"
#include "holdlab/controllers.hpp"
#include "holdlab/dqn.hpp"
#include "holdlab/generator.hpp"
#include "holdlab/orchestrator.hpp"
#include "holdlab/reward_presets.hpp"

namespace holdlab {

using nlohmann::json;
namespace fs = std::filesystem;

ControllerFactory make_controller_factory(const std::string& spec, const ScenarioConfig& scenario,
                                          const ControllerOptions& o) {
  if (spec == "none")
    return [](const ScenarioConfig&, std::uint64_t) { return std::make_unique<NoHolding>(); };
  if (spec == "feedback")
    return [](const ScenarioConfig& s, std::uint64_t) { return std::make_unique<FeedbackController>(s.max_hold_s); };
  if (spec == "model")
    return [](const ScenarioConfig& s, std::uint64_t) { return std::make_unique<ModelBasedController>(s); };
  if (spec == "pso-robust" || spec == "pso-stochastic") {
    PsoPlannerConfig cfg;
    cfg.mode = spec == "pso-robust" ? PsoMode::Robust : PsoMode::Stochastic;
    cfg.window_s = o.pso_window;
    cfg.scenarios = o.pso_scenarios;
    cfg.pso.swarm = o.pso_swarm;
    cfg.pso.iterations = o.pso_iterations;
    cfg.threads = o.threads;
    return [cfg](const ScenarioConfig&, std::uint64_t seed) {
      PsoPlannerConfig c = cfg;
      c.seed = seed;
      return std::make_unique<PsoController>(c);
    };
  }
  if (spec == "rl") {
    if (o.checkpoint.empty()) throw std::invalid_argument("controller rl needs --checkpoint");
    auto agent = std::make_shared<const QAgent>(load_checkpoint(o.checkpoint));
    return [agent](const ScenarioConfig&, std::uint64_t) {
      return std::make_unique<QPolicyController>([agent](const AgentObservation& obs) { return agent->q(obs); });
    };
  }
  constexpr std::string_view prefix = "reward-preset:";
  if (spec.rfind(prefix, 0) == 0) {
    const RewardProgram reward = reward_preset(spec.substr(prefix.size()), ideal_headway(scenario));
    TrainConfig cfg;
    cfg.episodes = o.train_episodes;
    cfg.epochs = o.train_epochs;
    cfg.seed = o.train_seed;
    auto agent = std::make_shared<const QAgent>(run_training(scenario, reward, cfg).agent);
    return [agent](const ScenarioConfig&, std::uint64_t) {
      return std::make_unique<QPolicyController>([agent](const AgentObservation& obs) { return agent->q(obs); });
    };
  }
  throw std::invalid_argument("unknown controller '" + spec + "'");
}

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

struct Run {
  std::string out = "run";
  std::string scenario = "builtin:case1";
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<std::string> argv;
  std::vector<std::string> artifacts;
  json config = json::object();
  json seeds = json::array();
  std::string started;

  fs::path path(const std::string& rel) const { return fs::path(out) / rel; }
  void save(const std::string& rel, const std::string& text) {
    write_file(path(rel), text);
    artifacts.push_back(rel);
  }
  void manifest(const std::string& command) const {
    json m{{"tool", "holdlab"},
           {"version", HOLDLAB_VERSION},
           {"command", command},
           {"argv", argv},
           {"scenario", scenario},
           {"config", config},
           {"seeds", seeds},
           {"artifacts", artifacts},
           {"started_at", started},
           {"finished_at", now_utc()}};
    write_file(path("manifest.json"), m.dump(2) + "\n");
  }
};

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Bus holding control lab: simulation, RL training, reward evolution"};
  app.require_subcommand(1);
  app.allow_extras(false);
  Run run;
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);
  run.started = now_utc();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", run.scenario, "scenario JSON or builtin:NAME");
    sub->add_option("--seed", run.seed, "run seed");
    sub->add_option("--out", run.out, "output directory");
    sub->add_option("--threads", run.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  ControllerOptions copt;
  std::string controller = "none";
  auto add_controller = [&](CLI::App* sub) {
    sub->add_option("--controller", controller,
                    "none|feedback|model|pso-robust|pso-stochastic|rl|reward-preset:<name>");
    sub->add_option("--checkpoint", copt.checkpoint, "Q-network checkpoint for --controller rl");
    sub->add_option("--pso-swarm", copt.pso_swarm);
    sub->add_option("--pso-iterations", copt.pso_iterations);
    sub->add_option("--pso-scenarios", copt.pso_scenarios);
    sub->add_option("--pso-window", copt.pso_window);
  };

  TrainConfig tcfg;
  std::string reward_spec = "preset:local";
  std::string optimizer = "sgd";
  auto add_train = [&](CLI::App* sub) {
    sub->add_option("--reward", reward_spec, "preset:<name> or .reward file");
    sub->add_option("--episodes", tcfg.episodes);
    sub->add_option("--epochs", tcfg.epochs);
    sub->add_option("--lr", tcfg.learning_rate);
    sub->add_option("--optimizer", optimizer)->check(CLI::IsMember({"sgd", "adam"}));
  };

  auto* simulate = app.add_subcommand("simulate", "run one simulation");
  add_common(simulate);
  add_controller(simulate);
  bool events = false;
  simulate->add_flag("--events", events, "write the NDJSON event log");

  auto* train = app.add_subcommand("train", "train a shared DQN holding agent");
  add_common(train);
  add_train(train);
  std::uint64_t test_seed = 0;
  train->add_option("--test-seed", test_seed, "seed of the greedy test run (default seed + 1000)");

  auto* evolve = app.add_subcommand("evolve", "LLM-driven reward evolution");
  add_common(evolve);
  add_train(evolve);
  EvolveConfig ecfg;
  std::string provider = "replay:";
  std::string endpoint, model, key_env = "LLM_API_KEY", warm;
  std::string criterion_mode = "multiplicative";
  double temperature = 0.3;
  evolve->add_option("--iterations", ecfg.iterations);
  evolve->add_option("--provider", provider, "replay:<fixture.json> | http");
  evolve->add_option("--endpoint", endpoint);
  evolve->add_option("--model", model);
  evolve->add_option("--api-key-env", key_env);
  evolve->add_option("--temperature", temperature);
  evolve->add_option("--criterion-slack", ecfg.criterion.slack);
  evolve->add_option("--criterion-mode", criterion_mode)->check(CLI::IsMember({"multiplicative", "additive"}));
  evolve->add_option("--criterion-metric", ecfg.criterion.metric);
  evolve->add_option("--refine-cap", ecfg.refine_cap);
  evolve->add_option("--warm-start", warm, "initial reward (preset:<name> or file); skips the initializer");

  auto* evaluate = app.add_subcommand("evaluate", "multi-seed evaluation of a controller");
  add_common(evaluate);
  add_controller(evaluate);
  std::string seeds_text = "1..10";
  std::string label;
  evaluate->add_option("--seeds", seeds_text, "e.g. 1..10 or 3,5,9");
  evaluate->add_option("--label", label);
  evaluate->add_option("--train-episodes", copt.train_episodes, "for reward-preset controllers");

  auto* gen = app.add_subcommand("gen-scenario", "random multi-line scenario");
  add_common(gen);
  GenParams gp;
  gen->add_option("--lines-min", gp.lines_min);
  gen->add_option("--lines-max", gp.lines_max);
  gen->add_option("--stops-min", gp.stops_min);
  gen->add_option("--stops-max", gp.stops_max);
  gen->add_option("--pax-min", gp.pax_min);
  gen->add_option("--pax-max", gp.pax_max);
  gen->add_option("--target-load", gp.target_load, "busiest segment load as a share of capacity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* used = app.get_subcommands().front();
  const std::string command = used->get_name();
  try {
    fs::create_directories(run.out);
    copt.threads = run.threads;
    tcfg.optimizer = optimizer == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;

    if (command == "gen-scenario") {
      const ScenarioConfig s = gen_scenario(gp, run.seed);
      run.save("scenario.json", to_json(s).dump(2) + "\n");
      run.seeds.push_back(run.seed);
      run.config = {{"lines", {gp.lines_min, gp.lines_max}},
                    {"stops", {gp.stops_min, gp.stops_max}},
                    {"pax", {gp.pax_min, gp.pax_max}}};
      run.manifest(command);
      return 0;
    }

    const ScenarioConfig scenario = resolve_scenario(run.scenario);
    run.save("scenario.json", to_json(scenario).dump(2) + "\n");

    if (command == "simulate") {
      auto factory = make_controller_factory(controller, scenario, copt);
      auto ctrl = factory(scenario, run.seed);
      Simulation sim(scenario, run.seed, SimOptions{events});
      sim.run(*ctrl);
      const MetricsReport m = compute_metrics(sim);
      run.save("metrics.json", m.to_json().dump(2) + "\n");
      if (events) run.save("events.ndjson", sim.event_log_ndjson());
      run.seeds.push_back(run.seed);
      run.config = {{"controller", controller}};
      run.manifest(command);
      std::cout << table_header();
      EvalReport one;
      one.label = controller;
      one.sd_headway = {m.sd_headway(), 0};
      one.avg_travel = {m.avg_travel, 0};
      one.avg_waiting = {m.avg_waiting, 0};
      one.avg_holding = {m.avg_holding(), 0};
      std::cout << one.table_row();
      return 0;
    }

    if (command == "train") {
      const RewardProgram reward = load_reward(reward_spec, ideal_headway(scenario));
      tcfg.seed = run.seed;
      TrainHooks hooks;
      hooks.on_episode = [](int e, double total) { std::cerr << "episode " << e << " total reward " << total << "\n"; };
      TrainResult r = run_training(scenario, reward, tcfg, hooks);
      save_checkpoint(r.agent, run.path("checkpoint.json").string());
      run.artifacts.push_back("checkpoint.json");
      run.save("reward.reward", reward.source);
      run.save("evol.json", json{{"total_rewards", r.evol}, {"mean_loss", r.losses}, {"reward_scale", r.reward_scale}}.dump(2) + "\n");
      const std::uint64_t ts = test_seed ? test_seed : run.seed + 1000;
      const TestResult t = run_test(r.agent, scenario, reward, ts);
      run.save("test_metrics.json", t.rslt.to_json().dump(2) + "\n");
      run.seeds = {run.seed, ts};
      run.config = {{"reward", reward_spec}, {"train", tcfg.to_json()}};
      run.manifest(command);
      return 0;
    }

    if (command == "evolve") {
      ProviderConfig pc;
      if (provider.rfind("replay:", 0) == 0) {
        pc.kind = ProviderKind::Replay;
        pc.replay_path = provider.substr(7);
      } else if (provider == "http") {
        pc.kind = ProviderKind::Http;
        if (!endpoint.empty()) pc.endpoint = endpoint;
        if (!model.empty()) pc.model = model;
        pc.api_key_env = key_env;
      } else {
        throw std::invalid_argument("--provider must be replay:<file> or http");
      }
      pc.temperature = temperature;
      auto llm = make_provider(pc);
      ecfg.criterion.mode = criterion_mode == "additive" ? CriterionMode::Additive : CriterionMode::Multiplicative;
      ecfg.out_dir = run.out;
      if (!warm.empty()) {
        ecfg.warm_start = load_reward(warm, ideal_headway(scenario));
        ecfg.warm_start->metadata.origin = "warm-start";
      }
      tcfg.seed = run.seed;
      Orchestrator orch(*llm, PromptContext::from_scenario(scenario), ecfg);
      run.seeds = {run.seed, run.seed + 1000};
      run.config = {{"provider", pc.to_json()},
                    {"criterion", ecfg.criterion.to_json()},
                    {"iterations", ecfg.iterations},
                    {"refine_cap", ecfg.refine_cap},
                    {"warm_start", warm},
                    {"train", tcfg.to_json()}};
      try {
        const auto records = orch.evolve(make_training_evaluator(scenario, tcfg, run.seed + 1000));
        for (const auto& r : records) std::cout << "iteration " << r.iteration << " metric " << r.metric << "\n";
      } catch (...) {
        run.manifest(command);
        throw;
      }
      run.artifacts.push_back("summary.json");
      run.manifest(command);
      return 0;
    }

    if (command == "evaluate") {
      const auto seeds = parse_seed_list(seeds_text);
      auto factory = make_controller_factory(controller, scenario, copt);
      const EvalReport rep = evaluate_multi_seed(scenario, factory, seeds, label.empty() ? controller : label,
                                                 run.threads);
      run.save("metrics.csv", rep.to_csv());
      run.save("aggregate.json", rep.aggregate_json().dump(2) + "\n");
      run.save("table.txt", table_header() + rep.table_row());
      for (auto s : seeds) run.seeds.push_back(s);
      run.config = {{"controller", controller}, {"threads", run.threads}};
      run.manifest(command);
      std::cout << table_header() << rep.table_row();
      return rep.failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    json err{{"command", command}, {"message", e.what()}};
    if (const auto* oe = dynamic_cast<const OrchestrationError*>(&e)) err["details"] = oe->details();
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) err["details"] = pe->to_json();
    if (dynamic_cast<const ConfigError*>(&e)) err["kind"] = "ConfigError";
    try {
      write_file(fs::path(run.out) / "error.json", err.dump(2) + "\n");
    } catch (...) {
    }
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace holdlab
