#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "holdlab/evaluation.hpp"
#include "holdlab/scenario.hpp"

namespace holdlab {

struct ControllerOptions {
  std::string checkpoint;             // rl
  int train_episodes = 70;            // reward-preset:<name>
  int train_epochs = 200;
  std::uint64_t train_seed = 1000;
  int pso_swarm = 40;
  int pso_iterations = 60;
  int pso_scenarios = 5;
  int pso_window = 2000;
  int threads = 1;
};

/// none | feedback | model | pso-robust | pso-stochastic | rl |
/// reward-preset:<name>. Anything expensive (loading, training) happens
/// once here, not per seed.
ControllerFactory make_controller_factory(const std::string& spec, const ScenarioConfig& scenario,
                                          const ControllerOptions& options);

/// Exit status: 0 ok, 1 run failure (error.json written), 2 usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace holdlab
