#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

namespace holdlab {

struct PsoParams {
  int swarm = 40;
  int iterations = 60;
  double w = 0.7;
  double c1 = 1.5;
  double c2 = 1.5;
};

struct PsoResult {
  std::vector<double> best;
  double best_fitness = std::numeric_limits<double>::infinity();
  std::vector<double> initial_fitness;  // per particle
  std::vector<double> history;          // global best after each iteration
};

/// Box-constrained global-best PSO (minimisation). `batch_fitness` maps a
/// list of positions to their fitness values, so callers may evaluate a
/// whole swarm in parallel. `seeds` fill the first particles.
template <typename BatchFitness>
PsoResult pso_minimize(std::size_t dim, double lo, double hi, BatchFitness&& batch_fitness, const PsoParams& p,
                       std::mt19937_64& rng, const std::vector<std::vector<double>>& seeds = {}) {
  using Position = std::vector<double>;
  const std::size_t n = static_cast<std::size_t>(std::max(1, p.swarm));
  const double span = hi - lo;
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<Position> x(n, Position(dim)), v(n, Position(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      x[i][d] = i < seeds.size() ? std::clamp(seeds[i][d], lo, hi) : lo + span * u01(rng);
      v[i][d] = 0.1 * span * (2.0 * u01(rng) - 1.0);
    }
  }

  PsoResult r;
  std::vector<double> fx = batch_fitness(x);
  r.initial_fitness = fx;
  std::vector<Position> pbest = x;
  std::vector<double> pbest_f = fx;
  std::size_t g = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (fx[i] < fx[g]) g = i;
  r.best = x[g];
  r.best_fitness = fx[g];

  for (int it = 0; it < p.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = u01(rng);
        const double r2 = u01(rng);
        double vel = p.w * v[i][d] + p.c1 * r1 * (pbest[i][d] - x[i][d]) + p.c2 * r2 * (r.best[d] - x[i][d]);
        vel = std::clamp(vel, -span, span);
        v[i][d] = vel;
        x[i][d] = std::clamp(x[i][d] + vel, lo, hi);
      }
    }
    fx = batch_fitness(x);
    for (std::size_t i = 0; i < n; ++i) {
      if (fx[i] < pbest_f[i]) {
        pbest_f[i] = fx[i];
        pbest[i] = x[i];
      }
      if (fx[i] < r.best_fitness) {
        r.best_fitness = fx[i];
        r.best = x[i];
      }
    }
    r.history.push_back(r.best_fitness);
  }
  return r;
}

}  // namespace holdlab
