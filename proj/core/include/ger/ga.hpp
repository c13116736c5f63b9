#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ger {

struct GaConfig {
  int population = 60;
  int generations = 300;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
  double mutation_scale = 0.05;  // fraction of each variable's range
  int elitism = 2;
  std::uint64_t seed = 1;
  double tolerance = 1e-12;
  int stall_generations = 50;  // early stop after this many non-improving generations
  // Crossover children are drawn uniformly from the parents' span widened by this fraction.
  double blend_extension = 0.1;
};

/// Throws std::invalid_argument describing the first broken invariant.
void check_ga_config(const GaConfig& cfg);

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct GaResult {
  std::vector<double> best;
  double best_value = 0.0;
  std::vector<double> history;  // best-so-far value after each generation
  long evaluations = 0;
};

class NonFiniteFitness : public std::runtime_error {
 public:
  explicit NonFiniteFitness(std::vector<double> x);
  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<double> point_;
};

using Fitness = std::function<double(std::span<const double>)>;

/// Real-coded GA for bound-constrained minimization: binary tournament
/// selection, blend crossover, Gaussian mutation, elitism. `seeds` are
/// injected into the initial population (clamped to bounds) ahead of the
/// random individuals. Deterministic for a fixed cfg.seed.
GaResult minimize(const Fitness& fitness, std::span<const Bounds> bounds, const GaConfig& cfg,
                  std::span<const std::vector<double>> seeds = {});

}  // namespace ger
