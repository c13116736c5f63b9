#include "ger/ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace ger {

namespace {

std::string describe(const std::vector<double>& x) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite fitness at [";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "]";
  return os.str();
}

struct Individual {
  std::vector<double> genes;
  double value = 0.0;
};

}  // namespace

NonFiniteFitness::NonFiniteFitness(std::vector<double> x)
    : std::runtime_error(describe(x)), point_(std::move(x)) {}

void check_ga_config(const GaConfig& c) {
  auto fail = [](const char* msg) { throw std::invalid_argument(std::string("ga: ") + msg); };
  if (c.population < 2) fail("population must be >= 2");
  if (c.generations < 0) fail("generations must be >= 0");
  if (!(c.crossover_rate >= 0.0 && c.crossover_rate <= 1.0)) fail("crossover_rate must be in [0, 1]");
  if (!(c.mutation_rate >= 0.0 && c.mutation_rate <= 1.0)) fail("mutation_rate must be in [0, 1]");
  if (!(c.mutation_scale >= 0.0)) fail("mutation_scale must be non-negative");
  if (c.elitism < 0 || c.elitism >= c.population) fail("elitism must be in [0, population)");
  if (!(c.tolerance >= 0.0)) fail("tolerance must be non-negative");
  if (c.stall_generations < 1) fail("stall_generations must be >= 1");
  if (!(c.blend_extension >= 0.0)) fail("blend_extension must be non-negative");
}

GaResult minimize(const Fitness& fitness, std::span<const Bounds> bounds, const GaConfig& cfg,
                  std::span<const std::vector<double>> seeds) {
  check_ga_config(cfg);
  const std::size_t n = bounds.size();
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
      throw std::invalid_argument("ga: bounds must be finite with lo <= hi");
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  GaResult result;
  auto clamp_genes = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], bounds[i].lo, bounds[i].hi);
  };
  auto evaluate = [&](Individual& ind) {
    ind.value = fitness(ind.genes);
    ++result.evaluations;
    if (!std::isfinite(ind.value)) throw NonFiniteFitness(ind.genes);
  };
  // Stable ordering by value; ties keep insertion order so injected seeds win.
  auto rank = [](std::vector<Individual>& pop) {
    std::stable_sort(pop.begin(), pop.end(),
                     [](const Individual& a, const Individual& b) { return a.value < b.value; });
  };

  const auto pop_size = static_cast<std::size_t>(cfg.population);
  std::vector<Individual> pop;
  pop.reserve(pop_size);
  for (const auto& s : seeds) {
    if (pop.size() == pop_size) break;
    if (s.size() != n) throw std::invalid_argument("ga: seed vector has wrong dimension");
    Individual ind{s, 0.0};
    clamp_genes(ind.genes);
    pop.push_back(std::move(ind));
  }
  while (pop.size() < pop_size) {
    Individual ind{std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) ind.genes[i] = bounds[i].lo + unit(rng) * (bounds[i].hi - bounds[i].lo);
    pop.push_back(std::move(ind));
  }
  for (auto& ind : pop) evaluate(ind);
  rank(pop);

  Individual champion = pop.front();
  int stalled = 0;
  auto tournament = [&]() -> const Individual& {
    std::uniform_int_distribution<std::size_t> pick(0, pop_size - 1);
    const auto a = pick(rng);
    const auto b = pick(rng);
    return pop[std::min(a, b)];  // population is ranked, lower index is fitter
  };

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<Individual> next;
    next.reserve(pop_size);
    for (int e = 0; e < cfg.elitism; ++e) next.push_back(pop[static_cast<std::size_t>(e)]);

    while (next.size() < pop_size) {
      const auto& p1 = tournament();
      const auto& p2 = tournament();
      Individual c1{p1.genes, 0.0};
      Individual c2{p2.genes, 0.0};
      if (unit(rng) < cfg.crossover_rate) {
        for (std::size_t i = 0; i < n; ++i) {
          const double lo = std::min(p1.genes[i], p2.genes[i]);
          const double hi = std::max(p1.genes[i], p2.genes[i]);
          const double ext = cfg.blend_extension * (hi - lo);
          const double a = lo - ext;
          const double w = (hi - lo) + 2.0 * ext;
          c1.genes[i] = a + unit(rng) * w;
          c2.genes[i] = a + unit(rng) * w;
        }
      }
      for (auto* c : {&c1, &c2}) {
        for (std::size_t i = 0; i < n; ++i) {
          if (unit(rng) < cfg.mutation_rate) {
            c->genes[i] += normal(rng) * cfg.mutation_scale * (bounds[i].hi - bounds[i].lo);
          }
        }
        clamp_genes(c->genes);
      }
      next.push_back(std::move(c1));
      if (next.size() < pop_size) next.push_back(std::move(c2));
    }
    for (std::size_t i = static_cast<std::size_t>(cfg.elitism); i < next.size(); ++i) evaluate(next[i]);
    pop = std::move(next);
    rank(pop);

    const double previous = champion.value;
    if (pop.front().value < champion.value) champion = pop.front();
    result.history.push_back(champion.value);
    if (previous - champion.value > cfg.tolerance) {
      stalled = 0;
    } else if (++stalled >= cfg.stall_generations) {
      break;
    }
  }

  result.best = std::move(champion.genes);
  result.best_value = champion.value;
  return result;
}

}  // namespace ger
