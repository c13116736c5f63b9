#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the optimizer, the decoder or the port split.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ger/network.hpp"

namespace ger::oracle {

// Comfort-band penalty written out branch by branch.
inline double band_penalty(double p, double ref, double alpha) {
  if (ref > 0.0) {
    if (p > (1.0 + alpha) * ref) return p - (1.0 + alpha) * ref;
    if (p < (1.0 - alpha) * ref) return p - (1.0 - alpha) * ref;
    return 0.0;
  }
  if (ref < 0.0) {
    if (p < (1.0 + alpha) * ref) return p - (1.0 + alpha) * ref;
    if (p > (1.0 - alpha) * ref) return p - (1.0 - alpha) * ref;
    return 0.0;
  }
  return 0.0;
}

inline double next_energy(double e, double p, double dt, const BufferSpec& b) {
  return p > 0.0 ? e - dt * p / b.eta_dis : e - dt * p * b.eta_ch;
}

struct Instance {
  GerNode node;
  NodeProfile profile;
  double e_init = 0.0;
  double dt = 0.25;
};

// Master objective of a plan given only port powers; the buffer takes the
// balance. Returns +inf when the buffer would leave its ratings or bounds.
inline double master_cost(const Instance& in, const std::vector<std::vector<double>>& ports) {
  const auto& b = in.node.buffer;
  double e = in.e_init;
  double cost = 0.0;
  for (std::size_t k = 0; k < ports.size(); ++k) {
    double u = 0.0;
    u += in.profile.dpv_kw[k] + in.profile.dwt_kw[k] - in.profile.dload_kw[k] + in.profile.pm_kw[k];
    double port_sum = 0.0;
    for (std::size_t i = 0; i < ports[k].size(); ++i) {
      const double p = ports[k][i];
      const double ref = in.profile.ref_kw[k][i];
      u -= ref;
      if (std::abs(p) > in.node.ports[i].p_rate_kw) return std::numeric_limits<double>::infinity();
      const double j = band_penalty(p, ref, in.node.ports[i].alpha);
      cost += j * j / in.node.ports[i].alpha;
      port_sum += p;
    }
    const double p_b = -u - port_sum;
    if (std::abs(p_b) > b.p_rate_kw) return std::numeric_limits<double>::infinity();
    e = next_energy(e, p_b, in.dt, b);
    if (e < b.e_min_kwh || e > b.e_max_kwh) return std::numeric_limits<double>::infinity();
  }
  return cost;
}

// Exhaustive search over 9 levels per port power per step, then the same
// 9-level grid zoomed around the incumbent a few times.
inline double grid_search(const Instance& in, int zooms = 4) {
  const std::size_t steps = in.profile.steps();
  const std::size_t ports = in.node.ports.size();
  const std::size_t vars = steps * ports;
  std::vector<double> lo(vars), hi(vars), best(vars, 0.0);
  for (std::size_t v = 0; v < vars; ++v) {
    const double r = in.node.ports[v % ports].p_rate_kw;
    lo[v] = -r;
    hi[v] = r;
  }
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> plan(steps, std::vector<double>(ports));
  std::vector<int> level(vars);
  for (int z = 0; z <= zooms; ++z) {
    std::fill(level.begin(), level.end(), 0);
    while (true) {
      for (std::size_t v = 0; v < vars; ++v) plan[v / ports][v % ports] = lo[v] + (hi[v] - lo[v]) * level[v] / 8.0;
      const double c = master_cost(in, plan);
      if (c < best_cost) {
        best_cost = c;
        for (std::size_t v = 0; v < vars; ++v) best[v] = plan[v / ports][v % ports];
      }
      std::size_t v = 0;
      while (v < vars && ++level[v] == 9) level[v++] = 0;
      if (v == vars) break;
    }
    if (!std::isfinite(best_cost)) break;
    for (std::size_t v = 0; v < vars; ++v) {
      const double half = (hi[v] - lo[v]) / 8.0;
      const double r = in.node.ports[v % ports].p_rate_kw;
      lo[v] = std::max(-r, best[v] - half);
      hi[v] = std::min(r, best[v] + half);
    }
  }
  return best_cost;
}

// T = 3, two master ports, buffer near a bound so the variation forces a violation.
inline Instance random_instance(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Instance in;
  const double a2 = 0.05 + 0.25 * u01(rng);
  const double a3 = 0.05 + 0.25 * u01(rng);
  const bool low = u01(rng) < 0.5;
  in.e_init = low ? 10.5 + 2.0 * u01(rng) : 37.5 + 2.0 * u01(rng);
  in.node = make_node("X", Role::master, {{"p2", 160.0, a2, 0.0}, {"p3", 160.0, a3, 0.0}},
                      {10.0, 40.0, 80.0, 0.9, 0.9, in.e_init});
  in.profile.ref_kw.resize(3);
  for (int k = 0; k < 3; ++k) {
    in.profile.ref_kw[k] = {20.0 + 60.0 * u01(rng), 20.0 + 60.0 * u01(rng)};
    const double v = (20.0 + 40.0 * u01(rng)) * (low ? -1.0 : 1.0);
    in.profile.dpv_kw.push_back(v > 0.0 ? v : 0.0);
    in.profile.dwt_kw.push_back(0.0);
    in.profile.dload_kw.push_back(v < 0.0 ? -v : 0.0);
    in.profile.pm_kw.push_back(0.0);
  }
  return in;
}

}  // namespace ger::oracle
