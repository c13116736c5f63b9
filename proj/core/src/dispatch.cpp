#include "ger/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ger {

const char* to_string(BoundSide side) {
  switch (side) {
    case BoundSide::min: return "min";
    case BoundSide::max: return "max";
    default: return "none";
  }
}

double penalty_j(double p, double ref, double alpha) {
  const double upper = (1.0 + alpha) * ref;
  const double lower = (1.0 - alpha) * ref;
  if (ref > 0.0 && p > upper) return p - upper;
  if (ref > 0.0 && p < lower) return p - lower;
  if (ref < 0.0 && p > lower) return p - lower;
  if (ref < 0.0 && p < upper) return p - upper;
  return 0.0;
}

BufferStep buffer_step(double e_prev, double p_b, double dt_h, const BufferSpec& spec) {
  const double e = p_b > 0.0 ? e_prev - dt_h * p_b / spec.eta_dis : e_prev - dt_h * p_b * spec.eta_ch;
  return {e, e >= spec.e_min_kwh && e <= spec.e_max_kwh};
}

double objective(const HorizonPlan& plan, const GerNode& node, std::span<const double> p_u) {
  const std::size_t steps = plan.steps();
  if (p_u.size() != steps || plan.penalty.size() != steps || plan.port_power.size() != steps)
    throw std::invalid_argument("objective: series lengths differ from the horizon");
  std::vector<double> weights(node.ports.size(), 0.0);
  if (node.role == Role::master) {
    for (std::size_t i = 0; i < node.ports.size(); ++i) {
      if (!(node.ports[i].alpha > 0.0))
        throw std::invalid_argument("objective: master port " + node.ports[i].id +
                                    " has alpha = 0, weight undefined");
      weights[i] = 1.0 / node.ports[i].alpha;
    }
  }
  const double gamma = node.role == Role::master ? 0.0 : 1.0;
  double comfort = 0.0;
  double balance = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    double port_sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      comfort += weights[i] * plan.penalty[k][i] * plan.penalty[k][i];
      port_sum += plan.port_power[k][i];
    }
    const double r = port_sum + plan.buffer_power[k] + p_u[k];
    balance += r * r;
  }
  return comfort + gamma * balance;
}

namespace {

// Energy drawn from the buffer per hour for a terminal power p.
double drawn(double p, const BufferSpec& s) { return p > 0.0 ? p / s.eta_dis : p * s.eta_ch; }
double power_for_draw(double y, const BufferSpec& s) { return y > 0.0 ? y * s.eta_dis : y / s.eta_ch; }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

std::pair<double, double> comfort_band(double ref, double alpha, double rating) {
  if (ref == 0.0) return {-rating, rating};
  const double a = (1.0 - alpha) * ref;
  const double b = (1.0 + alpha) * ref;
  return {std::min(a, b), std::max(a, b)};
}

// Moves p towards `limit` until the step keeps the energy inside the hard bounds.
double nudge_into_bounds(double e_prev, double p, double limit, double dt, const BufferSpec& s) {
  double step = std::max(std::abs(p), 1.0) * std::numeric_limits<double>::epsilon();
  for (int i = 0; i < 200; ++i) {
    if (buffer_step(e_prev, p, dt, s).in_bounds) return p;
    p = limit < p ? std::max(limit, p - step) : std::min(limit, p + step);
    step *= 2.0;
  }
  return p;
}

}  // namespace

std::pair<double, double> buffer_power_limits(double e, const BufferSpec& s, double dt) {
  double hi = std::min(s.p_rate_kw, power_for_draw((e - s.e_min_kwh) / dt, s));
  double lo = std::max(-s.p_rate_kw, power_for_draw((e - s.e_max_kwh) / dt, s));
  hi = std::max(hi, lo);
  hi = nudge_into_bounds(e, hi, std::min(lo, 0.0), dt, s);
  lo = nudge_into_bounds(e, lo, std::max(hi, 0.0), dt, s);
  return {lo, hi};
}

namespace {

class Decoder {
 public:
  Decoder(const GerNode& node, const NodeProfile& profile, double e_init, const DispatchOptions& opt)
      : node_(node), profile_(profile), opt_(opt), e_init_(e_init) {
    const std::size_t steps = profile.steps();
    const auto& b = node.buffer;
    double port_total = 0.0;
    for (const auto& p : node.ports) port_total += p.p_rate_kw;

    u_.resize(steps);
    power_.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      u_[k] = u_layer_power(profile, k, opt.convention);
      if (node.role == Role::master) {
        power_[k] = {std::max(-b.p_rate_kw, -u_[k] - port_total),
                     std::min(b.p_rate_kw, -u_[k] + port_total)};
        if (power_[k].lo > power_[k].hi) {
          fail(k, "ports and buffer ratings cannot balance the U-layer power");
        }
      } else {
        for (std::size_t i = 0; i < node.ports.size(); ++i) {
          if (std::abs(profile.ref_kw[k][i]) > node.ports[i].p_rate_kw)
            fail(k, "slave port " + node.ports[i].id + " reference exceeds its rating");
        }
        power_[k] = {-b.p_rate_kw, b.p_rate_kw};
      }
    }

    reach_.resize(steps);
    if (steps == 0) return;
    reach_[steps - 1] = {b.e_min_kwh, b.e_max_kwh};
    for (std::size_t k = steps - 1; k > 0; --k) {
      reach_[k - 1] = {std::max(b.e_min_kwh, reach_[k].lo + opt.dt_h * drawn(power_[k].lo, b)),
                       std::min(b.e_max_kwh, reach_[k].hi + opt.dt_h * drawn(power_[k].hi, b))};
      if (reach_[k - 1].lo > reach_[k - 1].hi)
        fail(k - 1, "no buffer trajectory keeps the energy within bounds");
    }
    const double entry_lo = reach_[0].lo + opt.dt_h * drawn(power_[0].lo, b);
    const double entry_hi = reach_[0].hi + opt.dt_h * drawn(power_[0].hi, b);
    const double tol = 1e-9 * std::max(1.0, b.e_max_kwh);
    if (e_init < entry_lo - tol || e_init > entry_hi + tol) {
      std::ostringstream os;
      os << "initial energy " << e_init << " kWh outside the feasible range [" << entry_lo << ", "
         << entry_hi << "]";
      throw InfeasibleDispatch("node " + node_.id + ": " + os.str());
    }
  }

  std::size_t steps() const { return u_.size(); }
  const std::vector<double>& u() const { return u_; }
  const Interval& power_limits(std::size_t k) const { return power_[k]; }

  /// Genes that decode to the baseline plan (ports at their references) as
  /// far as the reachable intervals allow.
  std::vector<double> baseline() const {
    std::vector<double> x(steps());
    double e = e_init_;
    for (std::size_t k = 0; k < steps(); ++k) {
      const double ref_sum =
          std::accumulate(profile_.ref_kw[k].begin(), profile_.ref_kw[k].end(), 0.0);
      const Interval r = range(k, e);
      const double p = std::clamp(-(ref_sum + u_[k]), r.lo, r.hi);
      x[k] = r.hi > r.lo ? (p - r.lo) / (r.hi - r.lo) : 0.0;
      e = buffer_step(e, settle(k, e, position(r, x[k])), opt_.dt_h, node_.buffer).energy_kwh;
    }
    return x;
  }

  /// x[k] in [0, 1] places the buffer power of step k inside the interval that
  /// keeps the rest of the horizon feasible, so every gene always matters.
  void decode(std::span<const double> x, std::vector<std::vector<double>>& ports,
              std::vector<double>& buffer) const {
    ports.resize(steps());
    buffer.resize(steps());
    double e = e_init_;
    for (std::size_t k = 0; k < steps(); ++k) {
      const double p = settle(k, e, position(range(k, e), x[k]));
      buffer[k] = p;
      e = buffer_step(e, p, opt_.dt_h, node_.buffer).energy_kwh;
      if (node_.role == Role::master) {
        ports[k] = split_port_power(-u_[k] - p, profile_.ref_kw[k], node_.ports);
      } else {
        ports[k] = profile_.ref_kw[k];
      }
    }
  }

 private:
  Interval range(std::size_t k, double e) const {
    const auto& b = node_.buffer;
    const double dt = opt_.dt_h;
    Interval r{std::max(power_[k].lo, power_for_draw((e - reach_[k].hi) / dt, b)),
               std::min(power_[k].hi, power_for_draw((e - reach_[k].lo) / dt, b))};
    // Only empty through rounding; fall back to the hard power limits.
    if (r.lo > r.hi) r = power_[k];
    return r;
  }

  static double position(const Interval& r, double y) {
    if (y <= 0.0) return r.lo;
    if (y >= 1.0) return r.hi;
    return r.lo + y * (r.hi - r.lo);
  }

  // Rounding can leave the step a hair outside the energy bounds.
  double settle(std::size_t k, double e, double p) const {
    const auto& b = node_.buffer;
    const auto step = buffer_step(e, p, opt_.dt_h, b);
    if (step.energy_kwh < b.e_min_kwh) return nudge_into_bounds(e, p, power_[k].lo, opt_.dt_h, b);
    if (step.energy_kwh > b.e_max_kwh) return nudge_into_bounds(e, p, power_[k].hi, opt_.dt_h, b);
    return p;
  }

  [[noreturn]] void fail(std::size_t k, const std::string& why) const {
    throw InfeasibleDispatch("node " + node_.id + ", step " + std::to_string(k) + ": " + why);
  }

  const GerNode& node_;
  const NodeProfile& profile_;
  DispatchOptions opt_;
  double e_init_;
  std::vector<double> u_;
  std::vector<Interval> power_;
  std::vector<Interval> reach_;  // energies at the end of step k from which the rest stays feasible
};

}  // namespace

std::vector<double> split_port_power(double total, std::span<const double> refs,
                                     std::span<const RouterPort> ports) {
  const std::size_t n = ports.size();
  if (refs.size() != n) throw std::invalid_argument("split_port_power: refs/ports size mismatch");
  std::vector<double> band_lo(n), band_hi(n), clo(n), chi(n), rating(n), w(n);
  double rating_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rating[i] = ports[i].p_rate_kw;
    rating_sum += rating[i];
    w[i] = ports[i].weight;
    if (!(w[i] > 0.0)) throw std::invalid_argument("split_port_power: weights must be positive");
    std::tie(band_lo[i], band_hi[i]) = comfort_band(refs[i], ports[i].alpha, rating[i]);
    clo[i] = std::clamp(band_lo[i], -rating[i], rating[i]);
    chi[i] = std::clamp(band_hi[i], -rating[i], rating[i]);
  }
  std::vector<double> p(n);
  if (total >= rating_sum) {
    for (std::size_t i = 0; i < n; ++i) p[i] = rating[i];
    return p;
  }
  if (total <= -rating_sum) {
    for (std::size_t i = 0; i < n; ++i) p[i] = -rating[i];
    return p;
  }

  // Puts the remaining imbalance on ports that still have room.
  auto settle = [&](double residual, std::span<const double> lo, std::span<const double> hi) {
    for (std::size_t i = 0; i < n && residual != 0.0; ++i) {
      const double moved = std::clamp(p[i] + residual, lo[i], hi[i]) - p[i];
      p[i] += moved;
      residual -= moved;
    }
  };
  std::vector<double> box_lo(n), box_hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    box_lo[i] = -rating[i];
    box_hi[i] = rating[i];
  }

  const double zero_lo = std::accumulate(clo.begin(), clo.end(), 0.0);
  const double zero_hi = std::accumulate(chi.begin(), chi.end(), 0.0);
  if (total >= zero_lo && total <= zero_hi) {
    // Zero penalty is attainable: start at the references and spread the gap by slack.
    for (std::size_t i = 0; i < n; ++i) p[i] = std::clamp(refs[i], clo[i], chi[i]);
    const double gap = total - std::accumulate(p.begin(), p.end(), 0.0);
    double slack_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) slack_sum += gap > 0.0 ? chi[i] - p[i] : p[i] - clo[i];
    if (slack_sum > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double slack = gap > 0.0 ? chi[i] - p[i] : p[i] - clo[i];
        p[i] = std::clamp(p[i] + gap * slack / slack_sum, clo[i], chi[i]);
      }
    }
    settle(total - std::accumulate(p.begin(), p.end(), 0.0), clo, chi);
    return p;
  }

  // Equalize marginal penalties 2*w*(p - edge) = lambda across unsaturated ports.
  const bool upward = total > zero_hi;
  auto at = [&](double lambda) {
    for (std::size_t i = 0; i < n; ++i) {
      const double edge = upward ? band_hi[i] : band_lo[i];
      p[i] = std::clamp(edge + lambda / (2.0 * w[i]), -rating[i], rating[i]);
    }
    return std::accumulate(p.begin(), p.end(), 0.0);
  };
  double inner = 0.0;
  double outer = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double edge = upward ? band_hi[i] : band_lo[i];
    const double needed = upward ? 2.0 * w[i] * (rating[i] - edge) : 2.0 * w[i] * (-rating[i] - edge);
    outer = upward ? std::max(outer, needed) : std::min(outer, needed);
  }
  outer += upward ? 1.0 : -1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (inner + outer);
    if (mid == inner || mid == outer) break;
    const double sum = at(mid);
    if ((upward && sum < total) || (!upward && sum > total)) {
      inner = mid;
    } else {
      outer = mid;
    }
  }
  at(outer);
  settle(total - std::accumulate(p.begin(), p.end(), 0.0), box_lo, box_hi);
  return p;
}

HorizonPlan evaluate_plan(const GerNode& node, const NodeProfile& profile, double e_init_kwh,
                          std::vector<std::vector<double>> port_power,
                          std::vector<double> buffer_power, const DispatchOptions& options) {
  const std::size_t steps = profile.steps();
  HorizonPlan plan;
  plan.e_init_kwh = e_init_kwh;
  plan.port_power = std::move(port_power);
  plan.buffer_power = std::move(buffer_power);
  plan.ref_power = profile.ref_kw;
  plan.u_power.resize(steps);
  plan.buffer_energy.resize(steps);
  plan.penalty.assign(steps, std::vector<double>(node.ports.size(), 0.0));
  double e = e_init_kwh;
  for (std::size_t k = 0; k < steps; ++k) {
    plan.u_power[k] = u_layer_power(profile, k, options.convention);
    e = buffer_step(e, plan.buffer_power[k], options.dt_h, node.buffer).energy_kwh;
    plan.buffer_energy[k] = e;
    for (std::size_t i = 0; i < node.ports.size(); ++i) {
      plan.penalty[k][i] = penalty_j(plan.port_power[k][i], profile.ref_kw[k][i], node.ports[i].alpha);
    }
  }
  plan.objective = objective(plan, node, plan.u_power);
  return plan;
}

HorizonPlan optimize_horizon(const GerNode& node, const NodeProfile& profile, double e_init_kwh,
                             const DispatchOptions& options) {
  if (auto v = check_profile(node, profile, static_cast<int>(profile.steps())); !v.empty())
    throw std::invalid_argument(format_violations(v));
  if (profile.steps() == 0) throw std::invalid_argument("optimize_horizon: empty horizon");
  if (e_init_kwh < node.buffer.e_min_kwh || e_init_kwh > node.buffer.e_max_kwh)
    throw InfeasibleDispatch("node " + node.id + ": initial energy outside [e_min, e_max]");

  const Decoder decoder(node, profile, e_init_kwh, options);
  std::vector<Bounds> bounds(decoder.steps(), Bounds{0.0, 1.0});

  std::vector<std::vector<double>> ports;
  std::vector<double> buffer;
  auto fitness = [&](std::span<const double> x) {
    decoder.decode(x, ports, buffer);
    return evaluate_plan(node, profile, e_init_kwh, ports, buffer, options).objective;
  };
  const std::vector<std::vector<double>> seeds{decoder.baseline()};
  const auto result = minimize(fitness, bounds, options.ga, seeds);

  decoder.decode(result.best, ports, buffer);
  return evaluate_plan(node, profile, e_init_kwh, std::move(ports), std::move(buffer), options);
}

std::string check_plan(const HorizonPlan& plan, const GerNode& node, double dt_h) {
  const auto& b = node.buffer;
  const std::size_t steps = plan.steps();
  if (plan.buffer_energy.size() != steps || plan.port_power.size() != steps ||
      plan.penalty.size() != steps || plan.u_power.size() != steps)
    return "series lengths differ";
  double e = plan.e_init_kwh;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::string at = "step " + std::to_string(k) + ": ";
    e = buffer_step(e, plan.buffer_power[k], dt_h, b).energy_kwh;
    if (e != plan.buffer_energy[k]) return at + "buffer energy does not follow the dynamics";
    if (e < b.e_min_kwh || e > b.e_max_kwh) return at + "buffer energy out of bounds";
    if (std::abs(plan.buffer_power[k]) > b.p_rate_kw) return at + "buffer power exceeds rating";
    double port_sum = 0.0;
    for (std::size_t i = 0; i < node.ports.size(); ++i) {
      if (std::abs(plan.port_power[k][i]) > node.ports[i].p_rate_kw)
        return at + "port " + node.ports[i].id + " exceeds rating";
      port_sum += plan.port_power[k][i];
    }
    if (node.role == Role::master) {
      const double residual = port_sum + plan.buffer_power[k] + plan.u_power[k];
      if (std::abs(residual) > 1e-6 * std::max(1.0, std::abs(plan.u_power[k])))
        return at + "power balance violated";
    }
  }
  return {};
}

ShiftResult compute_shift(const HorizonPlan& plan, const BufferSpec& spec, double dt_h,
                          const ShiftOptions& options) {
  ShiftResult out;
  const auto& e = plan.buffer_energy;
  out.me_ref = e;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const bool at_min = std::abs(e[k] - spec.e_min_kwh) <= kBoundTouchKwh;
    const bool at_max = std::abs(e[k] - spec.e_max_kwh) <= kBoundTouchKwh;
    if (at_min || at_max) {
      out.t_a = static_cast<int>(k);
      out.side = at_min ? BoundSide::min : BoundSide::max;
      break;
    }
  }
  if (!out.t_a) return out;

  const auto ta = static_cast<std::size_t>(*out.t_a);
  std::size_t tb = 0;
  double violation = 0.0;
  for (std::size_t k = 0; k <= ta; ++k) {
    if (out.side == BoundSide::min ? e[k] > e[tb] : e[k] < e[tb]) tb = k;
    for (const double j : plan.penalty[k]) {
      violation += out.side == BoundSide::min ? std::max(j, 0.0) : std::max(-j, 0.0);
    }
  }
  out.t_b = static_cast<int>(tb);
  if (out.side == BoundSide::min) {
    out.de_res = spec.e_max_kwh - e[tb];
    out.de_sh = std::min(dt_h * violation / spec.eta_dis, out.de_res);
  } else {
    out.de_res = spec.e_min_kwh - (options.literal_max_headroom ? e[ta] : e[tb]);
    out.de_sh = std::max(-spec.eta_ch * dt_h * violation, out.de_res);
  }
  for (std::size_t k = 0; k <= ta; ++k) out.me_ref[k] = e[k] + out.de_sh;
  return out;
}

double uc_index(std::span<const double> penalties, std::span<const double> refs) {
  if (penalties.size() != refs.size()) throw std::invalid_argument("uc_index: length mismatch");
  double uc = 0.0;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    if (refs[k] == 0.0) continue;
    const double r = penalties[k] / refs[k];
    uc += r * r;
  }
  return uc;
}

std::vector<double> plan_uc(const HorizonPlan& plan) {
  const std::size_t ports = plan.penalty.empty() ? 0 : plan.penalty.front().size();
  std::vector<double> out(ports, 0.0);
  std::vector<double> j(plan.steps());
  std::vector<double> r(plan.steps());
  for (std::size_t i = 0; i < ports; ++i) {
    for (std::size_t k = 0; k < plan.steps(); ++k) {
      j[k] = plan.penalty[k][i];
      r[k] = plan.ref_power[k][i];
    }
    out[i] = uc_index(j, r);
  }
  return out;
}

NodeProfile slice_profile(const NodeProfile& p, std::size_t from) {
  auto tail = [from](const auto& v) {
    using V = std::decay_t<decltype(v)>;
    return from >= v.size() ? V{} : V(v.begin() + static_cast<std::ptrdiff_t>(from), v.end());
  };
  return NodeProfile{tail(p.ref_kw), tail(p.dpv_kw), tail(p.dwt_kw), tail(p.dload_kw), tail(p.pm_kw)};
}

}  // namespace ger
