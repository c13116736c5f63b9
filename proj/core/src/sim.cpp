#include "ger/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ger {

std::vector<Violation> check_config(const SimulationConfig& cfg) {
  std::vector<Violation> out;
  try {
    validate_network(cfg.network);
  } catch (const ValidationError& e) {
    out = e.violations();
  }
  auto add = [&](std::vector<Violation> v) { out.insert(out.end(), v.begin(), v.end()); };
  add(check_time_grid(cfg.grid));
  if (cfg.profiles.size() != cfg.network.nodes.size()) {
    out.push_back({"", "profiles", "one profile per node is required"});
  } else {
    for (std::size_t i = 0; i < cfg.profiles.size(); ++i)
      add(check_profile(cfg.network.nodes[i], cfg.profiles[i], cfg.grid.horizon));
  }
  if (cfg.scenario) add(check_stochastic(*cfg.scenario));
  try {
    check_ga_config(cfg.ga);
  } catch (const std::invalid_argument& e) {
    out.push_back({"", "ga", e.what()});
  }
  if (!(cfg.tracking.e_bd_kwh > 0.0)) out.push_back({"", "tracking.e_bd_kwh", "must be positive"});
  if (!(cfg.tracking.p_cn_kw > 0.0)) out.push_back({"", "tracking.p_cn_kw", "must be positive"});
  return out;
}

Matrix apply_port_clamp(const Matrix& c, const std::vector<PortState>& ports) {
  const std::size_t n = c.size();
  std::vector<double> factor(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double out = 0.0;
    double in = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out += c[i][j];
      in += c[j][i];
    }
    // Sending lowers the exchange-port power, receiving raises it.
    const double room_out = std::max(0.0, ports[i].scheduled_kw + ports[i].rating_kw);
    const double room_in = std::max(0.0, ports[i].rating_kw - ports[i].scheduled_kw);
    if (out > room_out) factor[i] = std::min(factor[i], room_out / out);
    if (in > room_in) factor[i] = std::min(factor[i], room_in / in);
  }
  Matrix clamped = c;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t d = 0; d < n; ++d) {
      if (c[s][d] != 0.0) clamped[s][d] = c[s][d] * std::min(factor[s], factor[d]);
    }
  }
  return clamped;
}

namespace {

struct NodeStepInput {
  double me_ref_end = 0.0;
  double buffer_plan_kw = 0.0;
  std::optional<int> t_a;
  int t = 0;
  int horizon = 1;
  std::vector<double> port_scheduled;
  std::vector<double> port_ref;
};

// One tracking step for every node: local absorption, fuzzy controller,
// compensation exchange, then buffer advance.
class TrackingLoop {
 public:
  TrackingLoop(const Network& network, double dt, const TrackingConfig& tracking,
               const SimulationOptions& options, std::vector<VariationSeries> variations)
      : network_(network),
        dt_(dt),
        options_(options),
        tracker_(tracking.e_bd_kwh, tracking.p_cn_kw),
        variations_(std::move(variations)) {}

  void step(std::size_t t, const std::vector<NodeStepInput>& inputs, std::vector<double>& e_b,
            SimulationTrace& trace) const {
    const std::size_t n = network_.nodes.size();
    std::vector<NodeStepRecord> records(n);
    std::vector<double> p_abs(n);
    std::vector<std::pair<double, double>> limits(n);
    std::vector<double> p_c(n);

    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = network_.nodes[i];
      const auto& in = inputs[i];
      auto& rec = records[i];
      rec.variation_kw = variations_.empty() ? 0.0 : variations_[i].net(t);
      rec.buffer_plan_kw = in.buffer_plan_kw;
      rec.me_ref_kwh = in.me_ref_end;
      rec.port_ref_kw = in.port_ref;
      rec.port_power_kw = in.port_scheduled;

      const double wanted = in.buffer_plan_kw - rec.variation_kw;
      limits[i] = buffer_power_limits(e_b[i], node.buffer, dt_);
      p_abs[i] = std::clamp(wanted, limits[i].first, limits[i].second);
      rec.unserved_kw = place_on_ports(node, wanted - p_abs[i], rec.port_power_kw);

      const double e_pred = buffer_step(e_b[i], p_abs[i], dt_, node.buffer).energy_kwh;
      const auto inputs_fz = compute_inputs({in.me_ref_end, e_pred, in.t, in.t_a, in.horizon});
      rec.de_ref_kwh = inputs_fz.de_ref_kwh;
      rec.m_a = inputs_fz.m_a;
      rec.np_c_kw = tracker_.infer(rec.de_ref_kwh, rec.m_a);
      const double sat = saturate(rec.np_c_kw, p_abs[i], node.buffer.p_rate_kw);
      p_c[i] = std::clamp(sat, limits[i].first - p_abs[i], limits[i].second - p_abs[i]);
      rec.p_c_kw = p_c[i];
    }

    std::vector<double> mp_c(n, 0.0);
    std::vector<StepTransfer> moved;
    if (options_.fcs_enabled) {
      auto exchange = run_exchange(p_c, network_.topology);
      std::vector<PortState> ports(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& node = network_.nodes[i];
        const auto x = node.exchange_port_index();
        ports[i] = {records[i].port_power_kw[x], node.ports[x].p_rate_kw};
      }
      const Matrix transfers = apply_port_clamp(exchange.transfers, ports);
      mp_c = realized(transfers);
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t d = 0; d < n; ++d) {
          if (transfers[s][d] != 0.0) moved.push_back({s, d, transfers[s][d]});
        }
      }
      if (options_.record_rounds) trace.rounds.push_back(std::move(exchange.log));
    } else if (options_.record_rounds) {
      trace.rounds.emplace_back();
    }

    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = network_.nodes[i];
      auto& rec = records[i];
      rec.mp_c_kw = mp_c[i];
      rec.port_power_kw[node.exchange_port_index()] -= mp_c[i];
      rec.buffer_power_kw = std::clamp(p_abs[i] + mp_c[i], limits[i].first, limits[i].second);
      e_b[i] = buffer_step(e_b[i], rec.buffer_power_kw, dt_, node.buffer).energy_kwh;
      rec.e_b_kwh = e_b[i];
      rec.deviation_kwh = rec.me_ref_kwh - rec.e_b_kwh;
      rec.port_penalty_kw.resize(node.ports.size());
      for (std::size_t p = 0; p < node.ports.size(); ++p) {
        rec.port_penalty_kw[p] = penalty_j(rec.port_power_kw[p], rec.port_ref_kw[p], node.ports[p].alpha);
      }
    }
    trace.steps.push_back(std::move(records));
    trace.transfers.push_back(std::move(moved));
  }

 private:
  // Power the buffer could not take is carried by the ports, exchange port
  // first; the remainder is returned as unserved.
  static double place_on_ports(const GerNode& node, double spill, std::vector<double>& ports) {
    if (spill == 0.0) return 0.0;
    std::vector<std::size_t> order{node.exchange_port_index()};
    for (std::size_t p = 0; p < node.ports.size(); ++p) {
      if (p != order.front()) order.push_back(p);
    }
    for (const auto p : order) {
      const double r = node.ports[p].p_rate_kw;
      const double moved = std::clamp(ports[p] + spill, -r, r) - ports[p];
      ports[p] += moved;
      spill -= moved;
      if (spill == 0.0) break;
    }
    return spill;
  }

  const Network& network_;
  double dt_;
  SimulationOptions options_;
  FuzzyTracker tracker_;
  std::vector<VariationSeries> variations_;
};

std::vector<VariationSeries> draw_variations(const std::optional<StochasticSpec>& spec,
                                             const Network& network, std::size_t steps) {
  if (!spec) return {};
  std::vector<VariationSeries> out;
  for (const auto& node : network.nodes) {
    const auto it = std::find(spec->node_ids.begin(), spec->node_ids.end(), node.id);
    if (it == spec->node_ids.end()) {
      out.push_back(sample_variation(SourceSpec{}, spec->seed, node.id, steps));
    } else {
      out.push_back(sample_variation(spec->sources[static_cast<std::size_t>(it - spec->node_ids.begin())],
                                     spec->seed, node.id, steps));
    }
  }
  return out;
}

std::uint64_t window_seed(std::uint64_t seed, std::size_t window, std::size_t node) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (window + 1)) ^ (0xc2b2ae3d27d4eb4fULL * (node + 1));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SimulationTrace init_trace(const Network& network, double dt, int substeps) {
  SimulationTrace trace;
  trace.dt_track_h = dt;
  trace.substeps = substeps;
  for (const auto& node : network.nodes) {
    trace.node_ids.push_back(node.id);
    std::vector<std::string> ports;
    for (const auto& p : node.ports) ports.push_back(p.id);
    trace.port_ids.push_back(std::move(ports));
    trace.e_start_kwh.push_back(node.buffer.e_init_kwh);
  }
  return trace;
}

}  // namespace

WindowRecord dispatch_window(const SimulationConfig& cfg, std::size_t w, std::size_t i, double e_init) {
  const auto& node = cfg.network.nodes[i];
  const auto& profile = cfg.profiles[i];
  WindowRecord rec;
  DispatchOptions opt{cfg.grid.dt_dispatch_h, cfg.options.convention, cfg.ga};
  opt.ga.seed = window_seed(cfg.ga.seed, w, i);
  const NodeProfile window = slice_profile(profile, w);
  try {
    rec.plan = optimize_horizon(node, window, e_init, opt);
    rec.shift = compute_shift(rec.plan, node.buffer, cfg.grid.dt_dispatch_h, cfg.options.shift);
    if (!cfg.options.shift_enabled) {
      rec.shift.de_sh = 0.0;
      rec.shift.me_ref = rec.plan.buffer_energy;
    }
    rec.uc = plan_uc(rec.plan);
  } catch (const InfeasibleDispatch& e) {
    // Hold: no buffer schedule, ports at their (rating-clamped) references, flat reference.
    rec.feasible = false;
    rec.event = "window " + std::to_string(w) + ": " + e.what();
    std::vector<std::vector<double>> ports{window.ref_kw.front()};
    for (std::size_t p = 0; p < node.ports.size(); ++p)
      ports[0][p] = std::clamp(ports[0][p], -node.ports[p].p_rate_kw, node.ports[p].p_rate_kw);
    NodeProfile first = window;
    for (auto* s : {&first.ref_kw}) s->resize(1);
    for (auto* s : {&first.dpv_kw, &first.dwt_kw, &first.dload_kw, &first.pm_kw}) s->resize(1);
    rec.plan = evaluate_plan(node, first, e_init, ports, {0.0}, opt);
    rec.shift.me_ref = rec.plan.buffer_energy;
    rec.uc = plan_uc(rec.plan);
  }
  return rec;
}

namespace {

SimulationResult simulate_once(const SimulationConfig& cfg) {
  const auto& network = cfg.network;
  const std::size_t n = network.nodes.size();
  const int substeps = cfg.grid.substeps();
  const double dt = cfg.grid.dt_track_h;
  const auto horizon = static_cast<std::size_t>(cfg.grid.horizon);
  const std::size_t total_steps = horizon * static_cast<std::size_t>(substeps);

  SimulationTrace trace = init_trace(network, dt, substeps);
  const TrackingLoop loop(network, dt, cfg.tracking, cfg.options,
                          draw_variations(cfg.scenario, network, total_steps));
  std::vector<double> e_b = trace.e_start_kwh;

  for (std::size_t w = 0; w < horizon; ++w) {
    std::vector<WindowRecord> windows(n);
    for (std::size_t i = 0; i < n; ++i) {
      windows[i] = dispatch_window(cfg, w, i, e_b[i]);
      if (!windows[i].feasible) trace.events.push_back("node " + network.nodes[i].id + ", " + windows[i].event);
    }

    std::vector<double> nominal = e_b;
    for (int j = 0; j < substeps; ++j) {
      std::vector<NodeStepInput> inputs(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = windows[i];
        auto& in = inputs[i];
        in.buffer_plan_kw = rec.plan.buffer_power.front();
        nominal[i] = buffer_step(nominal[i], in.buffer_plan_kw, dt, network.nodes[i].buffer).energy_kwh;
        const double shift_share = rec.shift.de_sh * (j + 1) / substeps;
        in.me_ref_end = rec.shift.de_sh != 0.0 ? nominal[i] + shift_share : nominal[i];
        in.t = j;
        in.horizon = static_cast<int>(rec.plan.steps()) * substeps;
        if (rec.shift.t_a) in.t_a = (*rec.shift.t_a + 1) * substeps;
        in.port_scheduled = rec.plan.port_power.front();
        in.port_ref = rec.plan.ref_power.front();
      }
      loop.step(w * static_cast<std::size_t>(substeps) + static_cast<std::size_t>(j), inputs, e_b, trace);
    }
    trace.windows.push_back(std::move(windows));
  }
  return {std::move(trace), {}};
}

double mean_abs(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

}  // namespace

Metrics compute_metrics(const SimulationTrace& trace, const std::vector<GerNode>& nodes,
                        const SimulationTrace* baseline) {
  Metrics m;
  const std::size_t n = trace.node_ids.size();
  const double dt = trace.dt_track_h;
  constexpr double tol = 1e-9;
  double dev_sum = 0.0;
  std::size_t dev_count = 0;
  double base_sum = 0.0;
  std::size_t base_count = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = nodes[i];
    NodeMetrics nm;
    nm.id = trace.node_ids[i];
    std::vector<double> dev;
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
      const auto& r = trace.steps[t][i];
      dev.push_back(r.deviation_kwh);
      nm.max_abs_deviation_kwh = std::max(nm.max_abs_deviation_kwh, std::abs(r.deviation_kwh));
      if (r.mp_c_kw > 0.0) nm.sent_kwh += r.mp_c_kw * dt;
      if (r.mp_c_kw < 0.0) nm.received_kwh -= r.mp_c_kw * dt;
      nm.unserved_kwh += std::abs(r.unserved_kw) * dt;
      const auto& b = node.buffer;
      if (r.e_b_kwh < b.e_min_kwh || r.e_b_kwh > b.e_max_kwh) ++m.constraint_violations;
      if (std::abs(r.buffer_power_kw) > b.p_rate_kw + tol) ++m.constraint_violations;
      for (std::size_t p = 0; p < node.ports.size(); ++p) {
        if (std::abs(r.port_power_kw[p]) > node.ports[p].p_rate_kw + tol) ++m.constraint_violations;
      }
    }
    nm.mean_abs_deviation_kwh = mean_abs(dev);
    for (const double d : dev) dev_sum += std::abs(d);
    dev_count += dev.size();

    const std::size_t ports = node.ports.size();
    nm.uc.assign(ports, 0.0);
    nm.uc_realized.assign(ports, 0.0);
    for (std::size_t p = 0; p < ports; ++p) {
      std::vector<double> j;
      std::vector<double> ref;
      for (const auto& window : trace.windows) {
        j.push_back(window[i].plan.penalty.front()[p]);
        ref.push_back(window[i].plan.ref_power.front()[p]);
      }
      nm.uc[p] = uc_index(j, ref);
      j.clear();
      ref.clear();
      for (const auto& step : trace.steps) {
        j.push_back(step[i].port_penalty_kw[p]);
        ref.push_back(step[i].port_ref_kw[p]);
      }
      nm.uc_realized[p] = uc_index(j, ref);
    }

    if (baseline) {
      std::vector<double> bdev;
      double bmax = 0.0;
      for (const auto& step : baseline->steps) {
        bdev.push_back(step[i].deviation_kwh);
        bmax = std::max(bmax, std::abs(step[i].deviation_kwh));
      }
      nm.baseline_mean_abs_deviation_kwh = mean_abs(bdev);
      nm.baseline_max_abs_deviation_kwh = bmax;
      for (const double d : bdev) base_sum += std::abs(d);
      base_count += bdev.size();
    }
    m.total_shared_kwh += nm.sent_kwh;
    m.nodes.push_back(std::move(nm));
  }
  m.mean_abs_deviation_kwh = dev_count ? dev_sum / static_cast<double>(dev_count) : 0.0;
  if (baseline) m.baseline_mean_abs_deviation_kwh = base_count ? base_sum / static_cast<double>(base_count) : 0.0;
  for (const auto& window : trace.windows) {
    for (const auto& rec : window) {
      if (!rec.feasible) ++m.infeasible_windows;
    }
  }
  return m;
}

SimulationResult run_simulation(const SimulationConfig& cfg) {
  if (auto v = check_config(cfg); !v.empty()) throw ValidationError(std::move(v));
  auto result = simulate_once(cfg);
  if (cfg.options.compute_baseline) {
    if (cfg.options.fcs_enabled) {
      SimulationConfig base = cfg;
      base.options.fcs_enabled = false;
      base.options.record_rounds = false;
      const auto baseline = simulate_once(base);
      result.metrics = compute_metrics(result.trace, cfg.network.nodes, &baseline.trace);
    } else {
      result.metrics = compute_metrics(result.trace, cfg.network.nodes, &result.trace);
    }
  } else {
    result.metrics = compute_metrics(result.trace, cfg.network.nodes);
  }
  return result;
}

std::vector<Violation> check_reference(const TrackReference& ref, const Network& network) {
  std::vector<Violation> out;
  if (ref.horizon_steps < 1) out.push_back({"", "horizon_steps", "must be >= 1"});
  if (ref.nodes.size() != network.nodes.size()) {
    out.push_back({"", "reference", "one reference per network node is required"});
    return out;
  }
  const std::size_t steps = ref.steps();
  for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
    const auto& r = ref.nodes[i];
    const auto& node = network.nodes[i];
    if (r.id != node.id) out.push_back({r.id, "id", "reference order must match the network nodes"});
    if (r.me_ref_kwh.size() != steps) out.push_back({r.id, "me_ref_kwh", "length differs from other nodes"});
    if (r.buffer_plan_kw.size() != r.me_ref_kwh.size())
      out.push_back({r.id, "buffer_plan_kw", "length differs from me_ref_kwh"});
    if (r.port_power_kw.size() != node.ports.size())
      out.push_back({r.id, "port_power_kw", "one scheduled power per port is required"});
    if (r.e_init_kwh < node.buffer.e_min_kwh || r.e_init_kwh > node.buffer.e_max_kwh)
      out.push_back({r.id, "e_init_kwh", "e_init out of bounds"});
    for (const double p : r.buffer_plan_kw) {
      if (!(std::abs(p) <= node.buffer.p_rate_kw)) {
        out.push_back({r.id, "buffer_plan_kw", "planned power exceeds the buffer rating"});
        break;
      }
    }
  }
  return out;
}

SimulationResult run_tracking(const TrackingRun& run) {
  const auto network = validate_network(run.network);
  if (auto v = check_reference(run.reference, network); !v.empty()) throw ValidationError(std::move(v));
  if (!(run.dt_track_h > 0.0)) throw std::invalid_argument("run_tracking: dt_track_h must be positive");

  auto simulate = [&](const SimulationOptions& options) {
    const std::size_t steps = run.reference.steps();
    SimulationTrace trace = init_trace(network, run.dt_track_h, 1);
    for (std::size_t i = 0; i < network.nodes.size(); ++i) trace.e_start_kwh[i] = run.reference.nodes[i].e_init_kwh;
    const TrackingLoop loop(network, run.dt_track_h, run.tracking, options,
                            draw_variations(run.scenario, network, steps));
    std::vector<double> e_b = trace.e_start_kwh;
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<NodeStepInput> inputs(network.nodes.size());
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& r = run.reference.nodes[i];
        inputs[i].me_ref_end = r.me_ref_kwh[t];
        inputs[i].buffer_plan_kw = r.buffer_plan_kw[t];
        inputs[i].t = static_cast<int>(t);
        inputs[i].t_a = r.t_a;
        inputs[i].horizon = run.reference.horizon_steps;
        inputs[i].port_scheduled = r.port_power_kw;
        inputs[i].port_ref = r.port_power_kw;
      }
      loop.step(t, inputs, e_b, trace);
    }
    return trace;
  };

  SimulationResult result{simulate(run.options), {}};
  if (run.options.compute_baseline && run.options.fcs_enabled) {
    SimulationOptions base = run.options;
    base.fcs_enabled = false;
    base.record_rounds = false;
    const auto baseline = simulate(base);
    result.metrics = compute_metrics(result.trace, network.nodes, &baseline);
  } else {
    result.metrics = compute_metrics(result.trace, network.nodes,
                                     run.options.compute_baseline ? &result.trace : nullptr);
  }
  return result;
}

}  // namespace ger
