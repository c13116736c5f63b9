#include <gtest/gtest.h>

#include <cmath>

#include "ger/sim.hpp"
#include "helpers.hpp"

using namespace ger;

namespace {

SimulationConfig small_config(bool with_noise) {
  std::vector<GerNode> nodes;
  std::vector<std::string> ids{"A", "B", "C"};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    nodes.push_back(make_node(ids[i], i == 1 ? Role::slave : Role::master,
                              {{"p1", 160.0, 0.2, 0.0}, {"p2", 160.0, 0.05, 0.0}},
                              {10.0, 40.0, 80.0, 0.95, 0.95, 20.0 + 4.0 * i}));
  }
  SimulationConfig cfg;
  cfg.network = validate_network(nodes, Topology::from_edges(ids, {{"A", "B"}, {"B", "C"}, {"A", "C"}}));
  cfg.grid = {0.25, 0.05, 4};
  for (std::size_t i = 0; i < ids.size(); ++i) cfg.profiles.push_back(test::flat_profile(4, {40.0, 20.0}));
  cfg.ga.population = 20;
  cfg.ga.generations = 30;
  cfg.ga.seed = 5;
  cfg.tracking = {2.0, 40.0};
  if (with_noise) {
    const SourceSpec s{Distribution::gaussian(0, 6), Distribution::gaussian(0, 6), Distribution::gaussian(0, 6)};
    cfg.scenario = StochasticSpec{3, ids, {s, s, s}};
  }
  return cfg;
}

void expect_invariants(const SimulationResult& r, const SimulationConfig& cfg) {
  const auto& tr = r.trace;
  const double dt = cfg.grid.dt_track_h;
  ASSERT_EQ(tr.steps.size(), static_cast<std::size_t>(cfg.grid.horizon * cfg.grid.substeps()));
  std::vector<double> e = tr.e_start_kwh;
  for (std::size_t t = 0; t < tr.steps.size(); ++t) {
    double net = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto& s = tr.steps[t][i];
      const auto& node = cfg.network.nodes[i];
      // Energy follows the realized buffer power from the previous step's end.
      EXPECT_EQ(s.e_b_kwh, buffer_step(e[i], s.buffer_power_kw, dt, node.buffer).energy_kwh);
      e[i] = s.e_b_kwh;
      EXPECT_GE(s.e_b_kwh, node.buffer.e_min_kwh);
      EXPECT_LE(s.e_b_kwh, node.buffer.e_max_kwh);
      EXPECT_LE(std::abs(s.buffer_power_kw), node.buffer.p_rate_kw + 1e-9);
      for (std::size_t p = 0; p < node.ports.size(); ++p)
        EXPECT_LE(std::abs(s.port_power_kw[p]), node.ports[p].p_rate_kw + 1e-9);
      EXPECT_DOUBLE_EQ(s.deviation_kwh, s.me_ref_kwh - s.e_b_kwh);
      net += s.mp_c_kw;
    }
    EXPECT_NEAR(net, 0.0, 1e-9);
  }
  EXPECT_EQ(r.metrics.constraint_violations, 0);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    double sum = 0.0, worst = 0.0;
    for (const auto& step : tr.steps) {
      sum += std::abs(step[i].deviation_kwh);
      worst = std::max(worst, std::abs(step[i].deviation_kwh));
    }
    EXPECT_NEAR(r.metrics.nodes[i].mean_abs_deviation_kwh, sum / tr.steps.size(), 1e-12);
    EXPECT_EQ(r.metrics.nodes[i].max_abs_deviation_kwh, worst);
    total += sum;
    count += tr.steps.size();
  }
  EXPECT_NEAR(r.metrics.mean_abs_deviation_kwh, total / count, 1e-12);
}

}  // namespace

TEST(Simulation, ZeroVariationTracksExactly) {
  auto cfg = small_config(false);
  cfg.options.shift_enabled = false;
  const auto r = run_simulation(cfg);
  expect_invariants(r, cfg);
  for (const auto& step : r.trace.steps) {
    for (const auto& s : step) {
      EXPECT_EQ(s.e_b_kwh, s.me_ref_kwh);
      EXPECT_EQ(s.mp_c_kw, 0.0);
      EXPECT_EQ(s.unserved_kw, 0.0);
    }
  }
  EXPECT_EQ(r.metrics.total_shared_kwh, 0.0);
  EXPECT_EQ(r.metrics.infeasible_windows, 0);
}

TEST(Simulation, NoisyRunKeepsInvariants) {
  auto cfg = small_config(true);
  const auto r = run_simulation(cfg);
  expect_invariants(r, cfg);
  ASSERT_EQ(r.trace.windows.size(), 4u);
  ASSERT_TRUE(r.metrics.baseline_mean_abs_deviation_kwh.has_value());

  cfg.options.fcs_enabled = false;
  const auto off = run_simulation(cfg);
  expect_invariants(off, cfg);
  EXPECT_EQ(off.metrics.total_shared_kwh, 0.0);
  for (const auto& step : off.trace.steps)
    for (const auto& s : step) EXPECT_EQ(s.mp_c_kw, 0.0);
  EXPECT_EQ(*r.metrics.baseline_mean_abs_deviation_kwh, off.metrics.mean_abs_deviation_kwh);
}

TEST(Simulation, Deterministic) {
  const auto cfg = small_config(true);
  const auto a = run_simulation(cfg);
  const auto b = run_simulation(cfg);
  for (std::size_t t = 0; t < a.trace.steps.size(); ++t)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.trace.steps[t][i].e_b_kwh, b.trace.steps[t][i].e_b_kwh);
}

TEST(Simulation, WindowRolloverStartsFromRealizedEnergy) {
  const auto cfg = small_config(true);
  const auto r = run_simulation(cfg);
  const auto sub = static_cast<std::size_t>(cfg.grid.substeps());
  for (std::size_t w = 1; w < r.trace.windows.size(); ++w) {
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& win = r.trace.windows[w][i];
      if (win.feasible) {
        EXPECT_EQ(win.plan.e_init_kwh, r.trace.steps[w * sub - 1][i].e_b_kwh);
      }
    }
  }
}

TEST(Simulation, InvalidConfigRejected) {
  auto cfg = small_config(false);
  cfg.grid.dt_track_h = 0.07;
  EXPECT_FALSE(check_config(cfg).empty());
  EXPECT_THROW(run_simulation(cfg), ValidationError);
}

TEST(PortClamp, Examples) {
  const Matrix t{{0.0, 10.0}, {0.0, 0.0}};
  EXPECT_EQ(apply_port_clamp(t, {{0.0, 160.0}, {0.0, 160.0}}), t);
  // Sender already at its negative rating cannot send more.
  EXPECT_EQ(apply_port_clamp(t, {{-160.0, 160.0}, {0.0, 160.0}})[0][1], 0.0);
  EXPECT_DOUBLE_EQ(apply_port_clamp(t, {{-156.0, 160.0}, {0.0, 160.0}})[0][1], 4.0);
  // Receiver with 4 kW of headroom left.
  EXPECT_DOUBLE_EQ(apply_port_clamp(t, {{0.0, 160.0}, {156.0, 160.0}})[0][1], 4.0);
}

TEST(Tracking, FixedReferenceRun) {
  TrackingRun run;
  const auto node = test::twoport_node(25.0);
  run.network = validate_network({node}, Topology({"G1"}, {{0}}));
  NodeReference nr{"G1", 25.0, std::vector<double>(20, 25.0), std::vector<double>(20, 0.0), std::nullopt, {50.0, 30.0}};
  run.reference = {20, {nr}};
  run.tracking = {5.0, 40.0};
  const auto r = run_tracking(run);
  ASSERT_EQ(r.trace.steps.size(), 20u);
  for (const auto& step : r.trace.steps) EXPECT_EQ(step[0].e_b_kwh, 25.0);

  run.reference.nodes[0].me_ref_kwh.pop_back();
  EXPECT_FALSE(check_reference(run.reference, run.network).empty());
}
