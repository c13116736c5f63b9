#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ger/dispatch.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace ger;

TEST(Penalty, Examples) {
  EXPECT_DOUBLE_EQ(penalty_j(130.0, 100.0, 0.2), 10.0);
  EXPECT_EQ(penalty_j(110.0, 100.0, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(penalty_j(-90.0, -100.0, 0.05), 5.0);
  EXPECT_DOUBLE_EQ(penalty_j(70.0, 100.0, 0.2), -10.0);
  EXPECT_DOUBLE_EQ(penalty_j(-130.0, -100.0, 0.2), -10.0);
  EXPECT_EQ(penalty_j(55.0, 0.0, 0.2), 0.0);
}

TEST(Penalty, MatchesBranchOracleAndBandProperties) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> pw(-200.0, 200.0);
  std::uniform_real_distribution<double> al(0.0, 0.5);
  for (int i = 0; i < 20000; ++i) {
    const double p = pw(rng);
    const double ref = pw(rng);
    const double a = al(rng);
    const double j = penalty_j(p, ref, a);
    EXPECT_DOUBLE_EQ(j, oracle::band_penalty(p, ref, a));
    const double lo = std::min((1 - a) * ref, (1 + a) * ref);
    const double hi = std::max((1 - a) * ref, (1 + a) * ref);
    EXPECT_EQ(j == 0.0, p >= lo && p <= hi);
    EXPECT_LE(std::abs(penalty_j(p, ref, a + 0.1)), std::abs(j));
  }
  // Closed band edges are inside.
  EXPECT_EQ(penalty_j(120.0, 100.0, 0.2), 0.0);
  EXPECT_EQ(penalty_j(-95.0, -100.0, 0.05), 0.0);
}

TEST(Buffer, HandExamples) {
  const BufferSpec b{10.0, 40.0, 80.0, 0.9, 0.9, 20.0};
  EXPECT_EQ(buffer_step(20.0, 9.0, 0.25, b).energy_kwh, 17.5);
  EXPECT_EQ(buffer_step(20.0, -10.0, 0.25, b).energy_kwh, 22.25);
  EXPECT_EQ(buffer_step(20.0, 0.0, 0.25, b).energy_kwh, 20.0);
  EXPECT_TRUE(buffer_step(20.0, 9.0, 0.25, b).in_bounds);
  EXPECT_FALSE(buffer_step(11.0, 80.0, 0.25, b).in_bounds);
  EXPECT_FALSE(buffer_step(39.0, -80.0, 0.25, b).in_bounds);
}

TEST(Buffer, UnitEfficiencyRoundTripIsExact) {
  const BufferSpec b{0.0, 1000.0, 500.0, 1.0, 1.0, 500.0};
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> q(-4096, 4096);
  for (int i = 0; i < 10000; ++i) {
    const double e = 500.0 + q(rng) / 64.0;
    const double p = q(rng) / 16.0;
    const double there = buffer_step(e, -p, 0.25, b).energy_kwh;
    EXPECT_EQ(buffer_step(there, p, 0.25, b).energy_kwh, e);
  }
}

TEST(Buffer, PowerLimitsKeepStepInBounds) {
  const BufferSpec b{10.0, 40.0, 80.0, 0.9, 0.95, 20.0};
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> en(10.0, 40.0);
  for (int i = 0; i < 5000; ++i) {
    const double e = i == 0 ? 10.0 : i == 1 ? 40.0 : en(rng);
    const auto [lo, hi] = buffer_power_limits(e, b, 0.05);
    EXPECT_LE(lo, 0.0);
    EXPECT_GE(hi, 0.0);
    EXPECT_LE(hi, 80.0);
    EXPECT_GE(lo, -80.0);
    EXPECT_TRUE(buffer_step(e, lo, 0.05, b).in_bounds);
    EXPECT_TRUE(buffer_step(e, hi, 0.05, b).in_bounds);
  }
}

TEST(Objective, Examples) {
  const auto master = make_node("M", Role::master, {{"p", 100.0, 0.2, 0.0}}, {0, 50, 50, 1, 1, 10});
  HorizonPlan zero;
  zero.port_power = {{10.0}};
  zero.penalty = {{0.0}};
  zero.buffer_power = {0.0};
  EXPECT_EQ(objective(zero, master, std::vector<double>{-10.0}), 0.0);
  HorizonPlan one = zero;
  one.penalty = {{10.0}};
  EXPECT_DOUBLE_EQ(objective(one, master, std::vector<double>{-10.0}), 500.0);

  const auto slave = make_node("S", Role::slave, {{"p", 100.0, 0.2, 0.0}}, {0, 50, 50, 1, 1, 10});
  HorizonPlan s;
  s.port_power = {{0.0}, {0.0}};
  s.penalty = {{0.0}, {0.0}};
  s.buffer_power = {2.0, -2.0};
  EXPECT_DOUBLE_EQ(objective(s, slave, std::vector<double>{0.0, 0.0}), 8.0);

  auto bad = master;
  bad.ports[0].alpha = 0.0;
  EXPECT_THROW(objective(one, bad, std::vector<double>{-10.0}), std::invalid_argument);
}

TEST(Split, MatchesFineGridOracle) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<RouterPort> ports{{"a", 160.0, 0.05 + 0.3 * u(rng), 0.0}, {"b", 120.0, 0.05 + 0.3 * u(rng), 0.0}};
    std::vector<RouterPort> weighted = ports;
    for (auto& p : weighted) p.weight = 1.0 / p.alpha;
    const std::vector<double> refs{-80.0 + 160.0 * u(rng), -60.0 + 120.0 * u(rng)};
    const double total = -270.0 + 540.0 * u(rng);
    const auto p = split_port_power(total, refs, weighted);
    auto cost = [&](double a, double b) {
      const double ja = oracle::band_penalty(a, refs[0], ports[0].alpha);
      const double jb = oracle::band_penalty(b, refs[1], ports[1].alpha);
      return ja * ja / ports[0].alpha + jb * jb / ports[1].alpha;
    };
    EXPECT_LE(std::abs(p[0]), 160.0);
    EXPECT_LE(std::abs(p[1]), 120.0);
    if (std::abs(total) >= 280.0) continue;  // outside the combined rating: saturates
    EXPECT_NEAR(p[0] + p[1], total, 1e-9 * std::max(1.0, std::abs(total)));
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20000; ++i) {
      const double a = -160.0 + 320.0 * i / 20000.0;
      const double b = total - a;
      if (std::abs(b) <= 120.0) best = std::min(best, cost(a, b));
    }
    EXPECT_LE(cost(p[0], p[1]), best + 1e-6);
  }
}

TEST(Dispatch, ZeroVariationKeepsBaseline) {
  for (const double e0 : {10.0, 25.0, 40.0}) {
    const auto node = test::twoport_node(e0);
    const auto profile = test::flat_profile(6, {50.0, 30.0});
    DispatchOptions opt;
    opt.ga.generations = 40;
    const auto plan = optimize_horizon(node, profile, e0, opt);
    EXPECT_EQ(plan.objective, 0.0);
    for (std::size_t k = 0; k < plan.steps(); ++k) {
      EXPECT_NEAR(plan.buffer_power[k], 0.0, 1e-9);
      EXPECT_EQ(plan.penalty[k][0], 0.0);
      EXPECT_EQ(plan.penalty[k][1], 0.0);
    }
    EXPECT_EQ(check_plan(plan, node, opt.dt_h), "");
  }
}

TEST(Dispatch, PlanInvariantsHoldUnderScarcity) {
  const auto node = test::twoport_node(12.0);
  auto profile = test::flat_profile(8, {50.0, 30.0}, -35.0);
  DispatchOptions opt;
  opt.ga.generations = 120;
  const auto plan = optimize_horizon(node, profile, 12.0, opt);
  EXPECT_EQ(check_plan(plan, node, opt.dt_h), "");
  double e = 12.0;
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    e = buffer_step(e, plan.buffer_power[k], opt.dt_h, node.buffer).energy_kwh;
    EXPECT_EQ(e, plan.buffer_energy[k]);
  }
  EXPECT_GT(plan.objective, 0.0);
}

TEST(Dispatch, DeterministicForSeed) {
  const auto node = test::twoport_node(12.0);
  const auto profile = test::flat_profile(6, {50.0, 30.0}, -30.0);
  DispatchOptions opt;
  opt.ga.generations = 60;
  const auto a = optimize_horizon(node, profile, 12.0, opt);
  const auto b = optimize_horizon(node, profile, 12.0, opt);
  EXPECT_EQ(a.buffer_power, b.buffer_power);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(Dispatch, SlaveKeepsPortsAtReferences) {
  const auto node = test::twoport_node(25.0, Role::slave);
  const auto profile = test::flat_profile(4, {50.0, 30.0}, 12.0);
  DispatchOptions opt;
  opt.ga.generations = 80;
  const auto plan = optimize_horizon(node, profile, 25.0, opt);
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    EXPECT_EQ(plan.port_power[k][0], 50.0);
    EXPECT_EQ(plan.port_power[k][1], 30.0);
    // Buffer absorbs the surplus: P_B = -(refs + P_U) = -12.
    EXPECT_NEAR(plan.buffer_power[k], -12.0, 1e-6);
  }
  EXPECT_EQ(check_plan(plan, node, opt.dt_h), "");
}

TEST(Dispatch, InfeasibleInstancesReported) {
  // Slave ports are held at their references, which must fit the rating.
  const auto slave = test::twoport_node(25.0, Role::slave);
  EXPECT_THROW(optimize_horizon(slave, test::flat_profile(4, {200.0, 30.0}), 25.0, {}), InfeasibleDispatch);
  // Master whose ports and buffer together cannot balance the U-layer.
  const auto master = test::twoport_node(25.0);
  EXPECT_THROW(optimize_horizon(master, test::flat_profile(2, {50.0, 30.0}, -500.0), 25.0, {}), InfeasibleDispatch);
  EXPECT_THROW(optimize_horizon(master, test::flat_profile(2, {50.0, 30.0}), 45.0, {}), InfeasibleDispatch);
}

TEST(Dispatch, GaWithinFivePercentOfGridOracle) {
  DispatchOptions opt;
  for (unsigned seed = 100; seed < 104; ++seed) {
    const auto in = oracle::random_instance(seed);
    opt.dt_h = in.dt;
    const auto plan = optimize_horizon(in.node, in.profile, in.e_init, opt);
    const double best = oracle::grid_search(in, 2);
    ASSERT_TRUE(std::isfinite(best));
    EXPECT_LE(plan.objective, 1.05 * best + 1e-9) << "seed " << seed;
  }
}

namespace {

HorizonPlan shaped(std::vector<double> energy, std::vector<std::vector<double>> penalty) {
  HorizonPlan p;
  p.buffer_energy = std::move(energy);
  p.penalty = std::move(penalty);
  p.buffer_power.assign(p.buffer_energy.size(), 0.0);
  return p;
}

}  // namespace

TEST(Shift, NoTouchMeansNoShift) {
  const BufferSpec b{10.0, 40.0, 80.0, 0.9, 0.9, 20.0};
  const auto plan = shaped({20, 25, 30}, {{1.0}, {-3.0}, {0.0}});
  const auto s = compute_shift(plan, b, 0.25);
  EXPECT_FALSE(s.t_a);
  EXPECT_EQ(s.de_sh, 0.0);
  EXPECT_EQ(s.me_ref, plan.buffer_energy);
}

TEST(Shift, MinBoundExample) {
  const BufferSpec b{10.0, 40.0, 80.0, 0.9, 0.9, 20.0};
  const auto plan = shaped({30, 35, 10, 12}, {{0.0, 0.0}, {0.0, 0.0}, {12.0, 6.0}, {50.0, 0.0}});
  const auto s = compute_shift(plan, b, 0.25);
  ASSERT_TRUE(s.t_a);
  EXPECT_EQ(*s.t_a, 2);
  EXPECT_EQ(*s.t_b, 1);
  EXPECT_EQ(s.side, BoundSide::min);
  EXPECT_DOUBLE_EQ(s.de_res, 5.0);
  EXPECT_DOUBLE_EQ(s.de_sh, 5.0);
  EXPECT_DOUBLE_EQ(s.me_ref[0], 35.0);
  EXPECT_DOUBLE_EQ(s.me_ref[1], 40.0);
  EXPECT_DOUBLE_EQ(s.me_ref[2], 15.0);
  EXPECT_EQ(s.me_ref[3], 12.0);  // after t_a: untouched
  for (const double e : s.me_ref) EXPECT_LE(e, b.e_max_kwh);

  // More headroom: the violation energy is the binding term.
  const auto roomy = compute_shift(shaped({20, 25, 10}, {{0.0}, {0.0}, {18.0}}), b, 0.25);
  EXPECT_DOUBLE_EQ(roomy.de_sh, 0.25 * 18.0 / 0.9);
}

TEST(Shift, HeadroomMonotone) {
  const BufferSpec b{10.0, 40.0, 80.0, 0.9, 0.9, 20.0};
  double previous = -1.0;
  for (double peak = 39.5; peak >= 11.0; peak -= 0.5) {
    const auto s = compute_shift(shaped({peak, 10.0}, {{0.0}, {30.0}}), b, 0.25);
    EXPECT_GE(s.de_sh, previous);
    previous = s.de_sh;
  }
}

TEST(Shift, MaxBoundAndLiteralHeadroom) {
  const BufferSpec b{10.0, 40.0, 80.0, 0.9, 0.9, 20.0};
  const auto plan = shaped({20, 15, 40}, {{0.0}, {-2.0}, {-16.0}});
  const auto s = compute_shift(plan, b, 0.25);
  EXPECT_EQ(s.side, BoundSide::max);
  EXPECT_EQ(*s.t_a, 2);
  EXPECT_EQ(*s.t_b, 1);
  EXPECT_DOUBLE_EQ(s.de_res, -5.0);
  EXPECT_DOUBLE_EQ(s.de_sh, -0.9 * 0.25 * 18.0);
  for (const double e : s.me_ref) EXPECT_GE(e, b.e_min_kwh);
  const auto lit = compute_shift(plan, b, 0.25, {.literal_max_headroom = true});
  EXPECT_DOUBLE_EQ(lit.de_res, -30.0);
  // Positive (min-side) violations do not count in the max case.
  const auto mixed = compute_shift(shaped({20, 15, 40}, {{7.0}, {-2.0}, {-16.0}}), b, 0.25);
  EXPECT_DOUBLE_EQ(mixed.de_sh, s.de_sh);
}

TEST(Shift, SimultaneousTouchPrefersMin) {
  const BufferSpec tight{10.0, 10.0 + 1e-7, 80.0, 1.0, 1.0, 10.0};
  const auto s = compute_shift(shaped({10.0}, {{0.0}}), tight, 0.25);
  EXPECT_EQ(s.side, BoundSide::min);
}

TEST(Uc, Examples) {
  EXPECT_EQ(uc_index(std::vector<double>{0, 0, 0}, std::vector<double>{10, 20, 30}), 0.0);
  EXPECT_DOUBLE_EQ(uc_index(std::vector<double>{10}, std::vector<double>{100}), 0.01);
  EXPECT_DOUBLE_EQ(uc_index(std::vector<double>{10, 0}, std::vector<double>{100, 0}), 0.01);
  EXPECT_THROW(uc_index(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Slice, KeepsTail) {
  auto p = test::flat_profile(5, {1.0, 2.0}, 3.0);
  p.dpv_kw[3] = 9.0;
  const auto s = slice_profile(p, 3);
  ASSERT_EQ(s.steps(), 2u);
  EXPECT_EQ(s.dpv_kw[0], 9.0);
}
