#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ger/scenario.hpp"
#include "helpers.hpp"

using namespace ger;

TEST(Sampling, ZeroStddevGivesMean) {
  const auto xs = sample_distribution(Distribution::gaussian(0.0, 0.0), 5, 50);
  for (const double x : xs) EXPECT_EQ(x, 0.0);
  const auto none = sample_distribution({}, 5, 3);
  EXPECT_EQ(none, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Sampling, GaussianMomentsAndClamp) {
  const auto xs = sample_distribution(Distribution::gaussian(2.0, 4.0), 77, 20000);
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  EXPECT_NEAR(mean, 2.0, 4.0 * 4.0 / 100.0);
  for (const double x : xs) {
    EXPECT_GE(x, 2.0 - 12.0);
    EXPECT_LE(x, 2.0 + 12.0);
  }
}

TEST(Sampling, BetaStaysInSpan) {
  const auto xs = sample_distribution(Distribution::beta(2.0, 2.0, 20.0, -10.0), 3, 10000);
  for (const double x : xs) {
    EXPECT_GE(x, -10.0);
    EXPECT_LE(x, 10.0);
  }
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  EXPECT_NEAR(mean, 0.0, 0.5);
}

TEST(Sampling, DeterministicAndNodeIndependent) {
  const SourceSpec s{Distribution::gaussian(0, 3), Distribution::gaussian(0, 3), Distribution::gaussian(0, 3)};
  StochasticSpec two{11, {"a", "b"}, {s, s}};
  StochasticSpec three{11, {"a", "b", "c"}, {s, s, s}};
  const auto x = sample_variation(two, 40);
  const auto y = sample_variation(three, 40);
  EXPECT_EQ(x[0].dpv_kw, y[0].dpv_kw);
  EXPECT_EQ(x[1].dload_kw, y[1].dload_kw);
  EXPECT_NE(x[0].dpv_kw, x[1].dpv_kw);
  EXPECT_NE(x[0].dpv_kw, x[0].dwt_kw);
  const auto again = sample_variation(two, 40);
  EXPECT_EQ(again[1].dwt_kw, x[1].dwt_kw);
  two.seed = 12;
  EXPECT_NE(sample_variation(two, 40)[0].dpv_kw, x[0].dpv_kw);
}

TEST(Sampling, SpecChecked) {
  StochasticSpec s{1, {"a"}, {SourceSpec{Distribution::gaussian(0, -1), {}, {}}}};
  EXPECT_FALSE(check_stochastic(s).empty());
  s.sources[0].pv = Distribution::beta(0.0, 2.0, 1.0, 0.0);
  EXPECT_FALSE(check_stochastic(s).empty());
  s.sources[0].pv = Distribution::gaussian(0, 1);
  EXPECT_TRUE(check_stochastic(s).empty());
}

TEST(Defaults, ScaleWithRating) {
  const auto node = test::twoport_node();
  const auto d = default_sources(node);
  EXPECT_EQ(d.pv.kind, Distribution::Kind::beta);
  EXPECT_DOUBLE_EQ(d.load.stddev_kw, 0.05 * 320.0);
  EXPECT_EQ(gaussian_sources(node).pv.kind, Distribution::Kind::gaussian);
}

namespace {

std::string csv(int rows, bool with_dload = true) {
  std::string s = with_dload ? "step,ref_port_port2,ref_port_port3,dpv,dwt,dload\n"
                             : "step,ref_port_port2,ref_port_port3,dpv,dwt\n";
  for (int r = 0; r < rows; ++r) s += std::to_string(r) + ",50,30,1,2" + (with_dload ? ",3\n" : "\n");
  return s;
}

std::string error_of(const std::string& text, int horizon) {
  try {
    parse_profile_csv(text, test::twoport_node(), horizon, "p.csv");
  } catch (const ProfileError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ProfileCsv, ParsesAndRoundTrips) {
  const auto node = test::twoport_node();
  const auto p = parse_profile_csv(csv(24), node, 24);
  ASSERT_EQ(p.steps(), 24u);
  EXPECT_EQ(p.ref_kw[3][1], 30.0);
  EXPECT_EQ(p.variation(0), 0.0);
  const auto q = parse_profile_csv(profile_to_csv(p, node), node, 24);
  EXPECT_EQ(q.ref_kw, p.ref_kw);
  EXPECT_EQ(q.dload_kw, p.dload_kw);
  const auto fixture = load_profiles(test::data_path("twoport/scarce.csv"), node, 24);
  EXPECT_EQ(fixture.steps(), 24u);
}

TEST(ProfileCsv, Errors) {
  EXPECT_NE(error_of(csv(24, false), 24).find("missing column `dload`"), std::string::npos);
  EXPECT_NE(error_of(csv(23), 24).find("23 data rows, horizon is 24"), std::string::npos);
  auto bad = csv(24);
  bad.replace(bad.find(",2,3\n"), 5, ",x,3\n");
  const auto msg = error_of(bad, 24);
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;  // header is line 1
  EXPECT_NE(msg.find("`dwt`"), std::string::npos) << msg;
}
