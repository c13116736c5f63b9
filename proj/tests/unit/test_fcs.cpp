#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ger/fcs.hpp"

using namespace ger;

namespace {

Topology path3() { return Topology::from_edges({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}}); }

Topology star(std::size_t n) {
  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::string>> e;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
  for (std::size_t i = 1; i < n; ++i) e.emplace_back(ids[0], ids[i]);
  return Topology::from_edges(ids, e);
}

}  // namespace

TEST(Fcs, Split) {
  const auto s = split({10.0, -5.0, 0.0});
  EXPECT_EQ(s.surplus, (std::vector<double>{10.0, 0.0, 0.0}));
  EXPECT_EQ(s.deficit, (std::vector<double>{0.0, -5.0, 0.0}));
}

TEST(Fcs, OffersScaleRealized) {
  const auto topo = star(3);
  const std::vector<double> p_c{10.0, -6.0, -2.0};
  const auto s = split(p_c);
  const auto b = offers(s.surplus, s.deficit, topo);
  EXPECT_DOUBLE_EQ(b[0][1], 7.5);
  EXPECT_DOUBLE_EQ(b[0][2], 2.5);
  const auto c = scale(b, s.deficit);
  EXPECT_DOUBLE_EQ(c[0][1], 6.0);
  EXPECT_DOUBLE_EQ(c[0][2], 2.0);
  const auto mp = realized(c);
  EXPECT_DOUBLE_EQ(mp[0], 8.0);
  EXPECT_DOUBLE_EQ(mp[1], -6.0);
  EXPECT_DOUBLE_EQ(mp[2], -2.0);
}

TEST(Fcs, TwoSurplusesShareOneDeficit) {
  const auto topo = path3();
  const std::vector<double> p_c{4.0, -6.0, 8.0};
  const auto r = run_exchange(p_c, topo);
  EXPECT_DOUBLE_EQ(r.mp_c[0], 2.0);
  EXPECT_DOUBLE_EQ(r.mp_c[1], -6.0);
  EXPECT_DOUBLE_EQ(r.mp_c[2], 4.0);
}

TEST(Fcs, DisconnectedDeficitGetsNothing) {
  const auto topo = Topology::from_edges({"a", "b", "c"}, {{"a", "b"}});
  const auto r = run_exchange({5.0, 0.0, -5.0}, topo);
  EXPECT_EQ(r.mp_c, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Fcs, ExchangeMatchesCompositionAndConserves) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> pc(-50.0, 50.0);
  std::bernoulli_distribution link(0.4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 9;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("g" + std::to_string(i));
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (link(rng)) edges.emplace_back(ids[i], ids[j]);
    const auto topo = Topology::from_edges(ids, edges);
    std::vector<double> p(n);
    for (auto& v : p) v = trial % 5 == 0 && rng() % 3 == 0 ? 0.0 : pc(rng);

    const auto s = split(p);
    const auto c = scale(offers(s.surplus, s.deficit, topo), s.deficit);
    const auto expect = realized(c);
    const auto r = run_exchange(p, topo);
    EXPECT_EQ(r.mp_c, expect);
    EXPECT_EQ(r.transfers, c);

    double sent = 0.0, got = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] > 0.0) {
        EXPECT_GE(r.mp_c[i], 0.0);
        EXPECT_LE(r.mp_c[i], p[i] * (1 + 1e-12));
        sent += r.mp_c[i];
      } else {
        EXPECT_LE(r.mp_c[i], 0.0);
        EXPECT_GE(r.mp_c[i], p[i] * (1 + 1e-12));
        got -= r.mp_c[i];
      }
      for (std::size_t j = 0; j < n; ++j)
        if (!topo.adjacent(i, j)) {
          EXPECT_EQ(c[i][j], 0.0);
        }
    }
    EXPECT_NEAR(sent, got, 1e-9 * std::max(1.0, sent));

    std::size_t mixed = 0;
    for (const auto& [i, j] : topo.edges())
      if ((p[i] > 0.0 && p[j] < 0.0) || (p[i] < 0.0 && p[j] > 0.0)) ++mixed;
    EXPECT_EQ(r.log.size(), topo.edges().size() + 2 * mixed);
  }
}

TEST(Fcs, RoundLogIsJsonLines) {
  const auto r = run_exchange({10.0, -6.0, -2.0}, star(3));
  const auto text = to_jsonl(r.log, {"n0", "n1", "n2"}, 7);
  std::size_t lines = 0;
  for (const char ch : text) lines += ch == '\n';
  EXPECT_EQ(lines, r.log.size());
  EXPECT_NE(text.find("\"offer\""), std::string::npos);
}
