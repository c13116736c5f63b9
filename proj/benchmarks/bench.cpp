#include <benchmark/benchmark.h>

#include <random>

#include "ger/dispatch.hpp"
#include "ger/fcs.hpp"
#include "ger/flc.hpp"

namespace {

ger::GerNode twoport_node(double e_init) {
  return ger::make_node("G1", ger::Role::master, {{"port2", 160.0, 0.2, 0.0}, {"port3", 160.0, 0.05, 0.0}},
                        {10.0, 40.0, 80.0, 0.9, 0.9, e_init});
}

void BM_DispatchHorizon(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  const auto node = twoport_node(12.0);
  ger::NodeProfile p;
  for (std::size_t k = 0; k < steps; ++k) {
    p.ref_kw.push_back({50.0, 30.0});
    p.dpv_kw.push_back(0.0);
    p.dwt_kw.push_back(k < 4 ? 0.0 : 5.0);
    p.dload_kw.push_back(k < 4 ? 20.0 : 0.0);
    p.pm_kw.push_back(0.0);
  }
  ger::DispatchOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(ger::optimize_horizon(node, p, 12.0, opt).objective);
}
BENCHMARK(BM_DispatchHorizon)->Arg(3)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_FlcInfer(benchmark::State& state) {
  const ger::FuzzyTracker f(30.0, 80.0);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> de(-30.0, 30.0), m(0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(f.infer(de(rng), m(rng)));
}
BENCHMARK(BM_FlcInfer);

void BM_FcsExchange(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("g" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(ids[i], ids[(i + 1) % n]);
  for (std::size_t i = 0; i + n / 2 < n; i += 3) edges.emplace_back(ids[i], ids[i + n / 2]);
  const auto topo = ger::Topology::from_edges(ids, edges);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> pc(-80.0, 80.0);
  std::vector<double> p(n);
  for (auto& v : p) v = pc(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ger::run_exchange(p, topo).mp_c);
}
BENCHMARK(BM_FcsExchange)->Arg(10)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
