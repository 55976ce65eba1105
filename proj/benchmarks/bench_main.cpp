#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <vector>

#include "wettingsim/fitting.hpp"
#include "wettingsim/mcmc.hpp"
#include "wettingsim/observables.hpp"
#include "wettingsim/oracle.hpp"
#include "wettingsim/rng.hpp"
#include "wettingsim/substrate.hpp"

namespace {

using namespace wettingsim;

std::shared_ptr<const SubstrateSample> substrate(std::size_t n) {
  return std::make_shared<const SubstrateSample>(generate_substrate(n, 1, SubstrateDistribution::ExpMeanOne));
}

void BM_CheckerboardSweep(benchmark::State& state) {
  const auto s = substrate(static_cast<std::size_t>(state.range(0)));
  const ModelParams p{5.0, 0.1};
  auto c = init_config(s, p);
  std::int64_t sweep = 0;
  for (auto _ : state) checkerboard_sweep(c, p, RunSeed{3}, sweep++);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CheckerboardSweep)->Arg(1 << 12)->Arg(1 << 15)->Arg(1 << 17)->Unit(benchmark::kMicrosecond);

void BM_LocalHeatBathDraw(benchmark::State& state) {
  const LocalHeatBath kernel(ModelParams{2.0, 0.3});
  std::uint64_t k = 0;
  double sink = 0.0;
  for (auto _ : state) {
    const double u = uniform_open(stream_bits(1, StreamDomain::Chain, k, 0));
    sink += kernel.draw(1.0 + 1e-9 * static_cast<double>(k & 1023), 2.5, 0.7, u);
    ++k;
  }
  benchmark::DoNotOptimize(sink);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LocalHeatBathDraw);

void BM_PiecewiseHeatBathDraw(benchmark::State& state) {
  const ModelParams p{2.0, 0.3};
  std::uint64_t k = 0;
  double sink = 0.0;
  for (auto _ : state) {
    const double u = uniform_open(stream_bits(1, StreamDomain::Chain, k, 0));
    sink += heat_bath_draw(local_conditional(p, 1.0 + 1e-9 * static_cast<double>(k & 1023), 2.5, 0.7), u);
    ++k;
  }
  benchmark::DoNotOptimize(sink);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PiecewiseHeatBathDraw);

void BM_AccumulateCorrelation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = substrate(n);
  CorrelationAccumulator acc(n, kDefaultMaxLag);
  for (auto _ : state) acc.accumulate(s->heights);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AccumulateCorrelation)->Arg(1 << 12)->Arg(1 << 15)->Arg(1 << 17)->Unit(benchmark::kMicrosecond);

void BM_Psd(benchmark::State& state) {
  const auto s = substrate(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(psd(s->heights));
}
BENCHMARK(BM_Psd)->Arg(1 << 15)->Unit(benchmark::kMicrosecond);

void BM_Oracle(benchmark::State& state) {
  const auto s = generate_substrate(static_cast<std::size_t>(state.range(0)), 7, SubstrateDistribution::ExpMeanOne);
  OracleOptions options;
  options.max_lag = 3;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_oracle(s, ModelParams{1.0, 0.5}, options));
}
BENCHMARK(BM_Oracle)->Arg(6)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_FitStretchedExp(benchmark::State& state) {
  CorrelationEstimate e;
  e.max_lag = 100;
  for (int j = 0; j <= 100; ++j) {
    e.f.push_back(0.8 * std::exp(-std::pow(j / 12.0, 1.3)));
    e.std_error.push_back(1e-3);
  }
  e.n_measurements = 1000;
  e.n_replicas = 1;
  e.std_error_valid = true;
  for (auto _ : state) benchmark::DoNotOptimize(fit_stretched_exp(e, FitRange{0, 100}));
}
BENCHMARK(BM_FitStretchedExp)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
