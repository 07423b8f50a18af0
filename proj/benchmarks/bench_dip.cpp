#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "woc/dip_test.hpp"
#include "woc/random.hpp"

namespace {

std::vector<double> sample(std::size_t n, bool bimodal) {
  auto rng = woc::stream_for(1, {n});
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = (bimodal && i % 2 ? 6.0 : 0.0) + z(rng);
  return xs;
}

void BM_DipStatistic(benchmark::State& state) {
  const auto xs = sample(static_cast<std::size_t>(state.range(0)), state.range(1) != 0);
  for (auto _ : state) benchmark::DoNotOptimize(woc::dip_statistic(xs));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DipStatistic)->ArgsProduct({{8, 64, 200, 1000, 10000}, {0, 1}})->Complexity();

void BM_DipNull(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(woc::DipNullDistribution::simulate(n, 1000, 3).sorted().data());
  }
}
BENCHMARK(BM_DipNull)->Arg(20)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_FlagCached(benchmark::State& state) {
  const auto xs = sample(200, true);
  woc::DipNullCache cache(2000, 5);
  cache.get(xs.size());
  for (auto _ : state) benchmark::DoNotOptimize(woc::flag_unimodality(xs, 4, cache).dip);
}
BENCHMARK(BM_FlagCached);

}  // namespace
BENCHMARK_MAIN();
