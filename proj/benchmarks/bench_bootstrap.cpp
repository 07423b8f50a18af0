#include <benchmark/benchmark.h>

#include "woc/alpha_sweep.hpp"
#include "woc/crowd_sim.hpp"

namespace {

struct Fixture {
  woc::SimulatedData sim;
  std::vector<woc::SocialWeightResult> results;

  Fixture() {
    woc::ScenarioSpec spec;
    spec.pre_bias = 0.5;
    spec.sw_distribution = woc::SwDistribution::uniform(-1.0, 1.0);
    sim = woc::generate_dataset(spec);
    results = woc::classify_records(sim.dataset, 3);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_ClassifyRecords(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(woc::classify_records(f.sim.dataset, 3).data());
}
BENCHMARK(BM_ClassifyRecords)->Unit(benchmark::kMillisecond);

void BM_BootstrapPoint(benchmark::State& state) {
  const auto& f = fixture();
  woc::BootstrapOptions opt;
  opt.replicates = static_cast<std::size_t>(state.range(0));
  opt.resample = state.range(1) ? woc::ResampleMode::Stratified : woc::ResampleMode::Pooled;
  for (auto _ : state) {
    benchmark::DoNotOptimize(woc::bootstrap_improvement(f.sim.dataset, f.results, 1.0, opt).ci_low);
  }
}
BENCHMARK(BM_BootstrapPoint)->ArgsProduct({{100, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_SweepDefaultGrid(benchmark::State& state) {
  const auto& f = fixture();
  const auto grid = woc::default_alpha_grid();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        woc::sweep_alpha(f.sim.dataset, f.results, grid, woc::BootstrapOptions{}).size());
  }
}
BENCHMARK(BM_SweepDefaultGrid)->Unit(benchmark::kMillisecond);

}  // namespace
