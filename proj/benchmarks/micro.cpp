#include <map>

#include <benchmark/benchmark.h>

#include "shiftbench/calibration.hpp"
#include "shiftbench/estimators.hpp"
#include "shiftbench/prior_update.hpp"
#include "shiftbench/simulation.hpp"

namespace {

using namespace shiftbench;

const LabeledBatch& batch(std::size_t n) {
  static const auto oracle = GaussianOracle::simplex(3, 2.0, 1.0, ProbabilitySimplex::uniform(3));
  static const auto big = oracle_generate(oracle, validate_simplex({0.6, 0.3, 0.1}), 100000, 1);
  static std::map<std::size_t, LabeledBatch> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<std::size_t> idx(n);
    for (std::size_t k = 0; k < n; ++k) idx[k] = k;
    it = cache.emplace(n, big.select(idx)).first;
  }
  return it->second;
}

void BM_BatchPriorUpdate(benchmark::State& state) {
  const auto& b = batch(static_cast<std::size_t>(state.range(0)));
  const auto source = ProbabilitySimplex::uniform(3);
  const auto target = validate_simplex({0.2, 0.3, 0.5});
  for (auto _ : state) benchmark::DoNotOptimize(batch_prior_update(b.posteriors(), source, target));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchPriorUpdate)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_EstimateEm(benchmark::State& state) {
  const auto& b = batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_em(b.posteriors(), ProbabilitySimplex::uniform(3)));
  }
}
BENCHMARK(BM_EstimateEm)->Arg(1000)->Arg(10000);

void BM_EstimateLeip(benchmark::State& state) {
  const auto& b = batch(static_cast<std::size_t>(state.range(0)));
  LeipConfig cfg;
  cfg.tau = TauExplicit{0.9};
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_leip(b.posteriors(), ProbabilitySimplex::uniform(3), cfg));
  }
}
BENCHMARK(BM_EstimateLeip)->Arg(1000)->Arg(10000);

void BM_FitTemperature(benchmark::State& state) {
  const auto b = distort(batch(static_cast<std::size_t>(state.range(0))), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(fit_calibrator(CalibratorKind::Temperature, b));
}
BENCHMARK(BM_FitTemperature)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_FitVector(benchmark::State& state) {
  const auto b = distort(batch(static_cast<std::size_t>(state.range(0))), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(fit_calibrator(CalibratorKind::Vector, b));
}
BENCHMARK(BM_FitVector)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
