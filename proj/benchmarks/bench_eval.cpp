#include <benchmark/benchmark.h>

#include <cmath>

#include "slicevol/eval/bootstrap.hpp"
#include "slicevol/eval/delong.hpp"
#include "slicevol/eval/metrics.hpp"
#include "slicevol/random.hpp"

namespace {

using namespace slicevol;

eval::ScoredCohort cohort(std::size_t n) {
  Rng rng(9);
  std::vector<double> p(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    p[i] = 1.0 / (1.0 + std::exp(-(standard_normal(rng) + y[i])));
  }
  return eval::make_cohort(p, y);
}

void BM_RocAuc(benchmark::State& state) {
  const eval::ScoredCohort c = cohort(state.range(0));
  const auto p = c.probabilities();
  const auto y = c.labels();
  for (auto _ : state) benchmark::DoNotOptimize(eval::roc_auc(p, y));
}
BENCHMARK(BM_RocAuc)->Arg(56)->Arg(1000)->Arg(10000);

void BM_DeLong(benchmark::State& state) {
  const eval::ScoredCohort a = cohort(state.range(0));
  eval::ScoredCohort b = a;
  for (auto& patient : b.patients) patient.probability = std::sqrt(patient.probability);
  for (auto _ : state) benchmark::DoNotOptimize(eval::delong_test(a, b));
}
BENCHMARK(BM_DeLong)->Arg(56)->Arg(1000);

void BM_BootstrapAuc(benchmark::State& state) {
  const eval::ScoredCohort c = cohort(56);
  const eval::BootstrapConfig cfg{static_cast<std::size_t>(state.range(0)), 1, 0.95};
  for (auto _ : state) benchmark::DoNotOptimize(eval::bootstrap_metric(c, eval::Metric::RocAuc, 0.5, cfg));
}
BENCHMARK(BM_BootstrapAuc)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
