// OpenMP kernels against their serial references.
// Thread count follows OMP_NUM_THREADS.

#include "nysmmd/data_io.hpp"
#include "nysmmd/feature_map.hpp"
#include "nysmmd/kernel.hpp"
#include "nysmmd/leverage.hpp"
#include "nysmmd/statistics.hpp"

#include <benchmark/benchmark.h>

using namespace nysmmd;

namespace {

PooledData pooled(Index n) {
  return PooledData(sample_correlated_gaussians(3, 0.5, n / 2, 1),
                    sample_correlated_gaussians(3, 0.6, n / 2, 2));
}

void BM_Gram(benchmark::State& state) {
  const Dataset a = sample_correlated_gaussians(3, 0.5, state.range(0), 3);
  const Dataset b = sample_correlated_gaussians(3, 0.5, 256, 4);
  const GaussianKernel k(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gram(k, a, b));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 256);
}

void BM_GramSerial(benchmark::State& state) {
  const Dataset a = sample_correlated_gaussians(3, 0.5, state.range(0), 3);
  const Dataset b = sample_correlated_gaussians(3, 0.5, 256, 4);
  const GaussianKernel k(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gram_serial(k, a, b));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 256);
}

template <auto Statistics>
void BM_Permuted(benchmark::State& state) {
  const PooledData data = pooled(state.range(0));
  const NystromMap map = build_nystrom(sample_landmarks_uniform(data.pooled(), 64, 5), GaussianKernel(1.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Statistics(data, map, 199, 6));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 200);
}

}  // namespace

BENCHMARK(BM_Gram)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Permuted<permuted_statistics>)
    ->Name("BM_PermutedStatistics")
    ->RangeMultiplier(2)->Range(2000, 16000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Permuted<permuted_statistics_serial>)
    ->Name("BM_PermutedStatisticsSerial")
    ->RangeMultiplier(2)->Range(2000, 16000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
