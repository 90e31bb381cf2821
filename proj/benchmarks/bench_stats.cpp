#include <benchmark/benchmark.h>

#include <vector>

#include "biasbench/rng.hpp"
#include "biasbench/stats.hpp"

namespace {

std::vector<double> normal_sample(std::size_t n, std::uint64_t seed) {
  biasbench::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

void BM_KsTwoSample(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto a = normal_sample(n, biasbench::seed_tag("bench-ks-a"));
  const auto b = normal_sample(n, biasbench::seed_tag("bench-ks-b"));
  for (auto _ : state) {
    auto r = biasbench::ks_two_sample(a, b);
    benchmark::DoNotOptimize(r.statistic);
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}

// Worst case of the exact branch: 2^15 sign patterns enumerated.
void BM_WilcoxonExact(benchmark::State& state) {
  const auto x = normal_sample(15, biasbench::seed_tag("bench-wx-x"));
  const auto y = normal_sample(15, biasbench::seed_tag("bench-wx-y"));
  for (auto _ : state) {
    auto r = biasbench::wilcoxon_one_sided(x, y, biasbench::Alternative::greater);
    benchmark::DoNotOptimize(r.p_value);
  }
}

void BM_WilcoxonAsymptotic(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto x = normal_sample(n, biasbench::seed_tag("bench-wa-x"));
  const auto y = normal_sample(n, biasbench::seed_tag("bench-wa-y"));
  for (auto _ : state) {
    auto r = biasbench::wilcoxon_one_sided(x, y, biasbench::Alternative::greater);
    benchmark::DoNotOptimize(r.p_value);
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}

void BM_Median(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto v = normal_sample(n, biasbench::seed_tag("bench-median"));
  for (auto _ : state) {
    benchmark::DoNotOptimize(biasbench::median(v));
  }
  state.SetComplexityN(static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_KsTwoSample)->RangeMultiplier(4)->Range(256, 65536)->Complexity();
BENCHMARK(BM_WilcoxonExact)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WilcoxonAsymptotic)->RangeMultiplier(4)->Range(256, 16384)->Complexity();
BENCHMARK(BM_Median)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

BENCHMARK_MAIN();
