#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "biasbench/cluster.hpp"
#include "biasbench/rng.hpp"

namespace {

Eigen::MatrixXd random_points(int n, int f, std::uint64_t seed) {
  biasbench::Rng rng(seed);
  Eigen::MatrixXd x(n, f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) x(i, j) = rng.normal();
  }
  return x;
}

void BM_PairwiseEuclidean(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = random_points(n, 8, biasbench::seed_tag("bench-pairwise"));
  for (auto _ : state) {
    auto d = biasbench::pairwise_euclidean(x);
    benchmark::DoNotOptimize(d.d.data());
  }
  state.SetComplexityN(n);
}

void BM_AgglomerateSingle(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto d =
      biasbench::pairwise_euclidean(random_points(n, 8, biasbench::seed_tag("bench-single")));
  for (auto _ : state) {
    auto tree = biasbench::agglomerate(d, biasbench::Linkage::single);
    benchmark::DoNotOptimize(tree.merges.data());
  }
  state.SetComplexityN(n);
}

void BM_AgglomerateWard(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto d =
      biasbench::pairwise_euclidean(random_points(n, 8, biasbench::seed_tag("bench-ward")));
  for (auto _ : state) {
    auto tree = biasbench::agglomerate(d, biasbench::Linkage::ward);
    benchmark::DoNotOptimize(tree.merges.data());
  }
  state.SetComplexityN(n);
}

void BM_CutToK(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto tree = biasbench::agglomerate(
      biasbench::pairwise_euclidean(random_points(n, 8, biasbench::seed_tag("bench-cut"))),
      biasbench::Linkage::ward);
  for (auto _ : state) {
    auto labels = biasbench::cut_to_k(tree, 6);
    benchmark::DoNotOptimize(labels.data());
  }
  state.SetComplexityN(n);
}

}  // namespace

BENCHMARK(BM_PairwiseEuclidean)->RangeMultiplier(2)->Range(64, 1024)->Complexity();
BENCHMARK(BM_AgglomerateSingle)
    ->RangeMultiplier(2)
    ->Range(32, 512)
    ->Complexity()
    ->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AgglomerateWard)
    ->RangeMultiplier(2)
    ->Range(32, 512)
    ->Complexity()
    ->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CutToK)->RangeMultiplier(2)->Range(64, 512)->Complexity();

BENCHMARK_MAIN();
