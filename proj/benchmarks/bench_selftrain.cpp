#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <numeric>
#include <vector>

#include "biasbench/dataset.hpp"
#include "biasbench/models.hpp"
#include "biasbench/rng.hpp"
#include "biasbench/selftrain.hpp"
#include "biasbench/synth.hpp"

namespace {

// The per-class diversity step at candidate pool size s_c * d: embedding
// distances plus single-linkage clustering plus the per-cluster argmax.
// Doubling d should cost well under the quadratic-with-overhead 4.5x.
void BM_DiversityPhase(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int s_c = 6;
  const int v = 10;
  const int n = s_c * d;
  biasbench::Rng rng(biasbench::seed_tag("bench-diversity"));
  Eigen::MatrixXd embeddings(n, v);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < v; ++j) embeddings(i, j) = rng.normal();
  }
  std::vector<double> confidences(static_cast<std::size_t>(n));
  for (auto& c : confidences) c = 0.9 + 0.1 * rng.uniform();
  std::vector<int> candidates(static_cast<std::size_t>(n));
  std::iota(candidates.begin(), candidates.end(), 0);

  for (auto _ : state) {
    const auto dist = biasbench::embedding_distance(embeddings);
    auto picked = biasbench::diversify(candidates, dist.distances, confidences, s_c);
    benchmark::DoNotOptimize(picked.data());
  }
  state.SetComplexityN(n);
}

void BM_SelectCandidates(benchmark::State& state) {
  const int unlabeled = static_cast<int>(state.range(0));
  biasbench::Rng rng(biasbench::seed_tag("bench-select"));
  Eigen::MatrixXd probs(unlabeled, 2);
  for (int i = 0; i < unlabeled; ++i) {
    const double p = rng.uniform();
    probs(i, 0) = p;
    probs(i, 1) = 1.0 - p;
  }
  for (auto _ : state) {
    auto c = biasbench::select_candidates(probs, 0, 6, 10, 0.6);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetComplexityN(unlabeled);
}

struct LoopFixture {
  biasbench::Dataset labeled;
  Eigen::MatrixXd unlabeled;
};

LoopFixture loop_fixture() {
  biasbench::SynthSpec spec = biasbench::blob_fixture();
  spec.samples = 360;
  const biasbench::Dataset data =
      biasbench::make_blobs(spec, biasbench::seed_tag("bench-loop")).data;
  std::vector<int> head(60);
  std::iota(head.begin(), head.end(), 0);
  LoopFixture f{data.subset(head), data.features.bottomRows(300)};
  return f;
}

void BM_DcastLoop(benchmark::State& state) {
  const LoopFixture f = loop_fixture();
  biasbench::SelfTrainConfig cfg;
  cfg.max_iterations = 3;
  cfg.diversity = static_cast<int>(state.range(0));
  const biasbench::ModelSpec spec{biasbench::ModelKind::logreg};
  std::uint64_t run = 0;
  for (auto _ : state) {
    auto result = biasbench::dcast(spec, cfg, f.labeled, f.unlabeled,
                                   biasbench::derive_seed(biasbench::seed_tag("bench-dcast"),
                                                          run++));
    benchmark::DoNotOptimize(result.trace.records.data());
  }
}

void BM_ConventionalStLoop(benchmark::State& state) {
  const LoopFixture f = loop_fixture();
  biasbench::SelfTrainConfig cfg;
  cfg.max_iterations = 3;
  const biasbench::ModelSpec spec{biasbench::ModelKind::logreg};
  std::uint64_t run = 0;
  for (auto _ : state) {
    auto result = biasbench::conventional_st(spec, cfg, f.labeled, f.unlabeled,
                                             biasbench::derive_seed(
                                                 biasbench::seed_tag("bench-st"), run++));
    benchmark::DoNotOptimize(result.trace.records.data());
  }
}

}  // namespace

BENCHMARK(BM_DiversityPhase)
    ->RangeMultiplier(2)
    ->Range(1, 64)
    ->Complexity()
    ->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SelectCandidates)->RangeMultiplier(4)->Range(256, 16384);
BENCHMARK(BM_DcastLoop)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConventionalStLoop)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
