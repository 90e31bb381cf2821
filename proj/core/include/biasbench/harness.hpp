#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "biasbench/bias.hpp"
#include "biasbench/dataset.hpp"
#include "biasbench/models.hpp"
#include "biasbench/selftrain.hpp"
#include "biasbench/stats.hpp"

namespace biasbench {

enum class StrategyKind { supervised_no_bias, supervised_bias, st, cast, dcast };

const char* to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& name);

struct StrategySpec {
  StrategyKind kind = StrategyKind::supervised_bias;
  int diversity = 10;  // dcast only

  std::string id() const;  // "supervised_bias", "st", "cast", "dcast10", ...
};

struct BenchmarkConfig {
  SplitPlan plan;
  BiasSpec bias;
  std::vector<StrategySpec> strategies;  // may be empty: shift analysis only
  std::vector<ModelSpec> models;
  SelfTrainConfig selftrain;  // engine knobs shared by st/cast/dcast
  int seeds_per_run = 10;
  int threads = 1;
  bool keep_traces = false;
  std::string dataset_id = "dataset";

  void validate() const;
};

// Distribution-shift test of one selection against its class, for one run.
struct ShiftResult {
  int run = 0;
  std::string selection;  // "bias" or "random"
  std::string class_name;
  KsResult ks;

  nlohmann::json to_json() const;
};

// One (run, strategy, model) cell: the median test accuracy of
// seeds_per_run independently seeded trainings.
struct CellResult {
  int run = 0;
  std::string strategy;
  std::string model;
  std::vector<double> seed_accuracies;
  double median_accuracy = 0.0;  // NaN when failed
  bool failed = false;
  std::string error;
  std::vector<SelfTrainTrace> traces;  // one per seed when traces are kept

  nlohmann::json to_json(bool include_traces) const;
};

// Paired one-sided signed-rank test of a strategy against the
// supervised-on-biased baseline over complete run pairs.
struct Comparison {
  std::string strategy;
  std::string model;
  std::string baseline = "supervised_bias";
  double p_value = 1.0;
  int n_pairs = 0;
  bool computed = false;
  std::string note;  // set when the test could not run

  nlohmann::json to_json() const;
};

struct RunReport {
  std::string dataset_id;
  BiasSpec bias;
  SplitPlan plan;
  int seeds_per_run = 0;
  std::vector<std::string> class_names;
  std::vector<ShiftResult> shifts;
  std::vector<CellResult> cells;
  std::vector<Comparison> comparisons;
  int failure_count = 0;

  // Per-run median accuracies for one (strategy, model), NaN where the cell
  // failed or does not exist.
  std::vector<double> run_medians(const std::string& strategy, const std::string& model) const;

  nlohmann::json to_json(bool include_traces = false) const;
  std::string to_csv() const;  // flat: dataset,bias,strategy,model,run,median_accuracy
};

// The full protocol: one test split, then per run a fresh labeled/unlabeled
// partition, a biased and a size-matched random selection of the labeled
// pool, per-class shift tests of both, and every (strategy, model) trained
// seeds_per_run times and scored on the fixed test set. Failures are
// recorded in place of results, never thrown. Deterministic for a given
// (dataset, config), whatever the thread count.
RunReport run_benchmark(const Dataset& data, const BenchmarkConfig& cfg);

// Runs fn(0..n_tasks-1) on up to n_threads workers. fn must not throw.
void run_parallel(int n_tasks, int n_threads, const std::function<void(int)>& fn);

void to_json(nlohmann::json& j, const BiasSpec& spec);
void to_json(nlohmann::json& j, const SplitPlan& plan);
void to_json(nlohmann::json& j, const SelfTrainConfig& cfg);

}  // namespace biasbench
