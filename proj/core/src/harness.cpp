#include "biasbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>

#include "biasbench/errors.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

const char* to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::supervised_no_bias: return "supervised_no_bias";
    case StrategyKind::supervised_bias: return "supervised_bias";
    case StrategyKind::st: return "st";
    case StrategyKind::cast: return "cast";
    case StrategyKind::dcast: return "dcast";
  }
  return "?";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
  if (name == "supervised_no_bias") return StrategyKind::supervised_no_bias;
  if (name == "supervised_bias") return StrategyKind::supervised_bias;
  if (name == "st") return StrategyKind::st;
  if (name == "cast") return StrategyKind::cast;
  if (name == "dcast") return StrategyKind::dcast;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

std::string StrategySpec::id() const {
  if (kind == StrategyKind::dcast) return "dcast" + std::to_string(diversity);
  return to_string(kind);
}

void BenchmarkConfig::validate() const {
  plan.validate();
  bias.validate();
  if (seeds_per_run < 1) throw std::invalid_argument("seeds_per_run must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (dataset_id.empty() || dataset_id.find_first_of(",\"\n") != std::string::npos) {
    throw std::invalid_argument("dataset id must be non-empty and free of ',', '\"', newline");
  }
  std::vector<std::string> ids;
  for (const StrategySpec& s : strategies) {
    if (s.kind == StrategyKind::dcast && s.diversity < 1) {
      throw std::invalid_argument("dcast diversity must be >= 1");
    }
    ids.push_back(s.id());
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::invalid_argument("duplicate strategy");
  }
  if (!strategies.empty()) {
    if (models.empty()) throw std::invalid_argument("strategies need at least one model");
    std::vector<int> kinds;
    for (const ModelSpec& m : models) {
      m.validate();
      kinds.push_back(static_cast<int>(m.kind));
    }
    std::sort(kinds.begin(), kinds.end());
    if (std::adjacent_find(kinds.begin(), kinds.end()) != kinds.end()) {
      throw std::invalid_argument("duplicate model kind");
    }
  }
}

void to_json(nlohmann::json& j, const BiasSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)},
                     {"per_class", spec.per_class},
                     {"strength", spec.strength},
                     {"total", spec.total}};
}

void to_json(nlohmann::json& j, const SplitPlan& plan) {
  j = nlohmann::json{{"test_fraction", plan.test_fraction},
                     {"labeled_fraction", plan.labeled_fraction},
                     {"runs", plan.runs},
                     {"seed", plan.seed}};
}

void to_json(nlohmann::json& j, const SelfTrainConfig& cfg) {
  j = nlohmann::json{{"max_iterations", cfg.max_iterations},
                     {"samples_per_iteration", cfg.samples_per_iteration},
                     {"confidence_threshold", cfg.confidence_threshold},
                     {"diversity", cfg.diversity},
                     {"class_ratio_mode", to_string(cfg.class_ratio_mode)},
                     {"rf_threshold_percentile", cfg.rf_threshold_percentile},
                     {"patience", cfg.patience},
                     {"validation_fraction", cfg.validation_fraction}};
}

nlohmann::json ShiftResult::to_json() const {
  return nlohmann::json{{"run", run},
                        {"selection", selection},
                        {"class", class_name},
                        {"statistic", ks.statistic},
                        {"p_value", ks.p_value},
                        {"n_selected", ks.n1},
                        {"n_all", ks.n2}};
}

nlohmann::json CellResult::to_json(bool include_traces) const {
  nlohmann::json j{{"run", run},
                   {"strategy", strategy},
                   {"model", model},
                   {"median_accuracy", median_accuracy},
                   {"seed_accuracies", seed_accuracies},
                   {"failed", failed},
                   {"error", error}};
  if (include_traces) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SelfTrainTrace& t : traces) arr.push_back(t.to_json());
    j["traces"] = std::move(arr);
  }
  return j;
}

nlohmann::json Comparison::to_json() const {
  return nlohmann::json{{"strategy", strategy}, {"model", model},     {"baseline", baseline},
                        {"p_value", p_value},   {"n_pairs", n_pairs}, {"computed", computed},
                        {"note", note}};
}

std::vector<double> RunReport::run_medians(const std::string& strategy,
                                           const std::string& model) const {
  std::vector<double> out(static_cast<std::size_t>(plan.runs),
                          std::numeric_limits<double>::quiet_NaN());
  for (const CellResult& cell : cells) {
    if (cell.strategy == strategy && cell.model == model && cell.run >= 0 &&
        cell.run < plan.runs) {
      out[static_cast<std::size_t>(cell.run)] = cell.median_accuracy;
    }
  }
  return out;
}

nlohmann::json RunReport::to_json(bool include_traces) const {
  nlohmann::json j;
  j["dataset"] = dataset_id;
  j["bias"] = bias;
  j["plan"] = plan;
  j["seeds_per_run"] = seeds_per_run;
  j["class_names"] = class_names;
  j["shifts"] = nlohmann::json::array();
  for (const ShiftResult& s : shifts) j["shifts"].push_back(s.to_json());
  j["cells"] = nlohmann::json::array();
  for (const CellResult& c : cells) j["cells"].push_back(c.to_json(include_traces));
  j["comparisons"] = nlohmann::json::array();
  for (const Comparison& c : comparisons) j["comparisons"].push_back(c.to_json());
  j["failures"] = failure_count;
  return j;
}

std::string RunReport::to_csv() const {
  std::string out = "dataset,bias,strategy,model,run,median_accuracy\n";
  for (const CellResult& cell : cells) {
    out += dataset_id;
    out += ',';
    out += to_string(bias.kind);
    out += ',';
    out += cell.strategy;
    out += ',';
    out += cell.model;
    out += ',';
    out += std::to_string(cell.run);
    out += ',';
    if (std::isnan(cell.median_accuracy)) {
      out += "nan";
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", cell.median_accuracy);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void run_parallel(int n_tasks, int n_threads, const std::function<void(int)>& fn) {
  if (n_tasks <= 0) return;
  const int workers = std::max(1, std::min(n_threads, n_tasks));
  if (workers == 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto drain = [&next, n_tasks, &fn] {
    for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
  for (std::thread& t : pool) t.join();
}

namespace {

// Uniform per-class draw matching the given selection sizes; with equal
// per-class counts this reproduces random_subsample's streams exactly.
Selection matching_random(const Dataset& data, const std::vector<int>& per_class,
                          std::uint64_t seed) {
  const auto by_class = data.rows_by_class();
  Selection out;
  out.per_class = per_class;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& rows = by_class[c];
    const int want = per_class[c];
    if (want == 0) continue;
    if (want > static_cast<int>(rows.size())) {
      throw InfeasibleDataError("class '" + data.class_names[c] + "' has " +
                                std::to_string(rows.size()) + " rows, needs " +
                                std::to_string(want));
    }
    Rng rng(derive_seed(seed, seed_tag("class"), static_cast<std::uint64_t>(c)));
    for (int pos : rng.sample_without_replacement(static_cast<int>(rows.size()), want)) {
      out.indices.push_back(rows[static_cast<std::size_t>(pos)]);
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

struct RunContext {
  bool failed = false;
  std::string error;
  Dataset biased;
  Dataset matched;
  Eigen::MatrixXd unlabeled;
};

void append_shifts(RunReport& report, const Dataset& labeled, const Selection& sel,
                   int run, const char* tag) {
  const std::vector<ShiftSample> samples = selection_shift(labeled, sel);
  for (std::size_t c = 0; c < samples.size(); ++c) {
    if (samples[c].selected.empty() || samples[c].all.empty()) continue;
    ShiftResult shift;
    shift.run = run;
    shift.selection = tag;
    shift.class_name = labeled.class_names[c];
    shift.ks = ks_two_sample(samples[c].selected, samples[c].all);
    report.shifts.push_back(std::move(shift));
  }
}

bool is_selftrain(StrategyKind kind) {
  return kind == StrategyKind::st || kind == StrategyKind::cast || kind == StrategyKind::dcast;
}

CellResult run_cell(const BenchmarkConfig& cfg, const RunContext& ctx, const Dataset& test,
                    int run, const StrategySpec& strat, const ModelSpec& mspec) {
  CellResult cell;
  cell.run = run;
  cell.strategy = strat.id();
  cell.model = to_string(mspec.kind);
  if (ctx.failed) {
    cell.failed = true;
    cell.error = ctx.error;
    cell.median_accuracy = std::numeric_limits<double>::quiet_NaN();
    return cell;
  }
  try {
    for (int j = 0; j < cfg.seeds_per_run; ++j) {
      const std::uint64_t seed =
          derive_seed(cfg.plan.seed, seed_tag("cell"), static_cast<std::uint64_t>(run),
                      seed_tag(cell.model), static_cast<std::uint64_t>(j));
      std::unique_ptr<TrainedModel> model;
      SelfTrainConfig engine = cfg.selftrain;
      switch (strat.kind) {
        case StrategyKind::supervised_no_bias:
          model = fit(mspec, ctx.matched.features, ctx.matched.labels, seed);
          break;
        case StrategyKind::supervised_bias:
          model = fit(mspec, ctx.biased.features, ctx.biased.labels, seed);
          break;
        case StrategyKind::st: {
          SelfTrainResult result = conventional_st(mspec, engine, ctx.biased, ctx.unlabeled, seed);
          model = std::move(result.model);
          if (cfg.keep_traces) cell.traces.push_back(std::move(result.trace));
          break;
        }
        case StrategyKind::cast:
        case StrategyKind::dcast: {
          engine.diversity = strat.kind == StrategyKind::cast ? 1 : strat.diversity;
          SelfTrainResult result = dcast(mspec, engine, ctx.biased, ctx.unlabeled, seed);
          model = std::move(result.model);
          if (cfg.keep_traces) cell.traces.push_back(std::move(result.trace));
          break;
        }
      }
      cell.seed_accuracies.push_back(accuracy(*model, test.features, test.labels));
    }
    cell.median_accuracy = median(cell.seed_accuracies);
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
    cell.seed_accuracies.clear();
    cell.traces.clear();
    cell.median_accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return cell;
}

}  // namespace

RunReport run_benchmark(const Dataset& data, const BenchmarkConfig& cfg) {
  data.validate();
  cfg.validate();
  bool wants_selftrain = false;
  for (const StrategySpec& s : cfg.strategies) wants_selftrain |= is_selftrain(s.kind);
  if (wants_selftrain) cfg.selftrain.validate(data.n_classes());

  const SplitIndices test_split = stratified_split_indices(
      data, cfg.plan.test_fraction, derive_seed(cfg.plan.seed, seed_tag("test")));
  StandardizeResult standardized =
      standardize(data.subset(test_split.rest), {data.subset(test_split.part)});
  const Dataset& train = standardized.train;
  const Dataset& test = standardized.rest.front();

  const std::vector<RunSplit> runs = make_runs(train, cfg.plan);

  RunReport report;
  report.dataset_id = cfg.dataset_id;
  report.bias = cfg.bias;
  report.plan = cfg.plan;
  report.seeds_per_run = cfg.seeds_per_run;
  report.class_names = data.class_names;

  std::vector<RunContext> contexts(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    RunContext& ctx = contexts[r];
    const Dataset labeled = train.subset(runs[r].labeled);
    ctx.unlabeled.resize(static_cast<int>(runs[r].unlabeled.size()), train.n_features());
    for (std::size_t i = 0; i < runs[r].unlabeled.size(); ++i) {
      ctx.unlabeled.row(static_cast<int>(i)) = train.features.row(runs[r].unlabeled[i]);
    }
    try {
      const Selection biased = apply_bias(
          labeled, cfg.bias,
          derive_seed(cfg.plan.seed, seed_tag("bias"), static_cast<std::uint64_t>(r)));
      const Selection matched = matching_random(
          labeled, biased.per_class,
          derive_seed(cfg.plan.seed, seed_tag("random"), static_cast<std::uint64_t>(r)));
      append_shifts(report, labeled, biased, static_cast<int>(r), "bias");
      append_shifts(report, labeled, matched, static_cast<int>(r), "random");
      ctx.biased = labeled.subset(biased.indices);
      ctx.matched = labeled.subset(matched.indices);
    } catch (const std::exception& e) {
      ctx.failed = true;
      ctx.error = e.what();
    }
  }

  struct Task {
    int run;
    int strategy;
    int model;
  };
  std::vector<Task> tasks;
  for (int r = 0; r < static_cast<int>(runs.size()); ++r) {
    for (int s = 0; s < static_cast<int>(cfg.strategies.size()); ++s) {
      for (int m = 0; m < static_cast<int>(cfg.models.size()); ++m) {
        tasks.push_back({r, s, m});
      }
    }
  }
  report.cells.resize(tasks.size());
  run_parallel(static_cast<int>(tasks.size()), cfg.threads, [&](int t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    report.cells[static_cast<std::size_t>(t)] =
        run_cell(cfg, contexts[static_cast<std::size_t>(task.run)], test, task.run,
                 cfg.strategies[static_cast<std::size_t>(task.strategy)],
                 cfg.models[static_cast<std::size_t>(task.model)]);
  });

  for (const CellResult& cell : report.cells) report.failure_count += cell.failed;

  const bool has_baseline =
      std::any_of(cfg.strategies.begin(), cfg.strategies.end(),
                  [](const StrategySpec& s) { return s.kind == StrategyKind::supervised_bias; });
  if (has_baseline) {
    for (const StrategySpec& strat : cfg.strategies) {
      if (strat.kind == StrategyKind::supervised_bias) continue;
      for (const ModelSpec& mspec : cfg.models) {
        Comparison comp;
        comp.strategy = strat.id();
        comp.model = to_string(mspec.kind);
        const std::vector<double> xs = report.run_medians(comp.strategy, comp.model);
        const std::vector<double> ys = report.run_medians("supervised_bias", comp.model);
        std::vector<double> x;
        std::vector<double> y;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          if (!std::isnan(xs[i]) && !std::isnan(ys[i])) {
            x.push_back(xs[i]);
            y.push_back(ys[i]);
          }
        }
        comp.n_pairs = static_cast<int>(x.size());
        if (comp.n_pairs == 0) {
          comp.note = "no complete pairs";
        } else {
          try {
            const WilcoxonResult w = wilcoxon_one_sided(x, y, Alternative::greater);
            // Too few informative pairs to ever reach significance; report
            // the gap instead of a meaningless p-value. All-zero differences
            // stay a computed p = 1.
            if (w.n_nonzero > 0 && w.n_nonzero < 5) {
              comp.note = "wilcoxon: fewer than five nonzero differences";
            } else {
              comp.p_value = w.p_value;
              comp.computed = true;
            }
          } catch (const std::exception& e) {
            comp.note = e.what();
          }
        }
        report.comparisons.push_back(std::move(comp));
      }
    }
  }
  return report;
}

}  // namespace biasbench
