#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "biasbench/bias.hpp"
#include "biasbench/dataset.hpp"
#include "biasbench/errors.hpp"
#include "biasbench/harness.hpp"
#include "biasbench/models.hpp"
#include "biasbench/rng.hpp"
#include "biasbench/selftrain.hpp"
#include "biasbench/stats.hpp"
#include "biasbench/synth.hpp"

namespace {

using namespace biasbench;
namespace fs = std::filesystem;
using nlohmann::json;

std::string config_scalar(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (!v.is_number() && !v.is_boolean()) {
    throw std::invalid_argument("config key '" + key + "' must be a scalar or a flat array");
  }
  return v.dump();
}

std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// Keys are the long flag names. Files opening with '{' are a flat JSON
// object (arrays for repeatable flags); anything else is key=value lines
// with '#' comments. "cmd" is skipped so the config block embedded in any
// output can be replayed as-is.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::vector<std::pair<std::string, std::string>> items;
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json parsed;
    try {
      parsed = json::parse(text);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config file '" + path + "': " + e.what());
    }
    for (const auto& [key, value] : parsed.items()) {
      if (value.is_array()) {
        for (const auto& v : value) items.emplace_back(key, config_scalar(key, v));
      } else {
        items.emplace_back(key, config_scalar(key, value));
      }
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::size_t start = line.find_first_not_of(" \t");
      if (start == std::string::npos || line[start] == '#') continue;
      const std::size_t eq = line.find('=', start);
      if (eq == std::string::npos) {
        throw std::invalid_argument("config file '" + path + "' line " +
                                    std::to_string(line_no) + ": expected key=value");
      }
      const auto trim = [](std::string s) {
        const std::size_t b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(" \t") - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) {
        throw std::invalid_argument("config file '" + path + "' line " +
                                    std::to_string(line_no) + ": empty key");
      }
      items.emplace_back(key, strip_quotes(trim(line.substr(eq + 1))));
    }
  }
  return items;
}

// Resolves --config before CLI11 parses: config values for keys the user
// did not pass are appended as ordinary flags, so explicit flags always win
// and the env-var seed default stays weakest. CLI11 only reads config files
// on the top-level app, never on a parsed subcommand, hence this pass.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::vector<std::string> out;
  std::vector<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw std::invalid_argument("--config needs a file path");
      path = args[++i];
      continue;
    }
    if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
      continue;
    }
    if (a.rfind("--", 0) == 0 && a.size() > 2) {
      given.push_back(a.substr(2, a.find('=') - 2));
    }
    out.push_back(a);
  }
  if (path.empty()) return out;
  for (const auto& [key, value] : read_config_file(path)) {
    if (key == "cmd") continue;
    if (key == "config") throw std::invalid_argument("config files cannot set 'config'");
    if (std::find(given.begin(), given.end(), key) != given.end()) continue;
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

// FNV-1a over the canonical dump (keys sorted by nlohmann::json), so the
// hash identifies the experiment regardless of flag order or source.
std::string config_hash(const json& resolved) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(seed_tag(resolved.dump())));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

fs::path prepare_out_dir(const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

// Documentation only: expand_config consumes --config before CLI11 runs.
void attach_config(CLI::App* cmd) {
  static std::string ignored;
  cmd->add_option("--config", ignored,
                  "config file, key=value lines or a flat JSON object; flags take precedence");
}

struct DataArgs {
  std::string dataset;
  std::string label_col = "label";
  std::vector<std::string> categorical;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--dataset", a.dataset, "input CSV with a header row")->required();
  cmd->add_option("--label-col", a.label_col, "label column name")->capture_default_str();
  cmd->add_option("--categorical", a.categorical,
                  "categorical feature columns, expanded to indicator columns")
      ->delimiter(',');
}

void put_data(json& cfg, const DataArgs& a) {
  cfg["dataset"] = a.dataset;
  cfg["label-col"] = a.label_col;
  cfg["categorical"] = a.categorical;
}

struct BiasArgs {
  std::string kind = "hierarchy";
  int k = 30;
  double b = 0.9;
  int n_total = 0;
};

void add_bias_options(CLI::App* cmd, BiasArgs& a, bool allow_none) {
  std::vector<std::string> kinds = {"hierarchy", "random", "joint", "dirichlet"};
  if (allow_none) kinds.push_back("none");
  cmd->add_option("--bias", a.kind, "bias induction method")
      ->check(CLI::IsMember(kinds))
      ->capture_default_str();
  cmd->add_option("--k", a.k, "rows kept per class (hierarchy, random)")->capture_default_str();
  cmd->add_option("--b", a.b, "share of k drawn from the dense cluster (hierarchy)")
      ->capture_default_str();
  cmd->add_option("--n-total", a.n_total, "rows kept overall (dirichlet); 0 means k * classes")
      ->capture_default_str();
}

void put_bias(json& cfg, const BiasArgs& a) {
  cfg["bias"] = a.kind;
  cfg["k"] = a.k;
  cfg["b"] = a.b;
  cfg["n-total"] = a.n_total;
}

BiasSpec to_bias_spec(const BiasArgs& a) {
  BiasSpec spec;
  spec.kind = bias_kind_from_string(a.kind);
  spec.per_class = a.k;
  spec.strength = a.b;
  spec.total = a.n_total;
  return spec;
}

struct EngineArgs {
  int d = 10;
  int s = 0;
  double t = 0.9;
  int m = 100;
};

void add_engine_options(CLI::App* cmd, EngineArgs& a) {
  cmd->add_option("--d", a.d, "diversity strength for dcast")->capture_default_str();
  cmd->add_option("--s", a.s, "pseudo-labels added per iteration; 0 means 3 per class")
      ->capture_default_str();
  cmd->add_option("--t", a.t, "pseudo-label confidence threshold")->capture_default_str();
  cmd->add_option("--m", a.m, "self-training iteration cap")->capture_default_str();
}

void put_engine(json& cfg, const EngineArgs& a) {
  cfg["d"] = a.d;
  cfg["s"] = a.s;
  cfg["t"] = a.t;
  cfg["m"] = a.m;
}

SelfTrainConfig to_engine(const EngineArgs& a) {
  SelfTrainConfig cfg;
  cfg.max_iterations = a.m;
  cfg.samples_per_iteration = a.s;
  cfg.confidence_threshold = a.t;
  return cfg;  // diversity comes from the strategy
}

struct PlanArgs {
  double test_fraction = 0.2;
  double labeled_fraction = 0.3;
};

void add_plan_options(CLI::App* cmd, PlanArgs& a) {
  cmd->add_option("--test-fraction", a.test_fraction, "held-out test share")
      ->capture_default_str();
  cmd->add_option("--labeled-fraction", a.labeled_fraction, "labeled share of the training pool")
      ->capture_default_str();
}

void put_plan(json& cfg, const PlanArgs& a) {
  cfg["test-fraction"] = a.test_fraction;
  cfg["labeled-fraction"] = a.labeled_fraction;
}

json selection_json(const BiasSpec& spec, std::uint64_t seed, const Selection& sel) {
  json j;
  j["kind"] = to_string(spec.kind);
  j["params"] = {
      {"per_class", spec.per_class}, {"strength", spec.strength}, {"total", spec.total}};
  j["seed"] = seed;
  j["indices"] = sel.indices;
  j["per_class_counts"] = sel.per_class;
  if (!sel.from_cluster.empty()) j["from_cluster"] = sel.from_cluster;
  return j;
}

int run_synth(const std::string& out, int samples, std::uint64_t seed) {
  json cfg;
  cfg["cmd"] = "synth";
  cfg["samples"] = samples;
  cfg["seed"] = seed;
  const std::string hash = config_hash(cfg);

  SynthSpec spec = blob_fixture();
  spec.samples = samples;
  const SynthData made = make_blobs(spec, seed);

  std::ostringstream body;
  body << "# config_hash=" << hash << "\n# config=" << cfg.dump() << "\n";
  write_csv(made.data, body, "label");
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, body.str());
  std::cout << "wrote " << out << " (" << made.data.n_samples() << " rows, "
            << made.data.n_features() << " features, " << made.data.n_classes() << " classes)\n";
  return 0;
}

int run_induce(const DataArgs& data_args, const BiasArgs& bias_args, std::uint64_t seed,
               const std::string& out) {
  json cfg;
  cfg["cmd"] = "induce";
  put_data(cfg, data_args);
  put_bias(cfg, bias_args);
  cfg["seed"] = seed;
  const std::string hash = config_hash(cfg);

  BiasSpec spec = to_bias_spec(bias_args);
  spec.validate();

  const Dataset data = load_csv(data_args.dataset, data_args.label_col, data_args.categorical);
  const StandardizeResult standardized = standardize(data, {});
  const Selection sel = apply_bias(standardized.train, spec, seed);

  json sel_json = selection_json(spec, seed, sel);
  sel_json["classes"] = data.class_names;
  sel_json["config"] = cfg;
  sel_json["config_hash"] = hash;

  const std::vector<ShiftSample> samples = selection_shift(standardized.train, sel);
  json classes = json::array();
  for (std::size_t c = 0; c < samples.size(); ++c) {
    if (samples[c].selected.empty() || samples[c].all.empty()) continue;
    const KsResult ks = ks_two_sample(samples[c].selected, samples[c].all);
    classes.push_back({{"class", data.class_names[c]},
                       {"statistic", ks.statistic},
                       {"p_value", ks.p_value},
                       {"n_selected", ks.n1},
                       {"n_all", ks.n2}});
    std::printf("class %s: KS=%.4f p=%.3g (selected %d of %d)\n", data.class_names[c].c_str(),
                ks.statistic, ks.p_value, ks.n1, ks.n2);
  }
  const json ks_json = {{"config", cfg}, {"config_hash", hash}, {"classes", classes}};

  const fs::path dir = prepare_out_dir(out);
  write_text(dir / "selection.json", sel_json.dump(2) + "\n");
  write_text(dir / "ks.json", ks_json.dump(2) + "\n");
  std::cout << "wrote " << (dir / "selection.json").string() << ", " << (dir / "ks.json").string()
            << "\n";
  return 0;
}

struct TrainArgs {
  DataArgs data;
  BiasArgs bias;
  EngineArgs engine;
  PlanArgs plan;
  std::string strategy = "dcast";
  std::string model = "logreg";
  std::uint64_t seed = 0;
  std::string out = ".";
};

int run_train(const TrainArgs& a) {
  json cfg;
  cfg["cmd"] = "train";
  put_data(cfg, a.data);
  put_bias(cfg, a.bias);
  put_engine(cfg, a.engine);
  put_plan(cfg, a.plan);
  cfg["strategy"] = a.strategy;
  cfg["model"] = a.model;
  cfg["seed"] = a.seed;
  const std::string hash = config_hash(cfg);
  const fs::path dir = prepare_out_dir(a.out);

  try {
    ModelSpec mspec;
    mspec.kind = model_kind_from_string(a.model);
    mspec.validate();

    SplitPlan plan;
    plan.test_fraction = a.plan.test_fraction;
    plan.labeled_fraction = a.plan.labeled_fraction;
    plan.runs = 1;
    plan.seed = a.seed;
    plan.validate();

    const Dataset data = load_csv(a.data.dataset, a.data.label_col, a.data.categorical);
    const SplitIndices tsplit = stratified_split_indices(
        data, plan.test_fraction, derive_seed(plan.seed, seed_tag("test")));
    const StandardizeResult standardized =
        standardize(data.subset(tsplit.rest), {data.subset(tsplit.part)});
    const Dataset& train = standardized.train;
    const Dataset& test = standardized.rest.front();

    const RunSplit rs = make_runs(train, plan).front();
    Dataset labeled = train.subset(rs.labeled);
    Eigen::MatrixXd unlabeled(static_cast<int>(rs.unlabeled.size()), train.n_features());
    for (std::size_t i = 0; i < rs.unlabeled.size(); ++i) {
      unlabeled.row(static_cast<int>(i)) = train.features.row(rs.unlabeled[i]);
    }

    // All row lists in the outputs refer to data rows of the input CSV.
    std::vector<int> labeled_rows;
    std::vector<int> unlabeled_rows;
    for (int i : rs.labeled) labeled_rows.push_back(tsplit.rest[static_cast<std::size_t>(i)]);
    for (int i : rs.unlabeled) unlabeled_rows.push_back(tsplit.rest[static_cast<std::size_t>(i)]);

    json sel_json;
    if (a.bias.kind != "none") {
      BiasSpec bspec = to_bias_spec(a.bias);
      const std::uint64_t bias_seed = derive_seed(plan.seed, seed_tag("bias"), std::uint64_t{0});
      const Selection sel = apply_bias(labeled, bspec, bias_seed);
      std::vector<int> rows;
      for (int i : sel.indices) rows.push_back(labeled_rows[static_cast<std::size_t>(i)]);
      sel_json = selection_json(bspec, bias_seed, sel);
      sel_json.erase("indices");
      sel_json["rows"] = rows;
      labeled = labeled.subset(sel.indices);
    }

    // Same derivation as a benchmark cell (run 0, first seed), and
    // strategy-independent, so cast and dcast --d 1 train identically.
    const std::uint64_t train_seed =
        derive_seed(plan.seed, seed_tag("cell"), std::uint64_t{0}, seed_tag(to_string(mspec.kind)),
                    std::uint64_t{0});

    std::unique_ptr<TrainedModel> model;
    SelfTrainTrace trace;
    if (a.strategy == "supervised") {
      model = fit(mspec, labeled.features, labeled.labels, train_seed);
    } else {
      SelfTrainConfig engine = to_engine(a.engine);
      engine.diversity = a.strategy == "dcast" ? a.engine.d : 1;
      engine.validate(labeled.n_classes());
      SelfTrainResult result =
          a.strategy == "st" ? conventional_st(mspec, engine, labeled, unlabeled, train_seed)
                             : dcast(mspec, engine, labeled, unlabeled, train_seed);
      model = std::move(result.model);
      trace = std::move(result.trace);
    }
    const double acc = accuracy(*model, test.features, test.labels);

    const json model_json = {{"config", cfg}, {"config_hash", hash}, {"model", model->to_json()}};
    write_text(dir / "model.json", model_json.dump() + "\n");

    const json trace_head = {{"config_hash", hash},
                             {"best_iteration", trace.best_iteration},
                             {"records", trace.records.size()}};
    write_text(dir / "trace.jsonl", trace_head.dump() + "\n" + trace.to_jsonl());

    json result;
    result["config"] = cfg;
    result["config_hash"] = hash;
    result["failed"] = false;
    result["test_accuracy"] = acc;
    result["best_iteration"] = trace.best_iteration;
    result["iterations"] = trace.records.size();
    result["rows"] = {{"train", train.n_samples()},
                      {"test", test.n_samples()},
                      {"labeled", labeled.n_samples()},
                      {"unlabeled", static_cast<int>(rs.unlabeled.size())}};
    result["split"] = {
        {"test", tsplit.part}, {"labeled", labeled_rows}, {"unlabeled", unlabeled_rows}};
    if (!sel_json.is_null()) result["selection"] = sel_json;
    write_text(dir / "result.json", result.dump(2) + "\n");

    std::printf("strategy %s, model %s: test accuracy %.4f (%d trace records, best iteration %d)\n",
                a.strategy.c_str(), a.model.c_str(), acc,
                static_cast<int>(trace.records.size()), trace.best_iteration);
    std::cout << "wrote " << (dir / "model.json").string() << ", "
              << (dir / "trace.jsonl").string() << ", " << (dir / "result.json").string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    const json failure = {
        {"config", cfg}, {"config_hash", hash}, {"failed", true}, {"error", e.what()}};
    write_text(dir / "result.json", failure.dump(2) + "\n");
    throw;
  }
}

struct BenchArgs {
  DataArgs data;
  BiasArgs bias;
  EngineArgs engine;
  PlanArgs plan;
  std::vector<std::string> strategies = {"st", "dcast"};
  std::vector<std::string> models = {"logreg"};
  int runs = 30;
  int seeds = 10;
  int threads = 1;
  bool keep_traces = false;
  std::uint64_t seed = 0;
  std::string out = ".";
};

int run_benchmark_cmd(const BenchArgs& a) {
  json cfg;
  cfg["cmd"] = "benchmark";
  put_data(cfg, a.data);
  put_bias(cfg, a.bias);
  put_engine(cfg, a.engine);
  put_plan(cfg, a.plan);
  cfg["strategy"] = a.strategies;
  cfg["model"] = a.models;
  cfg["runs"] = a.runs;
  cfg["seeds"] = a.seeds;
  cfg["keep-traces"] = a.keep_traces;
  cfg["seed"] = a.seed;
  const std::string hash = config_hash(cfg);

  BenchmarkConfig bc;
  bc.plan.test_fraction = a.plan.test_fraction;
  bc.plan.labeled_fraction = a.plan.labeled_fraction;
  bc.plan.runs = a.runs;
  bc.plan.seed = a.seed;
  bc.bias = to_bias_spec(a.bias);
  bc.selftrain = to_engine(a.engine);
  bc.seeds_per_run = a.seeds;
  bc.threads = a.threads;
  bc.keep_traces = a.keep_traces;
  bc.dataset_id = fs::path(a.data.dataset).stem().string();

  // The supervised baselines always run; --strategy adds mitigation arms.
  bc.strategies.push_back({StrategyKind::supervised_no_bias, 0});
  bc.strategies.push_back({StrategyKind::supervised_bias, 0});
  for (const std::string& name : a.strategies) {
    if (name == "supervised") continue;
    StrategySpec spec;
    if (name == "st") {
      spec.kind = StrategyKind::st;
    } else if (name == "cast") {
      spec.kind = StrategyKind::cast;
    } else {
      spec.kind = StrategyKind::dcast;
      spec.diversity = a.engine.d;
    }
    bool seen = false;
    for (const StrategySpec& have : bc.strategies) seen = seen || have.id() == spec.id();
    if (!seen) bc.strategies.push_back(spec);
  }
  for (const std::string& name : a.models) {
    ModelSpec spec;
    spec.kind = model_kind_from_string(name);
    bool seen = false;
    for (const ModelSpec& have : bc.models) seen = seen || have.kind == spec.kind;
    if (!seen) bc.models.push_back(spec);
  }

  const Dataset data = load_csv(a.data.dataset, a.data.label_col, a.data.categorical);
  const RunReport report = run_benchmark(data, bc);

  const fs::path dir = prepare_out_dir(a.out);
  json report_json = report.to_json(a.keep_traces);
  report_json["config"] = cfg;
  report_json["config_hash"] = hash;
  write_text(dir / "report.json", report_json.dump() + "\n");
  write_text(dir / "report.csv", "# config_hash=" + hash + "\n" + report.to_csv());

  if (!report.shifts.empty()) {
    std::vector<double> bias_ks;
    std::vector<double> random_ks;
    for (const ShiftResult& s : report.shifts) {
      (s.selection == "bias" ? bias_ks : random_ks).push_back(s.ks.statistic);
    }
    if (!bias_ks.empty() && !random_ks.empty()) {
      std::printf("shift: bias KS median %.3f, random KS median %.3f (%d tests per selection)\n",
                  median(bias_ks), median(random_ks), static_cast<int>(bias_ks.size()));
    }
  }

  std::printf("%-22s %-8s %12s %14s\n", "strategy", "model", "median_acc", "p_vs_biased");
  for (const StrategySpec& strat : bc.strategies) {
    for (const ModelSpec& mspec : bc.models) {
      const std::string model_name = to_string(mspec.kind);
      std::vector<double> medians;
      for (double v : report.run_medians(strat.id(), model_name)) {
        if (!std::isnan(v)) medians.push_back(v);
      }
      char acc[32];
      if (medians.empty()) {
        std::snprintf(acc, sizeof acc, "nan");
      } else {
        std::snprintf(acc, sizeof acc, "%.4f", median(medians));
      }
      std::string p = "-";
      for (const Comparison& comp : report.comparisons) {
        if (comp.strategy != strat.id() || comp.model != model_name) continue;
        if (comp.computed) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.3g", comp.p_value);
          p = buf;
        } else {
          p = comp.note;
        }
      }
      std::printf("%-22s %-8s %12s %14s\n", strat.id().c_str(), model_name.c_str(), acc,
                  p.c_str());
    }
  }
  if (report.failure_count > 0) {
    std::printf("%d of %d cells failed\n", report.failure_count,
                static_cast<int>(report.cells.size()));
  }
  std::cout << "wrote " << (dir / "report.json").string() << ", " << (dir / "report.csv").string()
            << "\n";

  if (!report.cells.empty() && report.failure_count == static_cast<int>(report.cells.size())) {
    std::cerr << "error: every cell failed\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"induce controlled selection bias and benchmark self-training mitigation"};
  app.require_subcommand(1);

  auto* synth_cmd = app.add_subcommand("synth", "write the built-in Gaussian-blob dataset as CSV");
  std::string synth_out;
  int synth_samples = 2000;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--out", synth_out, "output CSV path")->required();
  synth_cmd->add_option("--samples", synth_samples, "rows to generate")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "generator seed")
      ->envname("BIASBENCH_SEED")
      ->capture_default_str();
  attach_config(synth_cmd);

  auto* induce_cmd =
      app.add_subcommand("induce", "apply selection bias and test the induced shift");
  DataArgs induce_data;
  BiasArgs induce_bias;
  std::uint64_t induce_seed = 0;
  std::string induce_out = ".";
  add_data_options(induce_cmd, induce_data);
  add_bias_options(induce_cmd, induce_bias, false);
  induce_cmd->add_option("--seed", induce_seed, "selection seed")
      ->envname("BIASBENCH_SEED")
      ->capture_default_str();
  induce_cmd->add_option("--out", induce_out, "output directory")->capture_default_str();
  attach_config(induce_cmd);

  auto* train_cmd =
      app.add_subcommand("train", "train one strategy on one labeled/unlabeled split");
  TrainArgs train_args;
  train_args.bias.kind = "none";
  add_data_options(train_cmd, train_args.data);
  add_bias_options(train_cmd, train_args.bias, true);
  add_engine_options(train_cmd, train_args.engine);
  add_plan_options(train_cmd, train_args.plan);
  train_cmd->add_option("--strategy", train_args.strategy, "training strategy")
      ->check(CLI::IsMember({"supervised", "st", "cast", "dcast"}))
      ->capture_default_str();
  train_cmd->add_option("--model", train_args.model, "base learner")
      ->check(CLI::IsMember({"logreg", "mlp", "forest"}))
      ->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "experiment seed")
      ->envname("BIASBENCH_SEED")
      ->capture_default_str();
  train_cmd->add_option("--out", train_args.out, "output directory")->capture_default_str();
  attach_config(train_cmd);

  auto* bench_cmd =
      app.add_subcommand("benchmark", "run the full multi-run bias and mitigation protocol");
  BenchArgs bench_args;
  add_data_options(bench_cmd, bench_args.data);
  add_bias_options(bench_cmd, bench_args.bias, false);
  add_engine_options(bench_cmd, bench_args.engine);
  add_plan_options(bench_cmd, bench_args.plan);
  bench_cmd
      ->add_option("--strategy", bench_args.strategies,
                   "mitigation strategies to run beside the supervised baselines")
      ->check(CLI::IsMember({"supervised", "st", "cast", "dcast"}))
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--model", bench_args.models, "base learners")
      ->check(CLI::IsMember({"logreg", "mlp", "forest"}))
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--runs", bench_args.runs, "labeled/unlabeled splits to evaluate")
      ->capture_default_str();
  bench_cmd->add_option("--seeds", bench_args.seeds, "trainings per cell, median-aggregated")
      ->capture_default_str();
  bench_cmd->add_option("--threads", bench_args.threads, "worker threads")
      ->capture_default_str();
  bench_cmd->add_flag("--keep-traces", bench_args.keep_traces,
                      "store self-training traces in report.json");
  bench_cmd->add_option("--seed", bench_args.seed, "experiment seed")
      ->envname("BIASBENCH_SEED")
      ->capture_default_str();
  bench_cmd->add_option("--out", bench_args.out, "output directory")->capture_default_str();
  attach_config(bench_cmd);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) return run_synth(synth_out, synth_samples, synth_seed);
    if (*induce_cmd) return run_induce(induce_data, induce_bias, induce_seed, induce_out);
    if (*train_cmd) return run_train(train_args);
    return run_benchmark_cmd(bench_args);
  } catch (const InfeasibleDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
