#include "biasbench/selftrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "biasbench/rng.hpp"
#include "biasbench/stats.hpp"

namespace biasbench {

std::string to_string(ClassRatioMode mode) {
  return mode == ClassRatioMode::preserve_labeled_ratios ? "preserve_labeled_ratios"
                                                         : "equal_per_class";
}

ClassRatioMode class_ratio_mode_from_string(const std::string& name) {
  if (name == "preserve_labeled_ratios") return ClassRatioMode::preserve_labeled_ratios;
  if (name == "equal_per_class") return ClassRatioMode::equal_per_class;
  throw std::invalid_argument("unknown class ratio mode: " + name);
}

void SelfTrainConfig::validate(int n_classes) const {
  if (n_classes < 2) throw std::invalid_argument("self-training needs at least two classes");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (samples_per_iteration < 0) {
    throw std::invalid_argument("samples_per_iteration must be non-negative");
  }
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw std::invalid_argument("confidence_threshold must lie in [0, 1]");
  }
  if (diversity < 1) throw std::invalid_argument("diversity must be at least 1");
  if (!(rf_threshold_percentile >= 0.0 && rf_threshold_percentile <= 100.0)) {
    throw std::invalid_argument("rf_threshold_percentile must lie in [0, 100]");
  }
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation_fraction must lie in (0, 1)");
  }
  if (class_ratio_mode == ClassRatioMode::equal_per_class &&
      resolved_samples(n_classes) < n_classes) {
    throw std::invalid_argument("equal_per_class needs samples_per_iteration >= class count");
  }
}

int SelfTrainConfig::resolved_samples(int n_classes) const {
  return samples_per_iteration > 0 ? samples_per_iteration : 3 * n_classes;
}

double SelfTrainConfig::resolved_rf_percentile(int n_classes) const {
  if (rf_threshold_percentile > 0.0) return rf_threshold_percentile;
  return n_classes == 2 ? 93.0 : 85.0;
}

nlohmann::json TraceRecord::to_json() const {
  nlohmann::json sel = nlohmann::json::array();
  for (const auto& s : selections) {
    sel.push_back({{"unlabeled_index", s.unlabeled_index},
                   {"class", s.assigned_class},
                   {"confidence", s.confidence}});
  }
  return {{"iteration", iteration},
          {"validation_accuracy", validation_accuracy},
          {"labeled_size", labeled_size},
          {"unlabeled_size", unlabeled_size},
          {"class_thresholds", class_thresholds},
          {"selected_per_class", selected_per_class},
          {"selections", std::move(sel)}};
}

TraceRecord TraceRecord::from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.validation_accuracy = j.at("validation_accuracy").get<double>();
  r.labeled_size = j.at("labeled_size").get<int>();
  r.unlabeled_size = j.at("unlabeled_size").get<int>();
  r.class_thresholds = j.at("class_thresholds").get<std::vector<double>>();
  r.selected_per_class = j.at("selected_per_class").get<std::vector<int>>();
  for (const auto& s : j.at("selections")) {
    r.selections.push_back({s.at("unlabeled_index").get<int>(), s.at("class").get<int>(),
                            s.at("confidence").get<double>()});
  }
  return r;
}

nlohmann::json SelfTrainTrace::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) recs.push_back(r.to_json());
  return {{"best_iteration", best_iteration}, {"records", std::move(recs)}};
}

std::string SelfTrainTrace::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

SelfTrainTrace SelfTrainTrace::from_json(const nlohmann::json& j) {
  SelfTrainTrace t;
  t.best_iteration = j.at("best_iteration").get<int>();
  for (const auto& r : j.at("records")) t.records.push_back(TraceRecord::from_json(r));
  return t;
}

double class_threshold(double t, int n_classes) {
  if (n_classes < 2) throw std::invalid_argument("class_threshold needs at least two classes");
  return std::max(t, 1.2 / static_cast<double>(n_classes));
}

std::vector<int> select_candidates(const Eigen::MatrixXd& probs, int c, int s_c, int d,
                                   double t_c) {
  if (s_c < 1) throw std::invalid_argument("select_candidates needs s_c >= 1");
  if (d < 1) throw std::invalid_argument("select_candidates needs d >= 1");
  if (c < 0 || c >= probs.cols()) throw std::invalid_argument("class out of range");

  std::vector<int> rows;
  for (int i = 0; i < probs.rows(); ++i) {
    if (argmax_class(probs.row(i)) == c && probs(i, c) > t_c) rows.push_back(i);
  }
  std::sort(rows.begin(), rows.end(), [&](int l, int r) {
    return probs(l, c) > probs(r, c) || (probs(l, c) == probs(r, c) && l < r);
  });
  const std::size_t cap = static_cast<std::size_t>(s_c) * static_cast<std::size_t>(d);
  if (rows.size() > cap) rows.resize(cap);
  return rows;
}

EmbeddingDistance embedding_distance(const Eigen::MatrixXd& embeddings) {
  if (embeddings.rows() == 0) throw std::invalid_argument("embedding_distance: empty matrix");
  const Eigen::Index n = embeddings.rows();
  const Eigen::MatrixXd gram = embeddings * embeddings.transpose();
  const double peak = gram.maxCoeff();

  EmbeddingDistance out;
  Eigen::MatrixXd d(n, n);
  d.setZero();
  if (peak == 0.0) {
    out.degenerate = true;
    d.setOnes();
    d.diagonal().setZero();
  } else {
    // Mirror the upper triangle so the matrix is exactly symmetric even if
    // the matrix product rounds gram(i,j) and gram(j,i) differently.
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = 1.0 - gram(i, j) / peak;
        d(i, j) = v;
        d(j, i) = v;
      }
    }
  }
  out.distances = DistanceMatrix::from_matrix(std::move(d), false);
  return out;
}

std::vector<int> diversify(const std::vector<int>& candidates, const DistanceMatrix& distances,
                           const std::vector<double>& confidences, int s_c) {
  if (candidates.empty()) throw std::invalid_argument("diversify: no candidates");
  if (s_c < 1) throw std::invalid_argument("diversify: s_c must be at least 1");
  if (static_cast<std::size_t>(distances.size()) != candidates.size() ||
      confidences.size() != candidates.size()) {
    throw std::invalid_argument("diversify: size mismatch");
  }
  if (candidates.size() <= static_cast<std::size_t>(s_c)) return candidates;

  const int n = static_cast<int>(candidates.size());
  std::vector<int> position(n);
  std::iota(position.begin(), position.end(), 0);
  std::sort(position.begin(), position.end(), [&](int l, int r) {
    return confidences[l] > confidences[r] ||
           (confidences[l] == confidences[r] && candidates[l] < candidates[r]);
  });

  const Dendrogram tree = agglomerate(distances, Linkage::single);
  const std::vector<int> cluster = cut_to_k(tree, s_c);

  std::vector<bool> taken(static_cast<std::size_t>(s_c), false);
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(s_c));
  for (const int p : position) {
    const int k = cluster[static_cast<std::size_t>(p)];
    if (!taken[static_cast<std::size_t>(k)]) {
      taken[static_cast<std::size_t>(k)] = true;
      chosen.push_back(candidates[static_cast<std::size_t>(p)]);
    }
  }
  return chosen;
}

std::vector<int> allocate_per_class(int s, const std::vector<double>& ratios) {
  if (s < 1) throw std::invalid_argument("allocate_per_class: budget must be positive");
  for (const double r : ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("allocate_per_class: negative ratio");
  }
  const int c = static_cast<int>(ratios.size());
  std::vector<int> shares(ratios.size(), 0);
  std::vector<std::pair<double, int>> fractional;
  int assigned = 0;
  for (int i = 0; i < c; ++i) {
    const double exact = static_cast<double>(s) * ratios[static_cast<std::size_t>(i)];
    const int whole = static_cast<int>(std::floor(exact));
    shares[static_cast<std::size_t>(i)] = whole;
    assigned += whole;
    fractional.emplace_back(exact - whole, i);
  }
  std::sort(fractional.begin(), fractional.end(), [](const auto& l, const auto& r) {
    return l.first > r.first || (l.first == r.first && l.second < r.second);
  });
  for (int i = 0; assigned < s && i < c; ++i) {
    // Remainder only flows to classes that are actually present.
    if (ratios[static_cast<std::size_t>(fractional[static_cast<std::size_t>(i)].second)] == 0.0) {
      continue;
    }
    ++shares[static_cast<std::size_t>(fractional[static_cast<std::size_t>(i)].second)];
    ++assigned;
  }

  // Lift every present class to at least one slot, paid for by the largest
  // shares so the total stays s.
  for (int i = 0; i < c; ++i) {
    if (ratios[static_cast<std::size_t>(i)] == 0.0 || shares[static_cast<std::size_t>(i)] > 0) {
      continue;
    }
    int donor = -1;
    for (int j = 0; j < c; ++j) {
      if (shares[static_cast<std::size_t>(j)] > 1 &&
          (donor < 0 ||
           shares[static_cast<std::size_t>(j)] > shares[static_cast<std::size_t>(donor)])) {
        donor = j;
      }
    }
    if (donor < 0) break;  // nothing left to redistribute
    --shares[static_cast<std::size_t>(donor)];
    ++shares[static_cast<std::size_t>(i)];
  }
  return shares;
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

Eigen::MatrixXi gather_rows(const Eigen::MatrixXi& m, const std::vector<int>& rows) {
  Eigen::MatrixXi out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

struct LoopState {
  Eigen::MatrixXd x_train;
  Eigen::MatrixXi y_train;
  Eigen::MatrixXd x_val;
  Eigen::MatrixXi y_val;
  Eigen::MatrixXd x_unlabeled;
  std::vector<int> unlabeled_ids;  // original row in the caller's matrix
};

LoopState prepare_state(const SelfTrainConfig& cfg, const Dataset& labeled,
                        const Eigen::MatrixXd& unlabeled, std::uint64_t seed) {
  if (unlabeled.rows() > 0 && unlabeled.cols() != labeled.features.cols()) {
    throw std::invalid_argument("unlabeled features must match the labeled width");
  }
  const auto split = stratified_split_indices(labeled, cfg.validation_fraction,
                                              derive_seed(seed, seed_tag("val")));
  LoopState st;
  st.x_train = gather_rows(labeled.features, split.rest);
  st.y_train = gather_rows(labeled.labels, split.rest);
  st.x_val = gather_rows(labeled.features, split.part);
  st.y_val = gather_rows(labeled.labels, split.part);
  st.x_unlabeled = unlabeled;
  st.unlabeled_ids.resize(static_cast<std::size_t>(unlabeled.rows()));
  std::iota(st.unlabeled_ids.begin(), st.unlabeled_ids.end(), 0);
  return st;
}

void apply_selection(LoopState& st, int n_classes, const std::vector<SelectedSample>& moves,
                     const std::vector<int>& positions) {
  const Eigen::Index old_rows = st.x_train.rows();
  st.x_train.conservativeResize(old_rows + static_cast<Eigen::Index>(moves.size()),
                                Eigen::NoChange);
  st.y_train.conservativeResize(old_rows + static_cast<Eigen::Index>(moves.size()),
                                Eigen::NoChange);
  for (std::size_t i = 0; i < moves.size(); ++i) {
    st.x_train.row(old_rows + static_cast<Eigen::Index>(i)) = st.x_unlabeled.row(positions[i]);
    Eigen::RowVectorXi one_hot = Eigen::RowVectorXi::Zero(n_classes);
    one_hot(moves[i].assigned_class) = 1;
    st.y_train.row(old_rows + static_cast<Eigen::Index>(i)) = one_hot;
  }

  std::vector<bool> drop(static_cast<std::size_t>(st.x_unlabeled.rows()), false);
  for (const int p : positions) drop[static_cast<std::size_t>(p)] = true;
  std::vector<int> keep;
  keep.reserve(drop.size() - positions.size());
  for (std::size_t i = 0; i < drop.size(); ++i) {
    if (!drop[i]) keep.push_back(static_cast<int>(i));
  }
  st.x_unlabeled = gather_rows(st.x_unlabeled, keep);
  std::vector<int> kept_ids;
  kept_ids.reserve(keep.size());
  for (const int i : keep) kept_ids.push_back(st.unlabeled_ids[static_cast<std::size_t>(i)]);
  st.unlabeled_ids = std::move(kept_ids);
}

// One iteration's pick list: pairs of (position in the current unlabeled
// matrix, trace entry), in the order the rows join the labeled pool.
struct IterationPick {
  std::vector<int> positions;
  std::vector<SelectedSample> moves;
  std::vector<double> thresholds;
  std::vector<int> per_class;
};

IterationPick pick_class_aware(const TrainedModel& model, const SelfTrainConfig& cfg,
                               const LoopState& st, const std::vector<int>& shares) {
  const int n_classes = model.n_classes();
  const Eigen::MatrixXd probs = model.predict_proba(st.x_unlabeled);

  double floor_t;
  if (model.kind() == ModelKind::forest) {
    std::vector<double> peaks(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      peaks[static_cast<std::size_t>(i)] = probs.row(i).maxCoeff();
    }
    floor_t = class_threshold(percentile(std::move(peaks), cfg.resolved_rf_percentile(n_classes)),
                              n_classes);
  } else {
    floor_t = class_threshold(cfg.confidence_threshold, n_classes);
  }

  IterationPick pick;
  pick.thresholds.assign(static_cast<std::size_t>(n_classes), floor_t);
  pick.per_class.assign(static_cast<std::size_t>(n_classes), 0);

  for (int c = 0; c < n_classes; ++c) {
    const int s_c = shares[static_cast<std::size_t>(c)];
    if (s_c < 1) continue;
    std::vector<int> candidates = select_candidates(probs, c, s_c, cfg.diversity, floor_t);
    if (candidates.empty()) continue;

    std::vector<int> selected;
    if (candidates.size() <= static_cast<std::size_t>(s_c)) {
      selected = std::move(candidates);
    } else {
      const Eigen::MatrixXd rows = gather_rows(st.x_unlabeled, candidates);
      const Eigen::MatrixXd embedded = model.embed(rows);
      DistanceMatrix distances =
          model.embedding_metric() == EmbeddingMetric::euclidean
              ? pairwise_euclidean(embedded)
              : embedding_distance(embedded).distances;
      std::vector<double> confidences;
      confidences.reserve(candidates.size());
      for (const int row : candidates) confidences.push_back(probs(row, c));
      selected = diversify(candidates, distances, confidences, s_c);
    }

    pick.per_class[static_cast<std::size_t>(c)] = static_cast<int>(selected.size());
    for (const int row : selected) {
      pick.positions.push_back(row);
      pick.moves.push_back(
          {st.unlabeled_ids[static_cast<std::size_t>(row)], c, probs(row, c)});
    }
  }
  return pick;
}

IterationPick pick_most_confident(const TrainedModel& model, int budget, const LoopState& st) {
  const Eigen::MatrixXd probs = model.predict_proba(st.x_unlabeled);
  std::vector<int> order(static_cast<std::size_t>(probs.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> peak(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    peak[i] = probs.row(static_cast<Eigen::Index>(i)).maxCoeff();
  }
  std::sort(order.begin(), order.end(),
            [&](int l, int r) { return peak[l] > peak[r] || (peak[l] == peak[r] && l < r); });
  if (order.size() > static_cast<std::size_t>(budget)) {
    order.resize(static_cast<std::size_t>(budget));
  }

  IterationPick pick;
  pick.per_class.assign(static_cast<std::size_t>(model.n_classes()), 0);
  for (const int row : order) {
    const int c = argmax_class(probs.row(row));
    ++pick.per_class[static_cast<std::size_t>(c)];
    pick.positions.push_back(row);
    pick.moves.push_back({st.unlabeled_ids[static_cast<std::size_t>(row)], c, probs(row, c)});
  }
  return pick;
}

SelfTrainResult run_loop(const ModelSpec& spec, const SelfTrainConfig& cfg,
                         const Dataset& labeled, const Eigen::MatrixXd& unlabeled,
                         std::uint64_t seed, bool class_aware) {
  labeled.validate();
  spec.validate();
  const int n_classes = labeled.n_classes();
  cfg.validate(n_classes);
  const int s = cfg.resolved_samples(n_classes);

  std::vector<double> ratios(static_cast<std::size_t>(n_classes));
  if (cfg.class_ratio_mode == ClassRatioMode::preserve_labeled_ratios) {
    const auto counts = labeled.class_counts();
    for (int c = 0; c < n_classes; ++c) {
      ratios[static_cast<std::size_t>(c)] =
          static_cast<double>(counts[static_cast<std::size_t>(c)]) /
          static_cast<double>(labeled.n_samples());
    }
  } else {
    std::fill(ratios.begin(), ratios.end(), 1.0 / static_cast<double>(n_classes));
  }
  const std::vector<int> shares = allocate_per_class(s, ratios);

  LoopState st = prepare_state(cfg, labeled, unlabeled, seed);

  SelfTrainResult result;
  double best_accuracy = -1.0;
  int best_iteration = 0;
  for (int i = 0;; ++i) {
    const auto model =
        fit(spec, st.x_train, st.y_train,
            derive_seed(seed, seed_tag("fit"), static_cast<std::uint64_t>(i)));
    const double val_accuracy = accuracy(*model, st.x_val, st.y_val);
    if (val_accuracy > best_accuracy) {
      best_accuracy = val_accuracy;
      best_iteration = i;
      result.model = model->clone();
    }

    TraceRecord record;
    record.iteration = i;
    record.validation_accuracy = val_accuracy;
    record.labeled_size = static_cast<int>(st.x_train.rows());
    record.unlabeled_size = static_cast<int>(st.x_unlabeled.rows());
    record.selected_per_class.assign(static_cast<std::size_t>(n_classes), 0);

    bool stop = i == cfg.max_iterations || st.x_unlabeled.rows() == 0 ||
                i - best_iteration >= cfg.patience;
    if (!stop) {
      IterationPick pick = class_aware ? pick_class_aware(*model, cfg, st, shares)
                                       : pick_most_confident(*model, s, st);
      record.class_thresholds = pick.thresholds;
      record.selected_per_class = pick.per_class;
      record.selections = pick.moves;
      if (pick.moves.empty()) {
        stop = true;
      } else {
        apply_selection(st, n_classes, pick.moves, pick.positions);
      }
    }
    result.trace.records.push_back(std::move(record));
    if (stop) break;
  }
  result.trace.best_iteration = best_iteration;
  return result;
}

}  // namespace

SelfTrainResult dcast(const ModelSpec& spec, const SelfTrainConfig& cfg, const Dataset& labeled,
                      const Eigen::MatrixXd& unlabeled, std::uint64_t seed) {
  return run_loop(spec, cfg, labeled, unlabeled, seed, true);
}

SelfTrainResult conventional_st(const ModelSpec& spec, const SelfTrainConfig& cfg,
                                const Dataset& labeled, const Eigen::MatrixXd& unlabeled,
                                std::uint64_t seed) {
  return run_loop(spec, cfg, labeled, unlabeled, seed, false);
}

}  // namespace biasbench
