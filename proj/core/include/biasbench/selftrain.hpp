#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biasbench/cluster.hpp"
#include "biasbench/dataset.hpp"
#include "biasbench/models.hpp"

namespace biasbench {

enum class ClassRatioMode { preserve_labeled_ratios, equal_per_class };

std::string to_string(ClassRatioMode mode);
ClassRatioMode class_ratio_mode_from_string(const std::string& name);

// Knobs of the self-training loop. samples_per_iteration and
// rf_threshold_percentile accept 0 as "resolve from the class count":
// s becomes 3*C and the percentile 93 for binary or 85 for multiclass.
struct SelfTrainConfig {
  int max_iterations = 100;
  int samples_per_iteration = 0;
  double confidence_threshold = 0.9;
  int diversity = 1;
  ClassRatioMode class_ratio_mode = ClassRatioMode::preserve_labeled_ratios;
  double rf_threshold_percentile = 0.0;
  int patience = 5;
  double validation_fraction = 0.2;

  void validate(int n_classes) const;
  int resolved_samples(int n_classes) const;
  double resolved_rf_percentile(int n_classes) const;
};

struct SelectedSample {
  int unlabeled_index = 0;  // row in the unlabeled matrix passed to the run
  int assigned_class = 0;
  double confidence = 0.0;
};

struct TraceRecord {
  int iteration = 0;
  double validation_accuracy = 0.0;
  int labeled_size = 0;    // training rows at fit time, validation excluded
  int unlabeled_size = 0;  // unlabeled rows at fit time
  std::vector<double> class_thresholds;  // empty when no thresholded selection ran
  std::vector<int> selected_per_class;
  std::vector<SelectedSample> selections;

  nlohmann::json to_json() const;
  static TraceRecord from_json(const nlohmann::json& j);
};

struct SelfTrainTrace {
  std::vector<TraceRecord> records;
  int best_iteration = 0;

  nlohmann::json to_json() const;
  std::string to_jsonl() const;  // one record per line
  static SelfTrainTrace from_json(const nlohmann::json& j);
};

struct SelfTrainResult {
  std::unique_ptr<TrainedModel> model;  // best validation accuracy, earliest tie
  SelfTrainTrace trace;
};

// Per-class confidence floor: the configured threshold, but never below the
// 1.2/C baseline.
double class_threshold(double t, int n_classes);

// Rows whose argmax class is c and whose class-c probability strictly
// exceeds t_c, ranked by that probability descending (ties toward the lower
// row), truncated to the top s_c * d.
std::vector<int> select_candidates(const Eigen::MatrixXd& probs, int c, int s_c, int d,
                                   double t_c);

// Distances between embedded rows: 1 - (E*E^T)/max(E*E^T) with a zero
// diagonal. A zero Gram matrix carries no geometry; every off-diagonal
// distance becomes 1 and the result is flagged degenerate.
struct EmbeddingDistance {
  DistanceMatrix distances;
  bool degenerate = false;
};
EmbeddingDistance embedding_distance(const Eigen::MatrixXd& embeddings);

// One pick per cluster: cut the single-linkage dendrogram of the candidates
// into s_c clusters and keep each cluster's highest-confidence member (ties
// toward the lower candidate value). Everything is kept when the list
// already fits.
std::vector<int> diversify(const std::vector<int>& candidates, const DistanceMatrix& distances,
                           const std::vector<double>& confidences, int s_c);

// Split a per-iteration budget of s pseudo-labels across classes
// proportionally to `ratios`: floor(s*ratio), remainders to the largest
// fractional parts (ties toward the lower class), and every positive-ratio
// class lifted to at least 1 by taking from the largest shares. The result
// sums to s whenever any ratio is positive.
std::vector<int> allocate_per_class(int s, const std::vector<double>& ratios);

// Diverse class-aware self-training. Splits a stratified validation set
// off the labeled data, then alternately fits the model and moves
// confidently predicted unlabeled samples into the labeled pool, class by
// class, spreading each class's picks across single-linkage clusters of the
// model's embedding space. Stops when max_iterations selection rounds have
// run, the unlabeled pool is exhausted, nothing qualifies, or validation
// accuracy has not improved for `patience` iterations; returns the model
// with the best validation accuracy.
//
// Per-iteration cost is one fit, one predict over the unlabeled pool, and,
// per class, distance plus clustering work quadratic in s_c * d.
SelfTrainResult dcast(const ModelSpec& spec, const SelfTrainConfig& cfg, const Dataset& labeled,
                      const Eigen::MatrixXd& unlabeled, std::uint64_t seed);

// Conventional self-training: the same loop, but each iteration simply
// takes the s unlabeled samples with the highest predicted probability,
// regardless of class balance or any confidence floor.
SelfTrainResult conventional_st(const ModelSpec& spec, const SelfTrainConfig& cfg,
                                const Dataset& labeled, const Eigen::MatrixXd& unlabeled,
                                std::uint64_t seed);

}  // namespace biasbench
