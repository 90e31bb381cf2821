#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>

namespace biasbench {

enum class ModelKind { logreg, mlp, forest };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct LogregParams {
  double inverse_regularization = 5.0;  // C in the (1/(2C))*||W||^2 penalty
  double learning_rate = 0.1;
  int epochs = 100;
};

struct MlpParams {
  int hidden1 = 8;
  int hidden2 = 12;
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int batch_size = 32;  // capped at the training set size
  // Training stops early once the epoch loss has not improved by at least
  // `tol` for `no_improvement_epochs` consecutive epochs.
  double tol = 1e-4;
  int no_improvement_epochs = 10;
};

struct ForestParams {
  int trees = 100;
  int max_leaves = 31;
  double row_subsample = 0.9;  // per-tree row fraction, drawn without replacement
  int min_leaf = 2;            // fewest rows either child of a split may hold
  double laplace_alpha = 1.0;  // leaf probability smoothing
};

struct ModelSpec {
  ModelKind kind = ModelKind::logreg;
  LogregParams logreg;
  MlpParams mlp;
  ForestParams forest;

  void validate() const;
};

enum class EmbeddingMetric { euclidean, normalized_gram };

// A fit classifier. Implementations are value-like: cloneable, serializable,
// and deterministic functions of (spec, data, seed).
class TrainedModel {
 public:
  virtual ~TrainedModel() = default;

  virtual ModelKind kind() const = 0;
  virtual int n_features() const = 0;
  virtual int n_classes() const = 0;

  // One row per input row; each row is a probability vector over classes.
  virtual Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const = 0;

  // Representation used for diversity clustering, with the metric that
  // distances over it should use.
  virtual Eigen::MatrixXd embed(const Eigen::MatrixXd& x) const = 0;
  virtual EmbeddingMetric embedding_metric() const = 0;

  virtual nlohmann::json to_json() const = 0;
  virtual std::unique_ptr<TrainedModel> clone() const = 0;
};

std::unique_ptr<TrainedModel> fit(const ModelSpec& spec, const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXi& y, std::uint64_t seed);

std::unique_ptr<TrainedModel> model_from_json(const nlohmann::json& j);

// Argmax with ties resolved toward the lowest class index.
int argmax_class(const Eigen::Ref<const Eigen::RowVectorXd>& probs);

Eigen::VectorXi predict_classes(const TrainedModel& model, const Eigen::MatrixXd& x);

double accuracy(const TrainedModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXi& y);

}  // namespace biasbench
