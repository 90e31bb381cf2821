#pragma once

#include <cstdint>

#include "biasbench/models.hpp"

namespace biasbench {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Multinomial logistic regression: softmax(x W + b), trained by full-batch
// gradient descent on mean cross-entropy plus (1/(2C))*||W||^2 with the bias
// unpenalized. The embedding is the raw feature vector, so diversity
// clustering falls back to plain Euclidean geometry.
class LogregModel final : public TrainedModel {
 public:
  LogregModel(Eigen::MatrixXd weights, Eigen::RowVectorXd bias);

  static LogregModel train(const LogregParams& params, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXi& y, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::logreg; }
  int n_features() const override { return static_cast<int>(w_.rows()); }
  int n_classes() const override { return static_cast<int>(w_.cols()); }
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const override;
  Eigen::MatrixXd embed(const Eigen::MatrixXd& x) const override { return x; }
  EmbeddingMetric embedding_metric() const override { return EmbeddingMetric::euclidean; }
  nlohmann::json to_json() const override;
  std::unique_ptr<TrainedModel> clone() const override;

  static LogregModel from_json(const nlohmann::json& j);

  const Eigen::MatrixXd& weights() const { return w_; }
  const Eigen::RowVectorXd& bias() const { return b_; }

 private:
  Eigen::MatrixXd w_;     // f x c
  Eigen::RowVectorXd b_;  // 1 x c
};

// Objective value and gradients at (w, b), exposed for finite-difference
// checks of the training step.
struct LogregLoss {
  double loss;
  Eigen::MatrixXd dw;
  Eigen::RowVectorXd db;
};
LogregLoss logreg_loss(const Eigen::MatrixXd& w, const Eigen::RowVectorXd& b,
                       const Eigen::MatrixXd& x, const Eigen::MatrixXi& y,
                       double inverse_regularization);

}  // namespace biasbench
