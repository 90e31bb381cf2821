#pragma once

#include <cstdint>

#include "biasbench/models.hpp"

namespace biasbench {

// Fully connected f -> h1 -> h2 -> c network, ReLU hidden layers, softmax
// output, trained with Adam on mean cross-entropy over shuffled minibatches.
// The embedding is the post-ReLU activation of the last hidden layer.
class MlpModel final : public TrainedModel {
 public:
  struct Layers {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::RowVectorXd b1, b2, b3;
  };

  explicit MlpModel(Layers layers);

  static MlpModel train(const MlpParams& params, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXi& y, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::mlp; }
  int n_features() const override { return static_cast<int>(layers_.w1.rows()); }
  int n_classes() const override { return static_cast<int>(layers_.w3.cols()); }
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const override;
  Eigen::MatrixXd embed(const Eigen::MatrixXd& x) const override;
  EmbeddingMetric embedding_metric() const override { return EmbeddingMetric::normalized_gram; }
  nlohmann::json to_json() const override;
  std::unique_ptr<TrainedModel> clone() const override;

  static MlpModel from_json(const nlohmann::json& j);

  const Layers& layers() const { return layers_; }
  int epochs_trained() const { return epochs_trained_; }

 private:
  Layers layers_;
  int epochs_trained_ = 0;
};

// Mean cross-entropy on a batch and its gradients for every parameter,
// exposed for finite-difference checks of the backward pass.
struct MlpGradients {
  double loss;
  MlpModel::Layers grad;
};
MlpGradients mlp_loss_gradients(const MlpModel::Layers& layers, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXi& y);

}  // namespace biasbench
