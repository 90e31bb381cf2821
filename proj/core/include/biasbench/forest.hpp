#pragma once

#include <cstdint>
#include <vector>

#include "biasbench/models.hpp"

namespace biasbench {

// Bagged decision trees. Each tree trains on a row subsample drawn without
// replacement and grows best-first: the pending leaf whose best split gives
// the largest Gini impurity decrease is expanded until the leaf budget is
// spent or no split helps. Leaf probabilities are Laplace-smoothed counts;
// predictions average them across trees. The embedding is the concatenated
// one-hot leaf pattern, one block per tree.
class ForestModel final : public TrainedModel {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_index = -1;       // leaves: position within the tree's leaf order
    Eigen::RowVectorXd probs;  // leaves: smoothed class distribution
  };
  struct Tree {
    std::vector<Node> nodes;
    int leaf_count = 0;
  };

  ForestModel(std::vector<Tree> trees, int n_features, int n_classes);

  static ForestModel train(const ForestParams& params, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXi& y, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::forest; }
  int n_features() const override { return n_features_; }
  int n_classes() const override { return n_classes_; }
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const override;
  Eigen::MatrixXd embed(const Eigen::MatrixXd& x) const override;
  EmbeddingMetric embedding_metric() const override { return EmbeddingMetric::normalized_gram; }
  nlohmann::json to_json() const override;
  std::unique_ptr<TrainedModel> clone() const override;

  static ForestModel from_json(const nlohmann::json& j);

  const std::vector<Tree>& trees() const { return trees_; }
  int embedding_width() const { return total_leaves_; }

 private:
  int leaf_of(const Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

  std::vector<Tree> trees_;
  std::vector<int> leaf_offset_;
  int n_features_ = 0;
  int n_classes_ = 0;
  int total_leaves_ = 0;
};

}  // namespace biasbench
