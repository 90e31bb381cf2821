#include "biasbench/forest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "biasbench/rng.hpp"

namespace biasbench {

namespace {

struct Split {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

double weighted_gini(const std::vector<int>& counts, int n) {
  if (n == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / n;
    sum_sq += p * p;
  }
  return n * (1.0 - sum_sq);
}

// Best (feature, threshold) for the rows by Gini impurity decrease, ties to
// the lower feature index then the lower threshold. Returns gain 0 when no
// split keeps min_leaf rows on both sides or none reduces impurity.
Split best_split(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                 const std::vector<int>& rows, int n_classes, int min_leaf) {
  const int n = static_cast<int>(rows.size());
  std::vector<int> total(static_cast<std::size_t>(n_classes), 0);
  for (int r : rows) total[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])]++;
  const double parent = weighted_gini(total, n);

  Split best;
  std::vector<std::pair<double, int>> order(static_cast<std::size_t>(n));
  std::vector<int> left(static_cast<std::size_t>(n_classes), 0);
  std::vector<int> right(static_cast<std::size_t>(n_classes), 0);
  for (int f = 0; f < x.cols(); ++f) {
    for (int i = 0; i < n; ++i) {
      const int r = rows[static_cast<std::size_t>(i)];
      order[static_cast<std::size_t>(i)] = {x(r, f), r};
    }
    std::sort(order.begin(), order.end());

    std::fill(left.begin(), left.end(), 0);
    right = total;
    for (int i = 0; i + 1 < n; ++i) {
      const int cls = labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)];
      left[static_cast<std::size_t>(cls)]++;
      right[static_cast<std::size_t>(cls)]--;
      const double value = order[static_cast<std::size_t>(i)].first;
      const double next = order[static_cast<std::size_t>(i) + 1].first;
      if (value == next) continue;
      const int n_left = i + 1;
      const int n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      const double gain = parent - weighted_gini(left, n_left) - weighted_gini(right, n_right);
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = f;
        best.threshold = (value + next) / 2.0;
      }
    }
  }
  return best;
}

Eigen::RowVectorXd leaf_probs(const std::vector<int>& labels, const std::vector<int>& rows,
                              int n_classes, double alpha) {
  Eigen::RowVectorXd probs = Eigen::RowVectorXd::Constant(n_classes, alpha);
  for (int r : rows) probs(labels[static_cast<std::size_t>(r)]) += 1.0;
  return probs / (static_cast<double>(rows.size()) + alpha * n_classes);
}

ForestModel::Tree build_tree(const ForestParams& params, const Eigen::MatrixXd& x,
                             const std::vector<int>& labels, const std::vector<int>& rows,
                             int n_classes) {
  ForestModel::Tree tree;
  struct Pending {
    int node;
    std::vector<int> rows;
    Split split;
  };
  std::vector<Pending> pending;

  tree.nodes.emplace_back();
  pending.push_back({0, rows, best_split(x, labels, rows, n_classes, params.min_leaf)});

  int leaves = 1;
  while (leaves < params.max_leaves) {
    // Expand the pending leaf with the best split; equal gains go to the
    // leaf created first.
    std::size_t pick = pending.size();
    double best_gain = 0.0;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (pending[i].split.gain > best_gain) {
        best_gain = pending[i].split.gain;
        pick = i;
      }
    }
    if (pick == pending.size()) break;

    Pending chosen = std::move(pending[pick]);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));

    std::vector<int> left_rows, right_rows;
    for (int r : chosen.rows) {
      (x(r, chosen.split.feature) <= chosen.split.threshold ? left_rows : right_rows)
          .push_back(r);
    }

    const int left_node = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_node = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    ForestModel::Node& parent = tree.nodes[static_cast<std::size_t>(chosen.node)];
    parent.feature = chosen.split.feature;
    parent.threshold = chosen.split.threshold;
    parent.left = left_node;
    parent.right = right_node;

    const Split left_split = best_split(x, labels, left_rows, n_classes, params.min_leaf);
    const Split right_split = best_split(x, labels, right_rows, n_classes, params.min_leaf);
    pending.push_back({left_node, std::move(left_rows), left_split});
    pending.push_back({right_node, std::move(right_rows), right_split});
    ++leaves;
  }

  // Unsplit nodes stay leaves; give them their class distributions and
  // embedding slots in node order.
  for (const Pending& p : pending) {
    tree.nodes[static_cast<std::size_t>(p.node)].probs =
        leaf_probs(labels, p.rows, n_classes, params.laplace_alpha);
  }
  for (auto& node : tree.nodes) {
    if (node.feature < 0) node.leaf_index = tree.leaf_count++;
  }
  return tree;
}

}  // namespace

ForestModel::ForestModel(std::vector<Tree> trees, int n_features, int n_classes)
    : trees_(std::move(trees)), n_features_(n_features), n_classes_(n_classes) {
  if (trees_.empty()) throw std::invalid_argument("forest needs at least one tree");
  for (const Tree& tree : trees_) {
    leaf_offset_.push_back(total_leaves_);
    total_leaves_ += tree.leaf_count;
  }
}

ForestModel ForestModel::train(const ForestParams& params, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXi& y, std::uint64_t seed) {
  if (params.trees < 1) throw std::invalid_argument("trees must be positive");
  if (params.max_leaves < 1) throw std::invalid_argument("max_leaves must be positive");
  if (params.min_leaf < 1) throw std::invalid_argument("min_leaf must be positive");
  if (!(params.row_subsample > 0.0 && params.row_subsample <= 1.0)) {
    throw std::invalid_argument("row_subsample must be in (0,1]");
  }
  if (params.laplace_alpha <= 0.0) throw std::invalid_argument("laplace_alpha must be positive");
  if (x.rows() != y.rows()) throw std::invalid_argument("feature/label row mismatch");
  if (x.rows() == 0) throw std::invalid_argument("cannot train on an empty set");

  const int n = static_cast<int>(x.rows());
  const int n_classes = static_cast<int>(y.cols());
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = argmax_class(y.row(i).cast<double>());
  }

  const int rows_per_tree =
      std::max(1, static_cast<int>(std::ceil(params.row_subsample * n)));

  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(params.trees));
  for (int t = 0; t < params.trees; ++t) {
    Rng rng(derive_seed(seed, seed_tag("tree"), static_cast<std::uint64_t>(t)));
    const std::vector<int> rows = rng.sample_without_replacement(n, rows_per_tree);
    trees.push_back(build_tree(params, x, labels, rows, n_classes));
  }
  return ForestModel(std::move(trees), static_cast<int>(x.cols()), n_classes);
}

int ForestModel::leaf_of(const Tree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& n = tree.nodes[static_cast<std::size_t>(node)];
    node = row(n.feature) <= n.threshold ? n.left : n.right;
  }
  return node;
}

Eigen::MatrixXd ForestModel::predict_proba(const Eigen::MatrixXd& x) const {
  if (x.cols() != n_features_) throw std::invalid_argument("feature count mismatch");
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(x.rows(), n_classes_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (const Tree& tree : trees_) {
      probs.row(i) += tree.nodes[static_cast<std::size_t>(leaf_of(tree, x.row(i)))].probs;
    }
  }
  return probs / static_cast<double>(trees_.size());
}

Eigen::MatrixXd ForestModel::embed(const Eigen::MatrixXd& x) const {
  if (x.cols() != n_features_) throw std::invalid_argument("feature count mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), total_leaves_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      const int leaf = leaf_of(trees_[t], x.row(i));
      out(i, leaf_offset_[t] + trees_[t].nodes[static_cast<std::size_t>(leaf)].leaf_index) = 1.0;
    }
  }
  return out;
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json tree_list = nlohmann::json::array();
  for (const Tree& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& node : tree.nodes) {
      nlohmann::json entry = {{"feature", node.feature},
                              {"threshold", node.threshold},
                              {"left", node.left},
                              {"right", node.right}};
      if (node.feature < 0) {
        entry["probs"] = std::vector<double>(node.probs.data(),
                                             node.probs.data() + node.probs.size());
      }
      nodes.push_back(std::move(entry));
    }
    tree_list.push_back({{"nodes", std::move(nodes)}});
  }
  return {{"format_version", 1},
          {"kind", "forest"},
          {"n_features", n_features_},
          {"n_classes", n_classes_},
          {"trees", std::move(tree_list)}};
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
  const int n_features = j.at("n_features").get<int>();
  const int n_classes = j.at("n_classes").get<int>();
  std::vector<Tree> trees;
  for (const auto& tree_json : j.at("trees")) {
    Tree tree;
    for (const auto& node_json : tree_json.at("nodes")) {
      Node node;
      node.feature = node_json.at("feature").get<int>();
      node.threshold = node_json.at("threshold").get<double>();
      node.left = node_json.at("left").get<int>();
      node.right = node_json.at("right").get<int>();
      if (node.feature < 0) {
        const auto probs = node_json.at("probs").get<std::vector<double>>();
        if (static_cast<int>(probs.size()) != n_classes) {
          throw std::invalid_argument("leaf probability size mismatch");
        }
        node.probs = Eigen::Map<const Eigen::RowVectorXd>(probs.data(), n_classes);
        node.leaf_index = tree.leaf_count++;
      }
      tree.nodes.push_back(std::move(node));
    }
    trees.push_back(std::move(tree));
  }
  return ForestModel(std::move(trees), n_features, n_classes);
}

std::unique_ptr<TrainedModel> ForestModel::clone() const {
  return std::make_unique<ForestModel>(*this);
}

}  // namespace biasbench
