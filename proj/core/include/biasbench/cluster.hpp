#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <vector>

namespace biasbench {

// Symmetric pairwise distances. `euclidean` marks matrices whose entries are
// unsquared Euclidean distances between embedded points; Ward linkage is only
// defined for those.
struct DistanceMatrix {
  Eigen::MatrixXd d;
  bool euclidean = false;

  int size() const { return static_cast<int>(d.rows()); }

  // Validates and adopts a matrix: square, symmetric, finite, non-negative,
  // zero diagonal.
  static DistanceMatrix from_matrix(Eigen::MatrixXd m, bool euclidean);
};

DistanceMatrix pairwise_euclidean(const Eigen::MatrixXd& points);

enum class Linkage { single, ward };

// Merge step i joins clusters `left` and `right` (left < right) into a new
// cluster with id leaf_count + i. Leaves are 0..leaf_count-1. For Ward the
// height is in squared-distance scale, matching the Lance-Williams update on
// squared Euclidean distances.
struct Merge {
  int left;
  int right;
  double height;
  int size;
};

struct Dendrogram {
  int leaf_count = 0;
  std::vector<Merge> merges;

  // Leaf ids under the given cluster id, ascending.
  std::vector<int> leaves_of(int cluster_id) const;
  nlohmann::json to_json() const;
};

// Greedy agglomerative clustering over a full distance matrix. Each step
// merges the closest pair; ties go to the pair with the smallest lower id,
// then the smallest higher id. Cluster distances follow the Lance-Williams
// update for the chosen linkage.
Dendrogram agglomerate(const DistanceMatrix& distances, Linkage linkage);

// Members of the earliest-formed cluster with at least k leaves, ascending.
std::vector<int> first_cluster_of_size(const Dendrogram& tree, int k);

// Cluster assignment (values 0..k-1) after undoing the last k-1 merges.
// Ids are normalized by order of first appearance over leaves 0..n-1.
std::vector<int> cut_to_k(const Dendrogram& tree, int k);

}  // namespace biasbench
