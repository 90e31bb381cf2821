#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace testsupport {

// Reference agglomerative clustering used to check the Lance-Williams
// implementation. Recomputes every cluster distance from scratch each step:
// single linkage as the minimum pairwise point distance, Ward as the closed
// form 2|A||B|/(|A|+|B|) * ||centroid_A - centroid_B||^2. Same tie rule as
// the production code: smallest lower cluster id, then smallest higher id.

struct OracleMerge {
  int left;
  int right;
  double height;
  // Leaf sets of the two merged clusters, each ascending; the side holding
  // the smallest leaf comes first.
  std::vector<int> left_leaves;
  std::vector<int> right_leaves;
};

enum class OracleLinkage { single, ward };

inline std::vector<OracleMerge> oracle_agglomerate(const Eigen::MatrixXd& points,
                                                   OracleLinkage linkage) {
  const int n = static_cast<int>(points.rows());
  struct Cluster {
    int id;
    std::vector<int> leaves;
  };
  std::vector<Cluster> clusters;
  for (int i = 0; i < n; ++i) clusters.push_back({i, {i}});

  const auto cluster_distance = [&](const Cluster& a, const Cluster& b) {
    if (linkage == OracleLinkage::single) {
      double best = std::numeric_limits<double>::infinity();
      for (int p : a.leaves) {
        for (int q : b.leaves) {
          best = std::min(best, (points.row(p) - points.row(q)).norm());
        }
      }
      return best;
    }
    Eigen::RowVectorXd ca = Eigen::RowVectorXd::Zero(points.cols());
    Eigen::RowVectorXd cb = Eigen::RowVectorXd::Zero(points.cols());
    for (int p : a.leaves) ca += points.row(p);
    for (int q : b.leaves) cb += points.row(q);
    ca /= static_cast<double>(a.leaves.size());
    cb /= static_cast<double>(b.leaves.size());
    const double na = static_cast<double>(a.leaves.size());
    const double nb = static_cast<double>(b.leaves.size());
    return 2.0 * na * nb / (na + nb) * (ca - cb).squaredNorm();
  };

  std::vector<OracleMerge> merges;
  for (int step = 0; step < n - 1; ++step) {
    std::size_t best_i = 0, best_j = 0;
    int best_lo = 0, best_hi = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = cluster_distance(clusters[i], clusters[j]);
        const int lo = std::min(clusters[i].id, clusters[j].id);
        const int hi = std::max(clusters[i].id, clusters[j].id);
        if (d < best_d ||
            (d == best_d && (lo < best_lo || (lo == best_lo && hi < best_hi)))) {
          best_d = d;
          best_i = i;
          best_j = j;
          best_lo = lo;
          best_hi = hi;
        }
      }
    }

    const Cluster& a = clusters[best_i];
    const Cluster& b = clusters[best_j];
    const bool a_first = a.leaves.front() < b.leaves.front();
    const Cluster& first = a_first ? a : b;
    const Cluster& second = a_first ? b : a;
    merges.push_back({best_lo, best_hi, best_d, first.leaves, second.leaves});

    Cluster merged;
    merged.id = n + step;
    merged.leaves = a.leaves;
    merged.leaves.insert(merged.leaves.end(), b.leaves.begin(), b.leaves.end());
    std::sort(merged.leaves.begin(), merged.leaves.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_j));
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_i));
    clusters.push_back(std::move(merged));
  }
  return merges;
}

// Minimum spanning tree edge weights via Prim's algorithm. Single-linkage
// merge heights must equal these, sorted.
inline std::vector<double> mst_edge_weights(const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<double> best(static_cast<std::size_t>(n),
                           std::numeric_limits<double>::infinity());
  std::vector<double> weights;
  in_tree[0] = true;
  for (int i = 1; i < n; ++i) best[static_cast<std::size_t>(i)] = (points.row(0) - points.row(i)).norm();
  for (int added = 1; added < n; ++added) {
    int pick = -1;
    for (int i = 0; i < n; ++i) {
      if (!in_tree[static_cast<std::size_t>(i)] &&
          (pick < 0 || best[static_cast<std::size_t>(i)] < best[static_cast<std::size_t>(pick)])) {
        pick = i;
      }
    }
    weights.push_back(best[static_cast<std::size_t>(pick)]);
    in_tree[static_cast<std::size_t>(pick)] = true;
    for (int i = 0; i < n; ++i) {
      if (!in_tree[static_cast<std::size_t>(i)]) {
        best[static_cast<std::size_t>(i)] = std::min(
            best[static_cast<std::size_t>(i)], (points.row(pick) - points.row(i)).norm());
      }
    }
  }
  std::sort(weights.begin(), weights.end());
  return weights;
}

}  // namespace testsupport
