#include "biasbench/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace biasbench {

DistanceMatrix DistanceMatrix::from_matrix(Eigen::MatrixXd m, bool euclidean) {
  if (m.rows() != m.cols()) throw std::invalid_argument("distance matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("distance matrix must be finite");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 0.0) throw std::invalid_argument("distance matrix diagonal must be zero");
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      if (m(i, j) != m(j, i)) throw std::invalid_argument("distance matrix must be symmetric");
      if (m(i, j) < 0.0) throw std::invalid_argument("distances must be non-negative");
    }
  }
  DistanceMatrix out;
  out.d = std::move(m);
  out.euclidean = euclidean;
  return out;
}

DistanceMatrix pairwise_euclidean(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d(n, n);
  d.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (points.row(i) - points.row(j)).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  DistanceMatrix out;
  out.d = std::move(d);
  out.euclidean = true;
  return out;
}

std::vector<int> Dendrogram::leaves_of(int cluster_id) const {
  if (cluster_id < 0 || cluster_id >= leaf_count + static_cast<int>(merges.size())) {
    throw std::invalid_argument("cluster id " + std::to_string(cluster_id) + " out of range");
  }
  std::vector<int> leaves;
  std::vector<int> stack{cluster_id};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (id < leaf_count) {
      leaves.push_back(id);
    } else {
      const Merge& m = merges[static_cast<std::size_t>(id - leaf_count)];
      stack.push_back(m.left);
      stack.push_back(m.right);
    }
  }
  std::sort(leaves.begin(), leaves.end());
  return leaves;
}

nlohmann::json Dendrogram::to_json() const {
  nlohmann::json merge_list = nlohmann::json::array();
  for (const Merge& m : merges) {
    merge_list.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  }
  return {{"leaf_count", leaf_count}, {"merges", merge_list}};
}

Dendrogram agglomerate(const DistanceMatrix& distances, Linkage linkage) {
  const int n = distances.size();
  if (n < 1) throw std::invalid_argument("cannot cluster an empty distance matrix");
  if (linkage == Linkage::ward && !distances.euclidean) {
    throw std::invalid_argument("ward linkage requires Euclidean distances");
  }

  Dendrogram tree;
  tree.leaf_count = n;
  if (n == 1) return tree;

  // Ward's Lance-Williams update operates on squared Euclidean distances.
  Eigen::MatrixXd work = linkage == Linkage::ward
                             ? Eigen::MatrixXd(distances.d.array().square())
                             : distances.d;

  // Active clusters live in slots 0..active-1; merging reuses the first
  // slot and swap-removes the second.
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::vector<int> sizes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ids[static_cast<std::size_t>(i)] = i;
    sizes[static_cast<std::size_t>(i)] = 1;
  }

  int active = n;

  // Selection keys are (distance, lower id, higher id); the id pair makes
  // every key unique, so caching each slot's best partner still pins down
  // the exact global-minimum pair. Only caches the merge invalidates are
  // rescanned, which keeps typical runs near quadratic instead of cubic.
  struct Key {
    double d;
    int lo;
    int hi;
  };
  const auto key_of = [&](int i, int j) {
    const int a = ids[static_cast<std::size_t>(i)];
    const int b = ids[static_cast<std::size_t>(j)];
    return Key{work(i, j), std::min(a, b), std::max(a, b)};
  };
  const auto key_less = [](const Key& x, const Key& y) {
    return x.d < y.d || (x.d == y.d && (x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi)));
  };

  // Alongside each cached partner, count how many partners sit at exactly the
  // cached distance. When a merge lands at or below that distance and the
  // count is one, the merged cluster is provably the unique new best and the
  // cache updates in O(1); anything else falls back to an exact rescan.
  std::vector<int> nn(static_cast<std::size_t>(n), 0);
  std::vector<Key> nn_key(static_cast<std::size_t>(n));
  std::vector<int> nn_ties(static_cast<std::size_t>(n), 1);
  const auto rescan = [&](int k) {
    int best = k == 0 ? 1 : 0;
    Key best_key = key_of(k, best);
    int ties = 1;
    for (int j = 0; j < active; ++j) {
      if (j == k || j == best) continue;
      const Key candidate = key_of(k, j);
      if (candidate.d < best_key.d) {
        ties = 1;
        best_key = candidate;
        best = j;
      } else if (candidate.d == best_key.d) {
        ++ties;
        if (key_less(candidate, best_key)) {
          best_key = candidate;
          best = j;
        }
      }
    }
    nn[static_cast<std::size_t>(k)] = best;
    nn_key[static_cast<std::size_t>(k)] = best_key;
    nn_ties[static_cast<std::size_t>(k)] = ties;
  };
  for (int i = 0; i < n; ++i) rescan(i);

  std::vector<char> stale(static_cast<std::size_t>(n), 0);
  tree.merges.reserve(static_cast<std::size_t>(n - 1));
  for (int step = 0; step < n - 1; ++step) {
    int first = 0;
    Key best = nn_key[0];
    for (int k = 1; k < active; ++k) {
      if (key_less(nn_key[static_cast<std::size_t>(k)], best)) {
        best = nn_key[static_cast<std::size_t>(k)];
        first = k;
      }
    }
    const int p = std::min(first, nn[static_cast<std::size_t>(first)]);
    const int q = std::max(first, nn[static_cast<std::size_t>(first)]);

    const double n_a = sizes[static_cast<std::size_t>(p)];
    const double n_b = sizes[static_cast<std::size_t>(q)];
    for (int k = 0; k < active; ++k) {
      if (k == p || k == q) continue;
      double updated;
      if (linkage == Linkage::single) {
        updated = std::min(work(p, k), work(q, k));
      } else {
        const double n_k = sizes[static_cast<std::size_t>(k)];
        updated = ((n_a + n_k) * work(p, k) + (n_b + n_k) * work(q, k) -
                   n_k * work(p, q)) /
                  (n_a + n_b + n_k);
      }
      work(p, k) = updated;
      work(k, p) = updated;
    }

    tree.merges.push_back({best.lo, best.hi, best.d, static_cast<int>(n_a + n_b)});
    ids[static_cast<std::size_t>(p)] = n + step;
    sizes[static_cast<std::size_t>(p)] = static_cast<int>(n_a + n_b);

    // A cache is stale when its partner was one of the merged slots; the
    // merged cluster itself always needs a fresh scan.
    for (int k = 0; k < active; ++k) {
      stale[static_cast<std::size_t>(k)] =
          nn[static_cast<std::size_t>(k)] == p || nn[static_cast<std::size_t>(k)] == q;
    }

    const int last = active - 1;
    if (q != last) {
      work.row(q) = work.row(last);
      work.col(q) = work.col(last);
      ids[static_cast<std::size_t>(q)] = ids[static_cast<std::size_t>(last)];
      sizes[static_cast<std::size_t>(q)] = sizes[static_cast<std::size_t>(last)];
      nn[static_cast<std::size_t>(q)] = nn[static_cast<std::size_t>(last)];
      nn_key[static_cast<std::size_t>(q)] = nn_key[static_cast<std::size_t>(last)];
      nn_ties[static_cast<std::size_t>(q)] = nn_ties[static_cast<std::size_t>(last)];
      stale[static_cast<std::size_t>(q)] = stale[static_cast<std::size_t>(last)];
    }
    --active;
    if (active < 2) break;

    for (int k = 0; k < active; ++k) {
      if (nn[static_cast<std::size_t>(k)] == last) nn[static_cast<std::size_t>(k)] = q;
    }
    const int merged_id = ids[static_cast<std::size_t>(p)];
    for (int k = 0; k < active; ++k) {
      if (k == p) {
        rescan(k);
        continue;
      }
      const double d_new = work(k, p);
      const Key merged{d_new, std::min(ids[static_cast<std::size_t>(k)], merged_id),
                       std::max(ids[static_cast<std::size_t>(k)], merged_id)};
      if (stale[static_cast<std::size_t>(k)]) {
        // The cached partner died in the merge. If the merged cluster lands
        // strictly below the cached distance, nothing else can compete; at
        // the exact cached distance it is unique only when nothing tied.
        if (d_new < nn_key[static_cast<std::size_t>(k)].d ||
            (d_new == nn_key[static_cast<std::size_t>(k)].d &&
             nn_ties[static_cast<std::size_t>(k)] == 1)) {
          nn[static_cast<std::size_t>(k)] = p;
          nn_key[static_cast<std::size_t>(k)] = merged;
          nn_ties[static_cast<std::size_t>(k)] = 1;
        } else {
          rescan(k);
        }
      } else if (d_new < nn_key[static_cast<std::size_t>(k)].d) {
        nn[static_cast<std::size_t>(k)] = p;
        nn_key[static_cast<std::size_t>(k)] = merged;
        nn_ties[static_cast<std::size_t>(k)] = 1;
      } else if (d_new == nn_key[static_cast<std::size_t>(k)].d) {
        // The incumbent keeps the cache: its ids predate the merged cluster,
        // whose id is the largest yet, so it loses the id tie-break. The
        // count may now include a partner the merge absorbed; that only
        // means an extra rescan later, never a wrong adoption.
        ++nn_ties[static_cast<std::size_t>(k)];
      }
    }
  }
  return tree;
}

std::vector<int> first_cluster_of_size(const Dendrogram& tree, int k) {
  if (k < 2 || k > tree.leaf_count) {
    throw std::invalid_argument("cluster size " + std::to_string(k) + " not in [2, " +
                                std::to_string(tree.leaf_count) + "]");
  }
  for (std::size_t i = 0; i < tree.merges.size(); ++i) {
    if (tree.merges[i].size >= k) {
      return tree.leaves_of(tree.leaf_count + static_cast<int>(i));
    }
  }
  throw std::logic_error("dendrogram has no cluster of size " + std::to_string(k));
}

std::vector<int> cut_to_k(const Dendrogram& tree, int k) {
  const int n = tree.leaf_count;
  if (k < 1 || k > n) {
    throw std::invalid_argument("cut size " + std::to_string(k) + " not in [1, " +
                                std::to_string(n) + "]");
  }

  // Union-find over leaves and merge nodes; apply the first n-k merges.
  std::vector<int> parent(static_cast<std::size_t>(n + static_cast<int>(tree.merges.size())));
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  const auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (int i = 0; i < n - k; ++i) {
    const Merge& m = tree.merges[static_cast<std::size_t>(i)];
    const int node = n + i;
    parent[static_cast<std::size_t>(find(m.left))] = node;
    parent[static_cast<std::size_t>(find(m.right))] = node;
  }

  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  std::vector<int> label_of_root(parent.size(), -1);
  int next = 0;
  for (int leaf = 0; leaf < n; ++leaf) {
    const int root = find(leaf);
    if (label_of_root[static_cast<std::size_t>(root)] < 0) {
      label_of_root[static_cast<std::size_t>(root)] = next++;
    }
    assignment[static_cast<std::size_t>(leaf)] = label_of_root[static_cast<std::size_t>(root)];
  }
  return assignment;
}

}  // namespace biasbench
