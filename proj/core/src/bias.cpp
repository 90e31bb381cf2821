#include "biasbench/bias.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "biasbench/cluster.hpp"
#include "biasbench/errors.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

namespace {

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

Selection finish(const Dataset& data, std::vector<int> indices, std::vector<int> from_cluster) {
  std::sort(indices.begin(), indices.end());
  Selection sel;
  sel.per_class.assign(static_cast<std::size_t>(data.n_classes()), 0);
  for (int row : indices) sel.per_class[static_cast<std::size_t>(data.label_of(row))]++;
  sel.indices = std::move(indices);
  sel.from_cluster = std::move(from_cluster);
  return sel;
}

}  // namespace

void BiasSpec::validate() const {
  switch (kind) {
    case BiasKind::hierarchy:
      if (per_class < 2) throw std::invalid_argument("hierarchy bias needs per_class >= 2");
      if (!(strength > 0.0 && strength <= 1.0)) {
        throw std::invalid_argument("bias strength must be in (0,1]");
      }
      break;
    case BiasKind::random:
      if (per_class < 1) throw std::invalid_argument("random subsample needs per_class >= 1");
      break;
    case BiasKind::joint:
      break;
    case BiasKind::dirichlet:
      if (total < 0) throw std::invalid_argument("dirichlet bias needs total >= 0");
      break;
  }
}

const char* to_string(BiasKind kind) {
  switch (kind) {
    case BiasKind::hierarchy: return "hierarchy";
    case BiasKind::random: return "random";
    case BiasKind::joint: return "joint";
    case BiasKind::dirichlet: return "dirichlet";
  }
  return "?";
}

BiasKind bias_kind_from_string(const std::string& name) {
  if (name == "hierarchy") return BiasKind::hierarchy;
  if (name == "random") return BiasKind::random;
  if (name == "joint") return BiasKind::joint;
  if (name == "dirichlet") return BiasKind::dirichlet;
  throw std::invalid_argument("unknown bias kind '" + name + "'");
}

nlohmann::json Selection::to_json() const {
  return {{"indices", indices}, {"per_class", per_class}, {"from_cluster", from_cluster}};
}

Selection hierarchy_bias(const Dataset& data, int per_class, double strength,
                         std::uint64_t seed) {
  BiasSpec spec;
  spec.kind = BiasKind::hierarchy;
  spec.per_class = per_class;
  spec.strength = strength;
  spec.validate();

  const int n_from_cluster = round_half_up(per_class * strength);
  const int n_from_rest = per_class - n_from_cluster;

  std::vector<int> picked;
  std::vector<int> from_cluster_counts;
  const auto by_class = data.rows_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& rows = by_class[c];
    const int n_c = static_cast<int>(rows.size());
    if (n_c < per_class) {
      throw InfeasibleDataError("class '" + data.class_names[c] + "' has " +
                                std::to_string(n_c) + " rows, needs " +
                                std::to_string(per_class));
    }

    const Dendrogram tree =
        agglomerate(pairwise_euclidean(gather_rows(data.features, rows)), Linkage::ward);
    const std::vector<int> members = first_cluster_of_size(tree, per_class);

    const int outside = n_c - static_cast<int>(members.size());
    if (outside < n_from_rest) {
      throw InfeasibleDataError(
          "class '" + data.class_names[c] + "': dense cluster holds " +
          std::to_string(members.size()) + " of " + std::to_string(n_c) +
          " rows, leaving fewer than " + std::to_string(n_from_rest) + " outside");
    }

    std::set<int> in_cluster(members.begin(), members.end());
    std::vector<int> rest;
    for (int i = 0; i < n_c; ++i) {
      if (!in_cluster.count(i)) rest.push_back(i);
    }

    Rng rng(derive_seed(seed, seed_tag("class"), static_cast<std::uint64_t>(c)));
    for (int pos : rng.sample_without_replacement(static_cast<int>(members.size()),
                                                  n_from_cluster)) {
      picked.push_back(rows[static_cast<std::size_t>(members[static_cast<std::size_t>(pos)])]);
    }
    for (int pos : rng.sample_without_replacement(static_cast<int>(rest.size()), n_from_rest)) {
      picked.push_back(rows[static_cast<std::size_t>(rest[static_cast<std::size_t>(pos)])]);
    }
    from_cluster_counts.push_back(n_from_cluster);
  }
  return finish(data, std::move(picked), std::move(from_cluster_counts));
}

Selection random_subsample(const Dataset& data, int per_class, std::uint64_t seed) {
  if (per_class < 1) throw std::invalid_argument("random subsample needs per_class >= 1");
  std::vector<int> picked;
  const auto by_class = data.rows_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& rows = by_class[c];
    if (static_cast<int>(rows.size()) < per_class) {
      throw InfeasibleDataError("class '" + data.class_names[c] + "' has " +
                                std::to_string(rows.size()) + " rows, needs " +
                                std::to_string(per_class));
    }
    Rng rng(derive_seed(seed, seed_tag("class"), static_cast<std::uint64_t>(c)));
    for (int pos : rng.sample_without_replacement(static_cast<int>(rows.size()), per_class)) {
      picked.push_back(rows[static_cast<std::size_t>(pos)]);
    }
  }
  return finish(data, std::move(picked), {});
}

Eigen::VectorXd joint_inclusion_probabilities(const Dataset& data) {
  const Eigen::RowVectorXd mean = data.features.colwise().mean();
  Eigen::VectorXd dist(data.n_samples());
  for (int i = 0; i < data.n_samples(); ++i) {
    dist(i) = (data.features.row(i) - mean).norm();
  }
  const double avg = dist.mean();
  if (avg == 0.0) return Eigen::VectorXd::Ones(data.n_samples());
  const double lo = dist.minCoeff();
  return ((dist.array() - lo) / -avg).exp();
}

Selection joint_bias(const Dataset& data, std::uint64_t seed) {
  const Eigen::VectorXd p = joint_inclusion_probabilities(data);
  Rng rng(seed);
  std::vector<int> picked;
  for (int i = 0; i < data.n_samples(); ++i) {
    if (rng.uniform() < p(i)) picked.push_back(i);
  }
  return finish(data, std::move(picked), {});
}

Selection dirichlet_bias(const Dataset& data, int total, std::uint64_t seed) {
  const int n = data.n_samples();
  if (total < 1) throw std::invalid_argument("dirichlet bias needs total >= 1");
  if (total > n) {
    throw InfeasibleDataError("dirichlet bias wants " + std::to_string(total) + " of " +
                              std::to_string(n) + " rows");
  }

  Rng rng(seed);
  // Dirichlet(1,...,1) row weights: normalized unit exponentials.
  std::vector<double> weight(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    weight[static_cast<std::size_t>(i)] = rng.exponential();
    sum += weight[static_cast<std::size_t>(i)];
  }
  for (double& w : weight) w /= sum;

  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<int> picked;
  double remaining = 1.0;
  for (int draw = 0; draw < total; ++draw) {
    const double target = rng.uniform() * remaining;
    double acc = 0.0;
    int chosen = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      acc += weight[static_cast<std::size_t>(i)];
      if (target < acc) {
        chosen = i;
        break;
      }
    }
    if (chosen < 0) {  // numerical slack at the top of the range
      for (int i = n - 1; i >= 0; --i) {
        if (!taken[static_cast<std::size_t>(i)]) {
          chosen = i;
          break;
        }
      }
    }
    taken[static_cast<std::size_t>(chosen)] = true;
    remaining -= weight[static_cast<std::size_t>(chosen)];
    picked.push_back(chosen);
  }
  return finish(data, std::move(picked), {});
}

Selection apply_bias(const Dataset& data, const BiasSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case BiasKind::hierarchy:
      return hierarchy_bias(data, spec.per_class, spec.strength, seed);
    case BiasKind::random:
      return random_subsample(data, spec.per_class, seed);
    case BiasKind::joint:
      return joint_bias(data, seed);
    case BiasKind::dirichlet: {
      const int total = spec.total > 0 ? spec.total : spec.per_class * data.n_classes();
      return dirichlet_bias(data, total, seed);
    }
  }
  throw std::invalid_argument("unknown bias kind");
}

std::vector<ShiftSample> selection_shift(const Dataset& data, const Selection& sel) {
  std::vector<ShiftSample> out(static_cast<std::size_t>(data.n_classes()));
  const std::set<int> selected(sel.indices.begin(), sel.indices.end());
  const auto by_class = data.rows_by_class();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& rows = by_class[c];
    const int n_c = static_cast<int>(rows.size());
    for (int i = 0; i < n_c; ++i) {
      double mean_dist = 0.0;
      if (n_c > 1) {
        double sum = 0.0;
        for (int j = 0; j < n_c; ++j) {
          if (j == i) continue;
          sum += (data.features.row(rows[static_cast<std::size_t>(i)]) -
                  data.features.row(rows[static_cast<std::size_t>(j)]))
                     .norm();
        }
        mean_dist = sum / (n_c - 1);
      }
      out[c].all.push_back(mean_dist);
      if (selected.count(rows[static_cast<std::size_t>(i)])) {
        out[c].selected.push_back(mean_dist);
      }
    }
  }
  return out;
}

}  // namespace biasbench
