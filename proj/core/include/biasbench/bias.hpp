#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "biasbench/dataset.hpp"

namespace biasbench {

enum class BiasKind { hierarchy, random, joint, dirichlet };

struct BiasSpec {
  BiasKind kind = BiasKind::hierarchy;
  int per_class = 30;     // k: rows kept per class (hierarchy, random)
  double strength = 0.9;  // b: share of k drawn from the dense cluster (hierarchy)
  int total = 0;          // rows kept overall (dirichlet); 0 means per_class * classes

  void validate() const;
};

const char* to_string(BiasKind kind);
BiasKind bias_kind_from_string(const std::string& name);

struct Selection {
  std::vector<int> indices;       // ascending rows into the source dataset
  std::vector<int> per_class;     // rows kept per class
  std::vector<int> from_cluster;  // hierarchy only: rows drawn from the dense cluster

  nlohmann::json to_json() const;
};

// Per class: clusters the class rows (Ward on Euclidean distances), finds the
// earliest cluster of at least per_class rows, keeps round(per_class *
// strength) of its members plus the remainder from outside it. Classes whose
// complement cannot cover the remainder make the selection infeasible.
// Each class consumes its own stream derived from (seed, class index).
Selection hierarchy_bias(const Dataset& data, int per_class, double strength, std::uint64_t seed);

// Uniform per-class subsample of the same size, the unbiased counterpart.
Selection random_subsample(const Dataset& data, int per_class, std::uint64_t seed);

// Independent coin per row with probability exp(-(d_i - d_min) / mean(d)),
// d_i the Euclidean distance to the overall feature mean. Rows near the mean
// are near-certain keeps; the tail thins out. Label-blind, so class balance
// drifts with the geometry.
Selection joint_bias(const Dataset& data, std::uint64_t seed);
Eigen::VectorXd joint_inclusion_probabilities(const Dataset& data);

// Draws `total` rows without replacement with Dirichlet(1,...,1) row weights,
// so different seeds concentrate on different rows and class balance varies.
Selection dirichlet_bias(const Dataset& data, int total, std::uint64_t seed);

Selection apply_bias(const Dataset& data, const BiasSpec& spec, std::uint64_t seed);

// Mean distance from each same-class row to the other rows of its class,
// over the full dataset (`all`) and restricted to the selected rows
// (`selected`). These are the samples compared by the distribution-shift
// test. Classes with fewer than two rows yield zeros.
struct ShiftSample {
  std::vector<double> selected;
  std::vector<double> all;
};
std::vector<ShiftSample> selection_shift(const Dataset& data, const Selection& sel);

}  // namespace biasbench
