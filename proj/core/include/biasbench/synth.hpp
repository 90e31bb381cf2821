#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "biasbench/dataset.hpp"

namespace biasbench {

// One isotropic Gaussian component of a class.
struct Blob {
  Eigen::RowVectorXd center;  // length defines the feature count
  double sigma = 1.0;
  double weight = 1.0;  // share of the class, normalized over its blobs
};

struct SynthSpec {
  int samples = 2000;
  std::vector<std::vector<Blob>> classes;  // blobs per class

  int features() const;
  void validate() const;
};

struct SynthData {
  Dataset data;
  std::vector<int> blob_of;  // per row: global blob index, class-major
};

// Samples each class as a mixture of its blobs. Rows are split evenly across
// classes and proportionally to blob weights within a class (largest
// remainders break ties toward lower indices), then shuffled. Classes are
// named c0, c1, ... (zero-padded when needed to keep them sorted) and
// features f0, f1, ...
SynthData make_blobs(const SynthSpec& spec, std::uint64_t seed);

// The two-class benchmark fixture: 2000 samples, 10 features. Each class is
// a small dense blob plus a large loose one. The dense blobs share an offset
// in the last eight features, so they form tight islands far from the loose
// mass; along f0 the two islands sit close together while the loose blobs
// are far apart, with their midline shifted off the islands' midline. A
// model fit mostly on island samples is imperfect between the islands and
// clips the nearer loose blob; both mistakes are recoverable from unlabeled
// data. Scales are chosen to survive per-column standardization.
SynthSpec blob_fixture();

}  // namespace biasbench
