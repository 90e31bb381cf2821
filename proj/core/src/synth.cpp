#include "biasbench/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "biasbench/rng.hpp"

namespace biasbench {

int SynthSpec::features() const {
  if (classes.empty() || classes.front().empty()) return 0;
  return static_cast<int>(classes.front().front().center.size());
}

void SynthSpec::validate() const {
  if (classes.size() < 2) throw std::invalid_argument("synth needs at least two classes");
  if (samples < static_cast<int>(classes.size())) {
    throw std::invalid_argument("synth needs at least one sample per class");
  }
  const int f = features();
  if (f < 1) throw std::invalid_argument("synth blobs need at least one feature");
  for (const auto& blobs : classes) {
    if (blobs.empty()) throw std::invalid_argument("every synth class needs at least one blob");
    for (const Blob& blob : blobs) {
      if (static_cast<int>(blob.center.size()) != f) {
        throw std::invalid_argument("synth blob centers must share one length");
      }
      if (!blob.center.allFinite()) throw std::invalid_argument("synth blob center must be finite");
      if (!(blob.sigma > 0.0) || !std::isfinite(blob.sigma)) {
        throw std::invalid_argument("synth blob sigma must be positive");
      }
      if (!(blob.weight > 0.0) || !std::isfinite(blob.weight)) {
        throw std::invalid_argument("synth blob weight must be positive");
      }
    }
  }
}

namespace {

// floor(share) per part plus one extra for the largest remainders, ties
// toward the lower index; sums to total.
std::vector<int> proportional_counts(int total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  const int n = static_cast<int>(weights.size());
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int i = 0; i < n; ++i) {
    const double share = total * weights[static_cast<std::size_t>(i)] / sum;
    counts[static_cast<std::size_t>(i)] = static_cast<int>(share);
    assigned += counts[static_cast<std::size_t>(i)];
    remainders.emplace_back(share - counts[static_cast<std::size_t>(i)], i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int extra = 0; extra < total - assigned; ++extra) {
    counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(extra)].second)] += 1;
  }
  return counts;
}

std::vector<std::string> class_labels(int n) {
  const std::size_t width = std::to_string(n - 1).size();
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    std::string digits = std::to_string(c);
    names.push_back("c" + std::string(width - digits.size(), '0') + digits);
  }
  return names;
}

}  // namespace

SynthData make_blobs(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int n_classes = static_cast<int>(spec.classes.size());
  const int f = spec.features();

  const std::vector<int> class_counts =
      proportional_counts(spec.samples, std::vector<double>(static_cast<std::size_t>(n_classes), 1.0));

  Eigen::MatrixXd features(spec.samples, f);
  Eigen::MatrixXi labels = Eigen::MatrixXi::Zero(spec.samples, n_classes);
  std::vector<int> blob_of(static_cast<std::size_t>(spec.samples), 0);

  Rng rng(seed);
  int row = 0;
  int blob_base = 0;
  for (int c = 0; c < n_classes; ++c) {
    const auto& blobs = spec.classes[static_cast<std::size_t>(c)];
    std::vector<double> weights;
    weights.reserve(blobs.size());
    for (const Blob& blob : blobs) weights.push_back(blob.weight);
    const std::vector<int> blob_counts = proportional_counts(class_counts[static_cast<std::size_t>(c)], weights);
    for (std::size_t g = 0; g < blobs.size(); ++g) {
      const Blob& blob = blobs[g];
      for (int i = 0; i < blob_counts[g]; ++i) {
        for (int j = 0; j < f; ++j) {
          features(row, j) = blob.center(j) + blob.sigma * rng.normal();
        }
        labels(row, c) = 1;
        blob_of[static_cast<std::size_t>(row)] = blob_base + static_cast<int>(g);
        ++row;
      }
    }
    blob_base += static_cast<int>(blobs.size());
  }

  std::vector<int> order(static_cast<std::size_t>(spec.samples));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  SynthData out;
  out.data.features.resize(spec.samples, f);
  out.data.labels.resize(spec.samples, n_classes);
  out.blob_of.resize(static_cast<std::size_t>(spec.samples));
  for (int i = 0; i < spec.samples; ++i) {
    const int src = order[static_cast<std::size_t>(i)];
    out.data.features.row(i) = features.row(src);
    out.data.labels.row(i) = labels.row(src);
    out.blob_of[static_cast<std::size_t>(i)] = blob_of[static_cast<std::size_t>(src)];
  }
  out.data.class_names = class_labels(n_classes);
  out.data.feature_names.reserve(static_cast<std::size_t>(f));
  for (int j = 0; j < f; ++j) out.data.feature_names.push_back("f" + std::to_string(j));
  out.data.column_kinds.assign(static_cast<std::size_t>(f), ColumnKind::continuous);
  out.data.validate();
  return out;
}

SynthSpec blob_fixture() {
  const int f = 10;
  const double island = 4.0;  // shared dense-blob offset in f2..f9

  auto center = [f, island](double x, double y, bool dense) {
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Constant(f, dense ? island : 0.0);
    c(0) = x;
    c(1) = y;
    return c;
  };

  SynthSpec spec;
  spec.samples = 2000;
  spec.classes = {
      {{center(5.4, 0.0, true), 0.4, 0.2}, {center(4.56, 5.0, false), 1.2, 0.8}},
      {{center(6.6, 0.0, true), 0.4, 0.2}, {center(9.56, 5.0, false), 1.2, 0.8}},
  };
  return spec;
}

}  // namespace biasbench
