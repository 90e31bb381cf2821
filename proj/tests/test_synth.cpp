#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "biasbench/synth.hpp"

using biasbench::Blob;
using biasbench::SynthData;
using biasbench::SynthSpec;
using biasbench::blob_fixture;
using biasbench::make_blobs;

namespace {

Eigen::RowVectorXd point(std::initializer_list<double> values) {
  Eigen::RowVectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

SynthSpec two_class_spec(int samples) {
  SynthSpec spec;
  spec.samples = samples;
  spec.classes = {
      {{point({0.0, 0.0}), 0.5, 1.0}},
      {{point({10.0, 10.0}), 0.5, 1.0}},
  };
  return spec;
}

std::vector<const Blob*> flatten(const SynthSpec& spec) {
  std::vector<const Blob*> blobs;
  for (const auto& cls : spec.classes) {
    for (const Blob& b : cls) blobs.push_back(&b);
  }
  return blobs;
}

}  // namespace

TEST_CASE("make_blobs is deterministic in the seed") {
  const SynthSpec spec = blob_fixture();
  const SynthData a = make_blobs(spec, 7);
  const SynthData b = make_blobs(spec, 7);
  const SynthData c = make_blobs(spec, 8);
  CHECK((a.data.features - b.data.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.data.labels == b.data.labels);
  CHECK(a.blob_of == b.blob_of);
  CHECK((a.data.features - c.data.features).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("fixture counts: even classes, weighted blobs") {
  const SynthData d = make_blobs(blob_fixture(), 3);
  REQUIRE(d.data.n_samples() == 2000);
  REQUIRE(d.data.n_features() == 10);
  REQUIRE(d.data.n_classes() == 2);
  CHECK(d.data.class_names == std::vector<std::string>{"c0", "c1"});

  std::vector<int> class_count(2, 0);
  std::vector<int> blob_count(4, 0);
  for (int i = 0; i < d.data.n_samples(); ++i) {
    class_count[static_cast<std::size_t>(d.data.label_of(i))] += 1;
    blob_count[static_cast<std::size_t>(d.blob_of[static_cast<std::size_t>(i)])] += 1;
  }
  CHECK(class_count == std::vector<int>{1000, 1000});
  CHECK(blob_count == std::vector<int>{200, 800, 200, 800});
}

TEST_CASE("blob ids always agree with class labels") {
  const SynthData d = make_blobs(blob_fixture(), 11);
  for (int i = 0; i < d.data.n_samples(); ++i) {
    const int blob = d.blob_of[static_cast<std::size_t>(i)];
    CHECK(blob / 2 == d.data.label_of(i));
  }
}

TEST_CASE("rows come out shuffled, not class-sorted") {
  const SynthData d = make_blobs(blob_fixture(), 5);
  std::set<int> seen;
  for (int i = 0; i < 100; ++i) seen.insert(d.data.label_of(i));
  CHECK(seen.size() == 2);
}

TEST_CASE("largest-remainder counts on an odd total") {
  SynthSpec spec = two_class_spec(7);
  spec.classes[0].push_back({point({5.0, 0.0}), 0.5, 1.0});
  // 7 samples -> classes 4/3; class 0 splits 4 over equal weights -> 2/2,
  // class 1 keeps 3.
  const SynthData d = make_blobs(spec, 1);
  std::vector<int> blob_count(3, 0);
  for (int v : d.blob_of) blob_count[static_cast<std::size_t>(v)] += 1;
  CHECK(blob_count == std::vector<int>{2, 2, 3});
}

TEST_CASE("per-blob sample moments match the generator") {
  const SynthSpec spec = blob_fixture();
  const SynthData d = make_blobs(spec, 21);
  const auto blobs = flatten(spec);
  for (std::size_t g = 0; g < blobs.size(); ++g) {
    std::vector<int> rows;
    for (int i = 0; i < d.data.n_samples(); ++i) {
      if (d.blob_of[static_cast<std::size_t>(i)] == static_cast<int>(g)) rows.push_back(i);
    }
    REQUIRE(rows.size() >= 200);
    Eigen::MatrixXd x(rows.size(), d.data.n_features());
    for (std::size_t r = 0; r < rows.size(); ++r) x.row(static_cast<int>(r)) = d.data.features.row(rows[r]);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    CHECK((mean - blobs[g]->center).cwiseAbs().maxCoeff() < 0.25);
    const Eigen::RowVectorXd var =
        (x.rowwise() - mean).array().square().colwise().mean();
    for (int j = 0; j < d.data.n_features(); ++j) {
      CHECK(std::sqrt(var(j)) == doctest::Approx(blobs[g]->sigma).epsilon(0.15));
    }
  }
}

TEST_CASE("nearest blob center recovers the generating blob") {
  const SynthSpec spec = blob_fixture();
  const SynthData d = make_blobs(spec, 33);
  const auto blobs = flatten(spec);
  // The two dense islands overlap by design, so score island-vs-loose
  // placement for every row plus blob recovery among the loose rows.
  int island_hits = 0;
  int loose_rows = 0, loose_hits = 0;
  for (int i = 0; i < d.data.n_samples(); ++i) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < blobs.size(); ++g) {
      const double dist = (d.data.features.row(i) - blobs[g]->center).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(g);
      }
    }
    const int truth = d.blob_of[static_cast<std::size_t>(i)];
    island_hits += (best % 2) == (truth % 2);
    if (truth % 2 == 1) {
      loose_rows += 1;
      loose_hits += best == truth;
    }
  }
  CHECK(island_hits >= 1995);
  REQUIRE(loose_rows == 1600);
  CHECK(loose_hits >= 1580);
}

TEST_CASE("synth spec validation") {
  SynthSpec spec = two_class_spec(10);
  CHECK_NOTHROW(spec.validate());

  SynthSpec one_class = spec;
  one_class.classes.pop_back();
  CHECK_THROWS_AS(one_class.validate(), std::invalid_argument);

  SynthSpec empty_blobs = spec;
  empty_blobs.classes[1].clear();
  CHECK_THROWS_AS(empty_blobs.validate(), std::invalid_argument);

  SynthSpec bad_sigma = spec;
  bad_sigma.classes[0][0].sigma = 0.0;
  CHECK_THROWS_AS(bad_sigma.validate(), std::invalid_argument);

  SynthSpec bad_weight = spec;
  bad_weight.classes[0][0].weight = -1.0;
  CHECK_THROWS_AS(bad_weight.validate(), std::invalid_argument);

  SynthSpec ragged = spec;
  ragged.classes[1][0].center = point({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);

  SynthSpec too_few = spec;
  too_few.samples = 1;
  CHECK_THROWS_AS(too_few.validate(), std::invalid_argument);
}
