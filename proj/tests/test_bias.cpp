#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "biasbench/bias.hpp"
#include "biasbench/dataset.hpp"
#include "biasbench/errors.hpp"
#include "biasbench/rng.hpp"
#include "support/fixtures.hpp"

using biasbench::BiasKind;
using biasbench::BiasSpec;
using biasbench::Dataset;
using biasbench::InfeasibleDataError;
using biasbench::Selection;
using biasbench::apply_bias;
using biasbench::dirichlet_bias;
using biasbench::hierarchy_bias;
using biasbench::joint_bias;
using biasbench::joint_inclusion_probabilities;
using biasbench::random_subsample;
using biasbench::selection_shift;
using testsupport::make_dataset;

namespace {

// Two classes, each a tight blob plus a loose blob. Rows 0..59: class 0
// (40 tight at (0,0), 20 loose around (30,0)); rows 60..119: class 1
// (40 tight at (0,100), 20 loose around (30,100)).
Dataset blob_fixture(std::uint64_t seed) {
  biasbench::Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  const auto add = [&](int count, double cx, double cy, double spread, int label) {
    for (int i = 0; i < count; ++i) {
      rows.push_back({cx + spread * rng.normal(), cy + spread * rng.normal()});
      labels.push_back(label);
    }
  };
  add(40, 0.0, 0.0, 0.05, 0);
  add(20, 30.0, 0.0, 3.0, 0);
  add(40, 0.0, 100.0, 0.05, 1);
  add(20, 30.0, 100.0, 3.0, 1);
  return make_dataset(rows, labels, 2);
}

bool is_ascending_unique(const std::vector<int>& v) {
  return std::is_sorted(v.begin(), v.end()) &&
         std::adjacent_find(v.begin(), v.end()) == v.end();
}

}  // namespace

TEST_CASE("random_subsample keeps exactly k rows per class") {
  const Dataset d = blob_fixture(1);
  const Selection sel = random_subsample(d, 15, 7);
  CHECK(sel.indices.size() == 30);
  CHECK(sel.per_class == std::vector<int>{15, 15});
  CHECK(is_ascending_unique(sel.indices));
  for (int row : sel.indices) {
    CHECK(row >= 0);
    CHECK(row < d.n_samples());
  }
}

TEST_CASE("random_subsample is seed-deterministic") {
  const Dataset d = blob_fixture(2);
  const Selection a = random_subsample(d, 10, 5);
  const Selection b = random_subsample(d, 10, 5);
  const Selection c = random_subsample(d, 10, 6);
  CHECK(a.indices == b.indices);
  CHECK(a.indices != c.indices);
}

TEST_CASE("random_subsample rejects oversized requests") {
  const Dataset d = blob_fixture(3);
  CHECK_THROWS_AS(random_subsample(d, 61, 0), InfeasibleDataError);
}

TEST_CASE("hierarchy_bias draws the biased share from the dense cluster") {
  const Dataset d = blob_fixture(4);
  const int k = 20;
  const Selection sel = hierarchy_bias(d, k, 0.9, 11);
  CHECK(sel.indices.size() == 40);
  CHECK(sel.per_class == std::vector<int>{20, 20});
  CHECK(sel.from_cluster == std::vector<int>{18, 18});
  CHECK(is_ascending_unique(sel.indices));

  // The tight blob of class 0 is rows 0..39, of class 1 rows 60..99. With
  // round(20 * 0.9) = 18 drawn from the dense cluster and the cluster living
  // inside the tight blob, at least 18 selected rows per class are tight and
  // exactly 2 come from elsewhere.
  int tight0 = 0, loose0 = 0, tight1 = 0, loose1 = 0;
  for (int row : sel.indices) {
    if (row < 40) tight0++;
    else if (row < 60) loose0++;
    else if (row < 100) tight1++;
    else loose1++;
  }
  CHECK(tight0 >= 18);
  CHECK(tight1 >= 18);
  CHECK(tight0 + loose0 == 20);
  CHECK(tight1 + loose1 == 20);
}

TEST_CASE("hierarchy_bias with strength 1 stays inside the cluster") {
  const Dataset d = blob_fixture(5);
  const Selection sel = hierarchy_bias(d, 20, 1.0, 3);
  CHECK(sel.from_cluster == std::vector<int>{20, 20});
  for (int row : sel.indices) {
    const bool tight = row < 40 || (row >= 60 && row < 100);
    CHECK(tight);
  }
}

TEST_CASE("hierarchy_bias is seed-deterministic and seed-sensitive") {
  const Dataset d = blob_fixture(6);
  CHECK(hierarchy_bias(d, 12, 0.75, 9).indices == hierarchy_bias(d, 12, 0.75, 9).indices);
  CHECK(hierarchy_bias(d, 12, 0.75, 9).indices != hierarchy_bias(d, 12, 0.75, 10).indices);
}

TEST_CASE("hierarchy_bias reports infeasible geometry") {
  SUBCASE("class smaller than k") {
    const Dataset d = blob_fixture(7);
    CHECK_THROWS_AS(hierarchy_bias(d, 61, 0.9, 0), InfeasibleDataError);
  }
  SUBCASE("complement cannot cover the unbiased remainder") {
    // One compact blob per class: the first cluster of size k swallows
    // everything, leaving no complement for the k - round(k*b) rows.
    biasbench::Rng rng(8);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
      rows.push_back({0.01 * rng.normal(), 0.01 * rng.normal()});
      labels.push_back(0);
    }
    for (int i = 0; i < 20; ++i) {
      rows.push_back({50 + 0.01 * rng.normal(), 0.01 * rng.normal()});
      labels.push_back(1);
    }
    const Dataset d = make_dataset(rows, labels, 2);
    CHECK_THROWS_AS(hierarchy_bias(d, 20, 0.9, 0), InfeasibleDataError);
    CHECK_NOTHROW(hierarchy_bias(d, 20, 1.0, 0));
  }
}

TEST_CASE("hierarchy_bias validates parameters") {
  const Dataset d = blob_fixture(9);
  CHECK_THROWS_AS(hierarchy_bias(d, 1, 0.9, 0), std::invalid_argument);
  CHECK_THROWS_AS(hierarchy_bias(d, 10, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(hierarchy_bias(d, 10, 1.1, 0), std::invalid_argument);
}

TEST_CASE("joint inclusion probabilities peak at the mean") {
  // Points {0,1,2} on a line: distances to the mean are {1,0,1}, mean
  // distance 2/3, so p = {exp(-1.5), 1, exp(-1.5)}.
  const Dataset d = make_dataset({{0.0}, {1.0}, {2.0}}, {0, 1, 0}, 2);
  const Eigen::VectorXd p = joint_inclusion_probabilities(d);
  CHECK(p(0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p(2) == doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
}

TEST_CASE("joint_bias keeps identical rows with probability one") {
  const Dataset d = make_dataset({{3.0}, {3.0}, {3.0}, {3.0}}, {0, 1, 0, 1}, 2);
  const Selection sel = joint_bias(d, 123);
  CHECK(sel.indices == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("joint_bias keeps a central majority of a normal cloud") {
  biasbench::Rng rng(10);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> r;
    for (int j = 0; j < 5; ++j) r.push_back(rng.normal());
    rows.push_back(r);
    labels.push_back(i % 2);
  }
  const Dataset d = make_dataset(rows, labels, 2);
  double mean_fraction = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Selection sel = joint_bias(d, seed);
    CHECK(is_ascending_unique(sel.indices));
    mean_fraction += sel.indices.size() / 200.0;
  }
  mean_fraction /= 20.0;
  CHECK(mean_fraction > 0.4);
  CHECK(mean_fraction < 0.8);
}

TEST_CASE("joint_bias prefers central rows") {
  // A dominant central mass plus a small distant group. The overall mean
  // sits inside the mass, so the distant rows should be kept far less often.
  biasbench::Rng rng(12);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 180; ++i) {
    rows.push_back({0.1 * rng.normal()});
    labels.push_back(i % 2);
  }
  for (int i = 0; i < 20; ++i) {
    rows.push_back({10.0 + 0.1 * rng.normal()});
    labels.push_back(i % 2);
  }
  const Dataset d = make_dataset(rows, labels, 2);
  int central = 0, outlier = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (int row : joint_bias(d, seed).indices) {
      (row < 180 ? central : outlier)++;
    }
  }
  // Keep rates, normalized by group size.
  CHECK(central / 180.0 > 5.0 * (outlier / 20.0));
}

TEST_CASE("dirichlet_bias keeps the requested total") {
  const Dataset d = blob_fixture(11);
  const Selection sel = dirichlet_bias(d, 50, 17);
  CHECK(sel.indices.size() == 50);
  CHECK(is_ascending_unique(sel.indices));
  CHECK(sel.per_class[0] + sel.per_class[1] == 50);
  CHECK(dirichlet_bias(d, 50, 17).indices == sel.indices);
  CHECK_THROWS_AS(dirichlet_bias(d, 121, 0), InfeasibleDataError);
  CHECK_THROWS_AS(dirichlet_bias(d, 0, 0), std::invalid_argument);
}

TEST_CASE("dirichlet_bias lets class balance vary across seeds") {
  const Dataset d = blob_fixture(13);
  std::vector<double> balance;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Selection sel = dirichlet_bias(d, 40, seed);
    balance.push_back(sel.per_class[0] / 40.0);
  }
  const double mean = std::accumulate(balance.begin(), balance.end(), 0.0) / balance.size();
  double var = 0.0;
  for (double b : balance) var += (b - mean) * (b - mean);
  var /= balance.size();
  CHECK(std::sqrt(var) > 0.0);
}

TEST_CASE("dirichlet_bias selecting everything keeps every row") {
  const Dataset d = make_dataset({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 1, 0, 1}, 2);
  const Selection sel = dirichlet_bias(d, 4, 99);
  CHECK(sel.indices == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("apply_bias dispatches on the spec kind") {
  const Dataset d = blob_fixture(14);
  BiasSpec spec;
  spec.kind = BiasKind::random;
  spec.per_class = 10;
  CHECK(apply_bias(d, spec, 3).indices == random_subsample(d, 10, 3).indices);

  spec.kind = BiasKind::hierarchy;
  spec.per_class = 15;
  spec.strength = 0.8;
  CHECK(apply_bias(d, spec, 3).indices == hierarchy_bias(d, 15, 0.8, 3).indices);

  spec.kind = BiasKind::joint;
  CHECK(apply_bias(d, spec, 3).indices == joint_bias(d, 3).indices);

  spec.kind = BiasKind::dirichlet;
  spec.per_class = 10;
  spec.total = 0;  // defaults to per_class * classes
  CHECK(apply_bias(d, spec, 3).indices == dirichlet_bias(d, 20, 3).indices);
}

TEST_CASE("bias kind names round-trip") {
  for (const BiasKind kind : {BiasKind::hierarchy, BiasKind::random, BiasKind::joint,
                              BiasKind::dirichlet}) {
    CHECK(biasbench::bias_kind_from_string(biasbench::to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(biasbench::bias_kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("selection_shift computes mean distances to class peers") {
  // Collinear rows {0,1,2} in one class: distances to the other two average
  // to 1.5, 1.0, 1.5. The second class supplies the required second label.
  const Dataset d = make_dataset({{0.0}, {1.0}, {2.0}, {100.0}, {101.0}}, {0, 0, 0, 1, 1}, 2);
  Selection sel;
  sel.indices = {0, 1, 3};
  sel.per_class = {2, 1};
  const auto shift = selection_shift(d, sel);
  REQUIRE(shift.size() == 2);
  CHECK(shift[0].all == std::vector<double>{1.5, 1.0, 1.5});
  CHECK(shift[0].selected == std::vector<double>{1.5, 1.0});
  CHECK(shift[1].all == std::vector<double>{1.0, 1.0});
  CHECK(shift[1].selected == std::vector<double>{1.0});
}

TEST_CASE("selection_shift returns zeros for singleton classes") {
  const Dataset d = make_dataset({{0.0}, {5.0}, {9.0}}, {0, 0, 1}, 2);
  Selection sel;
  sel.indices = {2};
  sel.per_class = {0, 1};
  const auto shift = selection_shift(d, sel);
  CHECK(shift[1].all == std::vector<double>{0.0});
  CHECK(shift[1].selected == std::vector<double>{0.0});
}

TEST_CASE("hierarchy selections concentrate low-spread rows") {
  // Selected rows should on average sit closer to their class peers than
  // the class at large: the induced shift that the pipeline measures.
  const Dataset d = blob_fixture(15);
  const Selection sel = hierarchy_bias(d, 20, 0.9, 21);
  const auto shift = selection_shift(d, sel);
  for (const auto& cls : shift) {
    const double sel_mean =
        std::accumulate(cls.selected.begin(), cls.selected.end(), 0.0) / cls.selected.size();
    const double all_mean =
        std::accumulate(cls.all.begin(), cls.all.end(), 0.0) / cls.all.size();
    CHECK(sel_mean < all_mean);
  }
}
