#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "biasbench/cluster.hpp"
#include "biasbench/rng.hpp"
#include "support/cluster_oracle.hpp"

using biasbench::DistanceMatrix;
using biasbench::Dendrogram;
using biasbench::Linkage;
using biasbench::agglomerate;
using biasbench::cut_to_k;
using biasbench::first_cluster_of_size;
using biasbench::pairwise_euclidean;
using testsupport::OracleLinkage;
using testsupport::oracle_agglomerate;

namespace {

Eigen::MatrixXd random_points(biasbench::Rng& rng, int n, int f, double span = 10.0) {
  Eigen::MatrixXd x(n, f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) x(i, j) = span * rng.uniform();
  }
  return x;
}

Eigen::MatrixXd line_points(const std::vector<double>& coords) {
  Eigen::MatrixXd x(static_cast<int>(coords.size()), 1);
  for (std::size_t i = 0; i < coords.size(); ++i) x(static_cast<int>(i), 0) = coords[i];
  return x;
}

// Pair of leaf sets for one merge, ordered by smallest member, so engine and
// oracle merges can be compared regardless of internal id bookkeeping.
std::pair<std::vector<int>, std::vector<int>> canonical_sides(const Dendrogram& tree,
                                                              std::size_t step) {
  auto a = tree.leaves_of(tree.merges[step].left);
  auto b = tree.leaves_of(tree.merges[step].right);
  if (b.front() < a.front()) std::swap(a, b);
  return {a, b};
}

}  // namespace

TEST_CASE("pairwise_euclidean computes symmetric distances") {
  Eigen::MatrixXd x(3, 2);
  x << 0, 0, 3, 4, 0, 1;
  const DistanceMatrix d = pairwise_euclidean(x);
  CHECK(d.euclidean);
  CHECK(d.size() == 3);
  CHECK(d.d(0, 1) == doctest::Approx(5.0));
  CHECK(d.d(1, 0) == d.d(0, 1));
  CHECK(d.d(0, 2) == doctest::Approx(1.0));
  CHECK(d.d(1, 2) == doctest::Approx(std::sqrt(18.0)));
  CHECK(d.d.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("from_matrix rejects malformed distance matrices") {
  Eigen::MatrixXd ok(2, 2);
  ok << 0, 1, 1, 0;
  CHECK_NOTHROW(DistanceMatrix::from_matrix(ok, false));

  Eigen::MatrixXd asym = ok;
  asym(0, 1) = 2.0;
  CHECK_THROWS_AS(DistanceMatrix::from_matrix(asym, false), std::invalid_argument);

  Eigen::MatrixXd negdiag = ok;
  negdiag(0, 0) = 0.5;
  CHECK_THROWS_AS(DistanceMatrix::from_matrix(negdiag, false), std::invalid_argument);

  Eigen::MatrixXd negative = ok;
  negative(0, 1) = negative(1, 0) = -1.0;
  CHECK_THROWS_AS(DistanceMatrix::from_matrix(negative, false), std::invalid_argument);

  Eigen::MatrixXd rect(2, 3);
  rect.setZero();
  CHECK_THROWS_AS(DistanceMatrix::from_matrix(rect, false), std::invalid_argument);
}

TEST_CASE("single linkage on a line merges nearest points first") {
  const Dendrogram tree = agglomerate(pairwise_euclidean(line_points({0, 1, 10})), Linkage::single);
  REQUIRE(tree.merges.size() == 2);
  CHECK(tree.merges[0].left == 0);
  CHECK(tree.merges[0].right == 1);
  CHECK(tree.merges[0].height == doctest::Approx(1.0));
  CHECK(tree.merges[0].size == 2);
  // Remaining point 2 joins the {0,1} cluster (id 3) at distance 9.
  CHECK(tree.merges[1].left == 2);
  CHECK(tree.merges[1].right == 3);
  CHECK(tree.merges[1].height == doctest::Approx(9.0));
  CHECK(tree.merges[1].size == 3);
}

TEST_CASE("ward heights follow the Lance-Williams update on squared distances") {
  const Dendrogram tree = agglomerate(pairwise_euclidean(line_points({0, 1, 10})), Linkage::ward);
  REQUIRE(tree.merges.size() == 2);
  CHECK(tree.merges[0].height == doctest::Approx(1.0).epsilon(1e-15));
  // ((1+1)*100 + (1+1)*81 - 1*1) / 3 = 361/3.
  CHECK(tree.merges[1].height == doctest::Approx(361.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("ward linkage requires the Euclidean provenance flag") {
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 1, 0;
  const DistanceMatrix d = DistanceMatrix::from_matrix(m, false);
  CHECK_THROWS_AS(agglomerate(d, Linkage::ward), std::invalid_argument);
  CHECK_NOTHROW(agglomerate(d, Linkage::single));
}

TEST_CASE("equal distances break ties toward the smallest cluster ids") {
  Eigen::MatrixXd m(3, 3);
  m << 0, 1, 1, 1, 0, 1, 1, 1, 0;
  const Dendrogram tree = agglomerate(DistanceMatrix::from_matrix(m, false), Linkage::single);
  CHECK(tree.merges[0].left == 0);
  CHECK(tree.merges[0].right == 1);
  CHECK(tree.merges[1].left == 2);
  CHECK(tree.merges[1].right == 3);
}

TEST_CASE("merge heights are nondecreasing for both linkages") {
  biasbench::Rng rng(91);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = random_points(rng, 3 + static_cast<int>(rng.below(20)), 3);
    for (const Linkage linkage : {Linkage::single, Linkage::ward}) {
      const Dendrogram tree = agglomerate(pairwise_euclidean(x), linkage);
      for (std::size_t i = 1; i < tree.merges.size(); ++i) {
        CHECK(tree.merges[i].height >= tree.merges[i - 1].height);
      }
    }
  }
}

TEST_CASE("single linkage merge heights equal the MST edge weights") {
  biasbench::Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::MatrixXd x = random_points(rng, 4 + static_cast<int>(rng.below(24)), 2);
    const Dendrogram tree = agglomerate(pairwise_euclidean(x), Linkage::single);
    std::vector<double> heights;
    for (const auto& m : tree.merges) heights.push_back(m.height);
    std::sort(heights.begin(), heights.end());
    const auto mst = testsupport::mst_edge_weights(x);
    REQUIRE(heights.size() == mst.size());
    for (std::size_t i = 0; i < mst.size(); ++i) {
      CHECK(heights[i] == doctest::Approx(mst[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("agglomerate matches the from-scratch oracle") {
  biasbench::Rng rng(1234);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(22));
    const int f = 1 + static_cast<int>(rng.below(4));
    const Eigen::MatrixXd x = random_points(rng, n, f);
    for (const Linkage linkage : {Linkage::single, Linkage::ward}) {
      const Dendrogram tree = agglomerate(pairwise_euclidean(x), linkage);
      const auto reference = oracle_agglomerate(
          x, linkage == Linkage::single ? OracleLinkage::single : OracleLinkage::ward);
      REQUIRE(tree.merges.size() == reference.size());
      for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto [a, b] = canonical_sides(tree, i);
        CHECK(a == reference[i].left_leaves);
        CHECK(b == reference[i].right_leaves);
        const double got = tree.merges[i].height;
        const double want = reference[i].height;
        if (linkage == Linkage::single) {
          CHECK(got == want);
        } else {
          CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("agglomerate is deterministic") {
  biasbench::Rng rng(5);
  const Eigen::MatrixXd x = random_points(rng, 16, 3);
  const Dendrogram a = agglomerate(pairwise_euclidean(x), Linkage::ward);
  const Dendrogram b = agglomerate(pairwise_euclidean(x), Linkage::ward);
  REQUIRE(a.merges.size() == b.merges.size());
  for (std::size_t i = 0; i < a.merges.size(); ++i) {
    CHECK(a.merges[i].left == b.merges[i].left);
    CHECK(a.merges[i].right == b.merges[i].right);
    CHECK(a.merges[i].height == b.merges[i].height);
  }
}

TEST_CASE("degenerate sizes still produce valid dendrograms") {
  Eigen::MatrixXd one(1, 1);
  one.setZero();
  const Dendrogram single_leaf = agglomerate(DistanceMatrix::from_matrix(one, true), Linkage::ward);
  CHECK(single_leaf.leaf_count == 1);
  CHECK(single_leaf.merges.empty());

  const Dendrogram pair = agglomerate(pairwise_euclidean(line_points({0, 2})), Linkage::single);
  REQUIRE(pair.merges.size() == 1);
  CHECK(pair.merges[0].size == 2);
  CHECK(pair.leaves_of(2) == std::vector<int>{0, 1});
}

TEST_CASE("first_cluster_of_size returns the earliest big-enough merge") {
  const Dendrogram tree = agglomerate(pairwise_euclidean(line_points({0, 1, 10})), Linkage::ward);
  CHECK(first_cluster_of_size(tree, 2) == std::vector<int>{0, 1});
  CHECK(first_cluster_of_size(tree, 3) == std::vector<int>{0, 1, 2});
  CHECK_THROWS_AS(first_cluster_of_size(tree, 1), std::invalid_argument);
  CHECK_THROWS_AS(first_cluster_of_size(tree, 4), std::invalid_argument);
}

TEST_CASE("first_cluster_of_size lands inside one blob of a two-blob cloud") {
  biasbench::Rng rng(77);
  Eigen::MatrixXd x(100, 2);
  // 40 points near the origin, 60 near (50, 50).
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
  }
  for (int i = 40; i < 100; ++i) {
    x(i, 0) = 50.0 + rng.normal();
    x(i, 1) = 50.0 + rng.normal();
  }
  for (const Linkage linkage : {Linkage::single, Linkage::ward}) {
    const auto members = first_cluster_of_size(agglomerate(pairwise_euclidean(x), linkage), 30);
    CHECK(members.size() >= 30);
    const bool all_low = std::all_of(members.begin(), members.end(), [](int i) { return i < 40; });
    const bool all_high = std::all_of(members.begin(), members.end(), [](int i) { return i >= 40; });
    CHECK((all_low || all_high));
  }
}

TEST_CASE("cut_to_k hand cases") {
  const Dendrogram tree = agglomerate(pairwise_euclidean(line_points({0, 1, 10})), Linkage::single);
  CHECK(cut_to_k(tree, 1) == std::vector<int>{0, 0, 0});
  CHECK(cut_to_k(tree, 2) == std::vector<int>{0, 0, 1});
  CHECK(cut_to_k(tree, 3) == std::vector<int>{0, 1, 2});
  CHECK_THROWS_AS(cut_to_k(tree, 0), std::invalid_argument);
  CHECK_THROWS_AS(cut_to_k(tree, 4), std::invalid_argument);
}

TEST_CASE("cut_to_k yields k clusters and coarser cuts merge finer ones") {
  biasbench::Rng rng(303);
  const Eigen::MatrixXd x = random_points(rng, 24, 2);
  const Dendrogram tree = agglomerate(pairwise_euclidean(x), Linkage::ward);
  for (int k = 1; k <= 24; ++k) {
    const auto cut = cut_to_k(tree, k);
    std::set<int> distinct(cut.begin(), cut.end());
    CHECK(static_cast<int>(distinct.size()) == k);
    CHECK(*std::max_element(cut.begin(), cut.end()) == k - 1);
    if (k > 1) {
      // Every cluster at k must sit inside one cluster at k-1.
      const auto coarse = cut_to_k(tree, k - 1);
      std::map<int, std::set<int>> image;
      for (std::size_t i = 0; i < cut.size(); ++i) {
        image[cut[i]].insert(coarse[i]);
      }
      for (const auto& [fine, coarse_ids] : image) CHECK(coarse_ids.size() == 1);
    }
  }
}

TEST_CASE("dendrogram serializes its merge list") {
  const Dendrogram tree = agglomerate(pairwise_euclidean(line_points({0, 1, 10})), Linkage::single);
  const nlohmann::json j = tree.to_json();
  CHECK(j["leaf_count"] == 3);
  REQUIRE(j["merges"].size() == 2);
  CHECK(j["merges"][0]["left"] == 0);
  CHECK(j["merges"][0]["right"] == 1);
  CHECK(j["merges"][1]["size"] == 3);
}
