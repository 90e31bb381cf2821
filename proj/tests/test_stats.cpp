#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "biasbench/rng.hpp"
#include "biasbench/stats.hpp"
#include "support/stats_oracle.hpp"

using biasbench::Alternative;
using biasbench::Rng;
using biasbench::kolmogorov_sf;
using biasbench::ks_two_sample;
using biasbench::median;
using biasbench::percentile;
using biasbench::wilcoxon_one_sided;

namespace {

std::vector<double> random_sample(Rng& rng, std::size_t n, bool gridded) {
  std::vector<double> v(n);
  for (auto& x : v) {
    // Gridded draws force ties within and across samples.
    x = gridded ? static_cast<double>(rng.below(8)) : rng.normal();
  }
  return v;
}

}  // namespace

TEST_CASE("kolmogorov survival function matches reference values") {
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967168).epsilon(1e-9));
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436).epsilon(1e-8));
  CHECK(kolmogorov_sf(2.0) == doctest::Approx(0.00067092).epsilon(1e-4));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(1e-9) == 1.0);
  CHECK(kolmogorov_sf(10.0) < 1e-80);
  CHECK_THROWS_AS(kolmogorov_sf(-0.1), std::invalid_argument);
}

TEST_CASE("ks statistic on a shifted triple is one third") {
  const auto r = ks_two_sample({1, 2, 3}, {2, 3, 4});
  // The largest gap is evaluated as 1 - 2/3, one ulp above 1.0/3.0.
  CHECK(r.statistic == 1.0 / 3.0);  // exact: the gap numerator is carried in integers
}

TEST_CASE("ks statistic matches the counting oracle exactly") {
  Rng rng(501);
  for (int rep = 0; rep < 120; ++rep) {
    const std::size_t n1 = 1 + rng.below(30);
    const std::size_t n2 = 1 + rng.below(30);
    const bool gridded = rep % 2 == 0;
    const auto a = random_sample(rng, n1, gridded);
    const auto b = random_sample(rng, n2, gridded);
    CHECK(ks_two_sample(a, b).statistic == oracle::ks_statistic(a, b));
  }
}

TEST_CASE("ks degenerate and extreme cases") {
  const std::vector<double> same{1, 2, 2, 3};
  const auto equal = ks_two_sample(same, same);
  CHECK(equal.statistic == 0.0);
  CHECK(equal.p_value == 1.0);

  const auto disjoint = ks_two_sample({0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9},
                                      {5, 5.1, 5.2, 5.3, 5.4, 5.5, 5.6, 5.7, 5.8, 5.9});
  CHECK(disjoint.statistic == 1.0);
  CHECK(disjoint.p_value < 0.01);

  CHECK_THROWS_AS(ks_two_sample({}, {1.0}), std::invalid_argument);
}

TEST_CASE("ks is symmetric in its arguments") {
  Rng rng(502);
  const auto a = random_sample(rng, 17, false);
  const auto b = random_sample(rng, 9, true);
  const auto ab = ks_two_sample(a, b);
  const auto ba = ks_two_sample(b, a);
  CHECK(ab.statistic == ba.statistic);
  CHECK(ab.p_value == ba.p_value);
}

TEST_CASE("wilcoxon exact p for three clean positive differences") {
  // Mixed signs with tied magnitudes among the differences.
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> y{0, 0, 0, 0, 0, 6.5, 6.5, 9};
  const auto r = wilcoxon_one_sided(x, y, Alternative::greater);
  CHECK(r.exact);
  CHECK(r.n_nonzero == 8);

  const std::vector<double> x3{1, 2, 3, 4, 5};
  const std::vector<double> y3{0, 0, 0, 0, 0};
  const auto all_pos = wilcoxon_one_sided(x3, y3, Alternative::greater);
  CHECK(all_pos.statistic == 15.0);
  CHECK(all_pos.p_value == doctest::Approx(1.0 / 32.0).epsilon(1e-15));

  // Three positive differences: W+ = 6, the largest of the 2^3 = 8 sign
  // patterns, so the one-sided tail is exactly 1/8.
  const auto tiny = wilcoxon_one_sided({1, 2, 3}, {0, 0, 0}, Alternative::greater);
  CHECK(tiny.exact);
  CHECK(tiny.n_nonzero == 3);
  CHECK(tiny.p_value == 0.125);
}

TEST_CASE("wilcoxon handles degenerate inputs") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(wilcoxon_one_sided(x, x, Alternative::greater).p_value == 1.0);
  CHECK(wilcoxon_one_sided(x, x, Alternative::less).p_value == 1.0);

  const std::vector<double> y{1, 2, 3, 4, 5.5};  // one nonzero difference, against the direction
  const auto single = wilcoxon_one_sided(x, y, Alternative::greater);
  CHECK(single.n_nonzero == 1);
  CHECK(single.statistic == 0.0);
  CHECK(single.p_value == 1.0);  // W+ >= 0 under both sign patterns
  CHECK_THROWS_AS(wilcoxon_one_sided(x, {1.0}, Alternative::greater), std::invalid_argument);
  CHECK_THROWS_AS(wilcoxon_one_sided({}, {}, Alternative::greater), std::invalid_argument);
}

TEST_CASE("wilcoxon exact p matches an independent enumeration") {
  Rng rng(503);
  int checked = 0;
  while (checked < 60) {
    const std::size_t n = 5 + rng.below(8);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Integer grids create ties among |differences| and the occasional
      // zero difference.
      x[i] = static_cast<double>(rng.below(6));
      y[i] = static_cast<double>(rng.below(6));
    }
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] != y[i]) ++nonzero;
    }
    if (nonzero < 5) continue;
    ++checked;
    for (const bool greater : {true, false}) {
      const auto alt = greater ? Alternative::greater : Alternative::less;
      const auto engine = wilcoxon_one_sided(x, y, alt);
      CHECK(engine.exact);
      CHECK(engine.p_value == doctest::Approx(oracle::wilcoxon_exact_p(x, y, greater))
                                  .epsilon(1e-15));
    }
  }
}

TEST_CASE("wilcoxon normal approximation tracks the exact tail") {
  Rng rng(504);
  for (const std::size_t n : {16u, 17u, 18u}) {
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal() + 0.4;
      y[i] = rng.normal();
    }
    for (const bool greater : {true, false}) {
      const auto alt = greater ? Alternative::greater : Alternative::less;
      const auto engine = wilcoxon_one_sided(x, y, alt);
      CHECK_FALSE(engine.exact);
      const double exact = oracle::wilcoxon_exact_p(x, y, greater);
      CHECK(std::abs(engine.p_value - exact) < 0.02);
    }
  }
}

TEST_CASE("wilcoxon greater and less tails cover the distribution") {
  const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6};
  const std::vector<double> y{2, 7, 1, 8, 2, 8, 1, 8};
  const auto g = wilcoxon_one_sided(x, y, Alternative::greater);
  const auto l = wilcoxon_one_sided(x, y, Alternative::less);
  // One-sided tails overlap exactly at the observed statistic.
  CHECK(g.p_value + l.p_value > 1.0);
  CHECK(g.p_value + l.p_value < 1.5);
}

TEST_CASE("percentile interpolates like a linear quantile") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 25) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(percentile(v, 50) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(percentile(v, 93) == doctest::Approx(3.79).epsilon(1e-12));
  CHECK(percentile(v, 100) == 4.0);
  CHECK(percentile({7}, 42) == 7.0);
  CHECK(median({5, 1, 3}) == 3.0);
  CHECK(median({4, 1, 3, 2}) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(percentile({}, 50), std::invalid_argument);
  CHECK_THROWS_AS(percentile({1.0}, 101), std::invalid_argument);
  CHECK_THROWS_AS(percentile({1.0}, -1), std::invalid_argument);
}
