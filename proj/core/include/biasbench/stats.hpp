#pragma once

#include <vector>

namespace biasbench {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int n1 = 0;
  int n2 = 0;
};

// Survival function of the Kolmogorov distribution,
// Q(lambda) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_sf(double lambda);

// Two-sample Kolmogorov-Smirnov test. The statistic is the exact supremum
// gap between the empirical CDFs; the p-value uses the asymptotic
// distribution with effective size n1*n2/(n1+n2).
KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b);

enum class Alternative { greater, less };

struct WilcoxonResult {
  double statistic = 0.0;  // sum of ranks of positive differences
  double p_value = 1.0;
  int n_nonzero = 0;
  bool exact = false;
};

// One-sided Wilcoxon signed-rank test on paired samples. Zero differences
// are dropped; absolute differences get tie-averaged ranks. Up to 15
// nonzero pairs the null distribution is enumerated exactly, beyond that a
// normal approximation with continuity and tie corrections is used.
// All-zero differences give p = 1. Note that fewer than five nonzero pairs
// cannot reach the usual significance levels; n_nonzero lets callers gate
// on that.
WilcoxonResult wilcoxon_one_sided(const std::vector<double>& x, const std::vector<double>& y,
                                  Alternative alternative);

// Linear-interpolation percentile of an unsorted sample, q in [0, 100].
double percentile(std::vector<double> values, double q);
double median(std::vector<double> values);

}  // namespace biasbench
