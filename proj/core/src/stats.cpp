#include "biasbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace biasbench {

double kolmogorov_sf(double lambda) {
  if (!(lambda >= 0)) throw std::invalid_argument("kolmogorov_sf: lambda must be non-negative");
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 101; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t n1 = sa.size();
  const std::size_t n2 = sb.size();

  // The sup gap |i/n1 - j/n2| is a rational; carrying the numerator
  // i*n2 - j*n1 in integers and dividing once gives the correctly rounded
  // statistic instead of accumulating two division errors.
  std::int64_t d_num = 0;
  std::size_t i = 0, j = 0;
  while (i < n1 || j < n2) {
    const double v = (j == n2 || (i < n1 && sa[i] <= sb[j])) ? sa[i] : sb[j];
    while (i < n1 && sa[i] == v) ++i;
    while (j < n2 && sb[j] == v) ++j;
    const std::int64_t gap = std::abs(static_cast<std::int64_t>(i * n2) -
                                      static_cast<std::int64_t>(j * n1));
    d_num = std::max(d_num, gap);
  }
  const double d = static_cast<double>(d_num) /
                   (static_cast<double>(n1) * static_cast<double>(n2));

  const double ne = static_cast<double>(n1) * static_cast<double>(n2) /
                    static_cast<double>(n1 + n2);
  KsResult result;
  result.statistic = d;
  result.p_value = kolmogorov_sf(std::sqrt(ne) * d);
  result.n1 = static_cast<int>(n1);
  result.n2 = static_cast<int>(n2);
  return result;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_one_sided(const std::vector<double>& x, const std::vector<double>& y,
                                  Alternative alternative) {
  if (x.size() != y.size()) throw std::invalid_argument("wilcoxon: length mismatch");
  if (x.empty()) throw std::invalid_argument("wilcoxon: empty sample");

  std::vector<double> diffs;
  diffs.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }

  WilcoxonResult result;
  result.n_nonzero = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    result.p_value = 1.0;
    return result;
  }
  const std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::abs(diffs[l]) < std::abs(diffs[r]);
  });

  // Tie-averaged ranks over |d|, and the tie term for the variance.
  std::vector<double> ranks(n);
  double tie_term = 0.0;
  std::size_t start = 0;
  while (start < n) {
    std::size_t stop = start + 1;
    while (stop < n && std::abs(diffs[order[stop]]) == std::abs(diffs[order[start]])) ++stop;
    const double avg = (static_cast<double>(start + 1) + static_cast<double>(stop)) / 2.0;
    for (std::size_t k = start; k < stop; ++k) ranks[order[k]] = avg;
    const double t = static_cast<double>(stop - start);
    tie_term += t * t * t - t;
    start = stop;
  }

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0) w_plus += ranks[i];
  }
  result.statistic = w_plus;

  if (n <= 15) {
    // Enumerate all sign assignments; ranks are multiples of 0.5, so the
    // subset sums and comparisons below are exact in doubles.
    result.exact = true;
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::uint64_t{1} << i)) s += ranks[i];
      }
      const bool hit = alternative == Alternative::greater ? s >= w_plus : s <= w_plus;
      if (hit) ++hits;
    }
    result.p_value = static_cast<double>(hits) / static_cast<double>(total);
    return result;
  }

  const double dn = static_cast<double>(n);
  const double mean = dn * (dn + 1.0) / 4.0;
  const double variance = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  const double sd = std::sqrt(variance);
  double p;
  if (alternative == Alternative::greater) {
    p = 1.0 - normal_cdf((w_plus - mean - 0.5) / sd);
  } else {
    p = normal_cdf((w_plus - mean + 0.5) / sd);
  }
  result.p_value = std::clamp(p, 0.0, 1.0);
  return result;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile: q outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double median(std::vector<double> values) { return percentile(std::move(values), 50.0); }

}  // namespace biasbench
