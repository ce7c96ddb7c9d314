// SPDX-License-Identifier: Apache-2.0
#include "cxgan/stats/stats.hpp"

#include "cxgan/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cxgan::stats {

double chi_square_upper_tail(double x, double dof) {
  if (!(dof > 0.0))
    throw Error("chi-square: degrees of freedom must be positive");
  if (std::isnan(x))
    throw Error("chi-square: NaN statistic");
  if (x <= 0.0)
    return 1.0;
  if (std::isinf(x))
    return 0.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]])
      ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

struct Ranked {
  std::vector<double> mean_rank;
  std::vector<std::size_t> sizes;
  double n = 0;
  double tie_sum = 0; ///< sum of t^3 - t
};

Ranked rank_groups(Groups groups) {
  if (groups.size() < 2)
    throw Error("rank test: need at least two groups");
  std::vector<double> all;
  Ranked out;
  for (const auto &g : groups) {
    if (g.empty())
      throw Error("rank test: empty group");
    for (double v : g)
      if (!std::isfinite(v))
        throw Error("rank test: non-finite value");
    all.insert(all.end(), g.begin(), g.end());
    out.sizes.push_back(g.size());
  }
  const std::vector<double> ranks = midranks(all);

  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back())
    throw Error("rank test: all values are identical");
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i])
      ++j;
    const double t = static_cast<double>(j - i + 1);
    out.tie_sum += t * t * t - t;
    i = j + 1;
  }

  std::size_t offset = 0;
  for (const std::size_t size : out.sizes) {
    double sum = 0;
    for (std::size_t k = 0; k < size; ++k)
      sum += ranks[offset + k];
    out.mean_rank.push_back(sum / static_cast<double>(size));
    offset += size;
  }
  out.n = static_cast<double>(all.size());
  return out;
}

} // namespace

KruskalWallis kruskal_wallis(Groups groups) {
  const Ranked r = rank_groups(groups);
  double s = 0;
  for (std::size_t g = 0; g < r.sizes.size(); ++g)
    s += static_cast<double>(r.sizes[g]) * r.mean_rank[g] * r.mean_rank[g];
  const double n = r.n;
  const double raw = 12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0);
  const double correction = 1.0 - r.tie_sum / (n * n * n - n);
  KruskalWallis out;
  // Rounding can leave H a hair below zero when every mean rank is equal.
  out.h = std::max(0.0, raw / correction);
  out.dof = groups.size() - 1;
  out.n = static_cast<std::size_t>(n);
  out.p = chi_square_upper_tail(out.h, static_cast<double>(out.dof));
  return out;
}

double Dunn::z(std::size_t i, std::size_t j) const {
  if (i == j)
    return 0.0;
  return i < j ? pair(i, j).z : -pair(j, i).z;
}

const DunnPair &Dunn::pair(std::size_t i, std::size_t j) const {
  for (const auto &p : pairs)
    if (p.i == i && p.j == j)
      return p;
  throw Error("dunn: no pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
}

Dunn dunn_test(Groups groups) {
  const Ranked r = rank_groups(groups);
  const double n = r.n;
  const double variance = n * (n + 1.0) / 12.0 - r.tie_sum / (12.0 * (n - 1.0));
  const std::size_t k = groups.size();
  const double comparisons = static_cast<double>(k * (k - 1) / 2);
  Dunn out;
  out.groups = k;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double se = std::sqrt(variance * (1.0 / static_cast<double>(r.sizes[i]) +
                                              1.0 / static_cast<double>(r.sizes[j])));
      DunnPair p;
      p.i = i;
      p.j = j;
      p.z = (r.mean_rank[i] - r.mean_rank[j]) / se;
      p.p = std::min(1.0, 2.0 * normal_upper_tail(std::abs(p.z)));
      p.p_adjusted = std::min(1.0, p.p * comparisons);
      out.pairs.push_back(p);
    }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty())
    throw Error("quantile: empty data");
  if (!(q >= 0.0 && q <= 1.0))
    throw Error("quantile: q must lie in [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats boxplot_stats(std::span<const double> values) {
  if (values.empty())
    throw Error("boxplot: empty data");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v)
    if (!std::isfinite(x))
      throw Error("boxplot: non-finite value");
  std::sort(v.begin(), v.end());

  BoxStats b;
  b.median = quantile_sorted(v, 0.5);
  b.q1 = quantile_sorted(v, 0.25);
  b.q3 = quantile_sorted(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double x : v) {
    if (x < lo || x > hi) {
      b.outliers.push_back(x);
      continue;
    }
    b.whisker_low = std::min(b.whisker_low, x);
    b.whisker_high = std::max(b.whisker_high, x);
  }
  return b;
}

MetricDistribution make_distribution(std::string label, std::vector<double> values) {
  MetricDistribution d{std::move(label), std::move(values), {}};
  d.summary = boxplot_stats(d.values);
  return d;
}

} // namespace cxgan::stats
