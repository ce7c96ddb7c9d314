// SPDX-License-Identifier: Apache-2.0
/**
 * @file   stats.hpp
 * @brief  Rank tests and box-plot summaries.
 *
 * Ranks are midranks (ties share the mean of the positions they occupy).
 * The tie correction divides H by 1 - sum(t^3 - t) / (N^3 - N) and, in
 * Dunn's statistic, subtracts sum(t^3 - t) / (12 (N - 1)) from N (N + 1) / 12,
 * where t runs over the sizes of tied runs.
 */
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cxgan::stats {

using Groups = std::span<const std::vector<double>>;

/// P(X > x) for X ~ chi-square with `dof` degrees of freedom.
double chi_square_upper_tail(double x, double dof);

/// P(Z > z) for a standard normal Z.
double normal_upper_tail(double z);

/// 1-based midranks of `values` in their original order.
std::vector<double> midranks(std::span<const double> values);

struct KruskalWallis {
  double h = 0.0;
  double p = 1.0;
  std::size_t dof = 0;
  std::size_t n = 0;
};

/// Throws for fewer than two groups, an empty group, non-finite values or
/// when every value is identical.
KruskalWallis kruskal_wallis(Groups groups);

struct DunnPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double z = 0.0;          ///< (mean rank i - mean rank j) / se
  double p = 1.0;          ///< two-sided
  double p_adjusted = 1.0; ///< Bonferroni over all pairs
};

struct Dunn {
  std::vector<DunnPair> pairs; ///< i < j, lexicographic
  std::size_t groups = 0;

  /// z for any ordered pair; z(i, j) == -z(j, i), z(i, i) == 0.
  double z(std::size_t i, std::size_t j) const;
  const DunnPair &pair(std::size_t i, std::size_t j) const;
};

Dunn dunn_test(Groups groups);

struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;  ///< smallest value >= q1 - 1.5 IQR
  double whisker_high = 0.0; ///< largest value <= q3 + 1.5 IQR
  std::vector<double> outliers; ///< ascending
};

/// Linear-interpolation (type 7) quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

/// Throws on empty or non-finite input.
BoxStats boxplot_stats(std::span<const double> values);

struct MetricDistribution {
  std::string label;
  std::vector<double> values;
  BoxStats summary;
};

MetricDistribution make_distribution(std::string label, std::vector<double> values);

} // namespace cxgan::stats
