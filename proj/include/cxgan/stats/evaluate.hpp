// SPDX-License-Identifier: Apache-2.0
/**
 * @file   evaluate.hpp
 * @brief  Per-pair metric tables and their box-plot report.
 *
 * Every pair of a manifest split yields one row per requested comparison,
 * labelled "<comparison>:<id>" with comparison one of LQ-vs-HQ, GEN-vs-HQ
 * and DECONV-vs-HQ. HQ is the NRMSE reference. Generated and deconvolved
 * images are clamped to [0, 1] before scoring.
 *
 * Report directory:
 *   metrics.csv   comparison,mse,nrmse,ssim,psnr  (failed rows hold nan)
 *   summary.csv   label,median,q1,q3,whisker_low,whisker_high,n_outliers
 *   mse.svg nrmse.svg ssim.svg psnr.svg  one box per comparison
 * Summary labels are "<comparison>/<metric>". Non-finite values (the
 * infinite PSNR of identical images) are left out of the distributions.
 */
#pragma once

#include "cxgan/data/dataset.hpp"
#include "cxgan/metrics/metrics.hpp"
#include "cxgan/models/generator.hpp"
#include "cxgan/psf/channels.hpp"
#include "cxgan/stats/stats.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cxgan::stats {

enum class Comparison { LqVsHq, GenVsHq, DeconvVsHq };

std::string to_string(Comparison c);
Comparison parse_comparison(const std::string &s);

inline constexpr std::array<const char *, 4> kMetricNames{"mse", "nrmse", "ssim", "psnr"};

struct EvaluationRow {
  Comparison comparison = Comparison::LqVsHq;
  std::string id;
  metrics::MetricReport report; ///< nan everywhere when !ok
  bool ok = true;
  std::string error;

  std::string label() const { return to_string(comparison) + ":" + id; }
  double metric(std::size_t k) const;
};

struct EvaluationOptions {
  data::Split split = data::Split::Test;
  bool compare_lq = true;
  models::Generator *generator = nullptr; ///< GEN-vs-HQ rows when set
  std::optional<psf::ChannelDeconvOptions> deconvolution; ///< DECONV-vs-HQ rows when set
  metrics::SsimOptions ssim;
};

struct Evaluation {
  std::vector<EvaluationRow> rows;
  std::size_t failures() const;
};

/// Rows in manifest order, comparisons in enum order within a pair. A pair
/// whose files cannot be read or scored gets failed rows; the run goes on.
/// Throws if the split is empty or no comparison is requested.
Evaluation evaluate_dataset(const std::filesystem::path &manifest, const EvaluationOptions &options);

/// One row from already loaded images.
EvaluationRow evaluate_row(Comparison comparison, const std::string &id, const nn::Tensor &hq,
                           const nn::Tensor &test, const metrics::SsimOptions &ssim = {});

/// One distribution per (comparison, metric) that has finite values, in
/// comparison then metric order.
std::vector<MetricDistribution> summarize(std::span<const EvaluationRow> rows);

std::string metrics_csv(std::span<const EvaluationRow> rows);
std::string summary_csv(std::span<const MetricDistribution> distributions);

/// Rows back from metrics.csv text.
std::vector<EvaluationRow> parse_metrics_csv(const std::string &text);

/// Box plot of every distribution whose label ends in "/<metric>".
std::string render_svg(std::span<const MetricDistribution> distributions, const std::string &metric);

/// Writes the report directory described above. With no distributions only
/// the two CSV files are written.
void render_report(std::span<const EvaluationRow> rows,
                   std::span<const MetricDistribution> distributions,
                   const std::filesystem::path &out_dir);

} // namespace cxgan::stats
