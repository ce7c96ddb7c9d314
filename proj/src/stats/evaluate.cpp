// SPDX-License-Identifier: Apache-2.0
#include "cxgan/stats/evaluate.hpp"

#include "cxgan/data/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace cxgan::stats {

namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr std::array kComparisons{Comparison::LqVsHq, Comparison::GenVsHq, Comparison::DeconvVsHq};

EvaluationRow failed_row(Comparison c, const std::string &id, const std::string &error) {
  EvaluationRow r;
  r.comparison = c;
  r.id = id;
  r.ok = false;
  r.error = error;
  r.report.name_a = "HQ";
  r.report.name_b = id;
  r.report.mse = r.report.nrmse = r.report.ssim = r.report.psnr = kNan;
  return r;
}

nn::Tensor clamp_unit(nn::Tensor t) {
  for (auto &v : t.values())
    v = std::clamp(v, 0.0f, 1.0f);
  return t;
}

std::string fmt(const char *format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string xml_escape(const std::string &s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '&': out += "&amp;"; break;
    case '"': out += "&quot;"; break;
    default: out += ch;
    }
  }
  return out;
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write " + path.string());
  out << text;
  if (!out)
    throw Error("failed writing " + path.string());
}

} // namespace

std::string to_string(Comparison c) {
  switch (c) {
  case Comparison::LqVsHq: return "LQ-vs-HQ";
  case Comparison::GenVsHq: return "GEN-vs-HQ";
  case Comparison::DeconvVsHq: return "DECONV-vs-HQ";
  }
  throw Error("unknown comparison");
}

Comparison parse_comparison(const std::string &s) {
  for (const Comparison c : kComparisons)
    if (to_string(c) == s)
      return c;
  throw Error("unknown comparison '" + s + "'");
}

double EvaluationRow::metric(std::size_t k) const {
  switch (k) {
  case 0: return report.mse;
  case 1: return report.nrmse;
  case 2: return report.ssim;
  case 3: return report.psnr;
  }
  throw Error("metric index out of range");
}

std::size_t Evaluation::failures() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const EvaluationRow &r) { return !r.ok; }));
}

EvaluationRow evaluate_row(Comparison comparison, const std::string &id, const nn::Tensor &hq,
                           const nn::Tensor &test, const metrics::SsimOptions &ssim) {
  EvaluationRow r;
  r.comparison = comparison;
  r.id = id;
  r.report = metrics::compare(hq, test, "HQ", id, ssim);
  return r;
}

Evaluation evaluate_dataset(const fs::path &manifest, const EvaluationOptions &options) {
  const data::DatasetManifest m = data::read_manifest(manifest);
  std::vector<const data::ManifestEntry *> entries;
  for (const auto &e : m.entries)
    if (e.split == options.split)
      entries.push_back(&e);
  if (entries.empty())
    throw Error("evaluate: split '" + data::to_string(options.split) + "' is empty");

  std::vector<Comparison> wanted;
  if (options.compare_lq)
    wanted.push_back(Comparison::LqVsHq);
  if (options.generator)
    wanted.push_back(Comparison::GenVsHq);
  if (options.deconvolution)
    wanted.push_back(Comparison::DeconvVsHq);
  if (wanted.empty())
    throw Error("evaluate: no comparison requested");

  Evaluation out;
  for (const auto *e : entries) {
    nn::Tensor lq, hq;
    try {
      hq = data::load_image(data::resolve(manifest, e->hq_path));
      lq = data::load_image(data::resolve(manifest, e->lq_path));
    } catch (const std::exception &ex) {
      for (const Comparison c : wanted)
        out.rows.push_back(failed_row(c, e->id, ex.what()));
      continue;
    }
    for (const Comparison c : wanted) {
      try {
        switch (c) {
        case Comparison::LqVsHq:
          out.rows.push_back(evaluate_row(c, e->id, hq, lq, options.ssim));
          break;
        case Comparison::GenVsHq:
          out.rows.push_back(
              evaluate_row(c, e->id, hq, clamp_unit(options.generator->forward(lq)), options.ssim));
          break;
        case Comparison::DeconvVsHq:
          out.rows.push_back(evaluate_row(
              c, e->id, hq, psf::deconvolve_channels(lq, *options.deconvolution), options.ssim));
          break;
        }
      } catch (const std::exception &ex) {
        out.rows.push_back(failed_row(c, e->id, ex.what()));
      }
    }
  }
  return out;
}

std::vector<MetricDistribution> summarize(std::span<const EvaluationRow> rows) {
  std::vector<MetricDistribution> out;
  for (const Comparison c : kComparisons) {
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
      std::vector<double> values;
      for (const auto &r : rows)
        if (r.ok && r.comparison == c && std::isfinite(r.metric(k)))
          values.push_back(r.metric(k));
      if (!values.empty())
        out.push_back(make_distribution(to_string(c) + "/" + kMetricNames[k], std::move(values)));
    }
  }
  return out;
}

std::string metrics_csv(std::span<const EvaluationRow> rows) {
  std::string s = "comparison,mse,nrmse,ssim,psnr\n";
  for (const auto &r : rows) {
    s += r.label();
    for (std::size_t k = 0; k < kMetricNames.size(); ++k)
      s += "," + metrics::format_metric(r.metric(k));
    s += "\n";
  }
  return s;
}

std::string summary_csv(std::span<const MetricDistribution> distributions) {
  std::string s = "label,median,q1,q3,whisker_low,whisker_high,n_outliers\n";
  for (const auto &d : distributions) {
    const BoxStats &b = d.summary;
    s += d.label;
    for (const double v : {b.median, b.q1, b.q3, b.whisker_low, b.whisker_high})
      s += "," + metrics::format_metric(v);
    s += "," + std::to_string(b.outliers.size()) + "\n";
  }
  return s;
}

std::vector<EvaluationRow> parse_metrics_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "comparison,mse,nrmse,ssim,psnr")
    throw Error("metrics csv: bad header");
  std::vector<EvaluationRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');)
      cells.push_back(cell);
    const auto colon = cells.empty() ? std::string::npos : cells[0].find(':');
    if (cells.size() != 5 || colon == std::string::npos)
      throw Error("metrics csv: malformed line " + std::to_string(number));
    EvaluationRow r;
    r.comparison = parse_comparison(cells[0].substr(0, colon));
    r.id = cells[0].substr(colon + 1);
    r.report.name_a = "HQ";
    r.report.name_b = r.id;
    double v[4];
    for (std::size_t k = 0; k < 4; ++k) {
      char *end = nullptr;
      v[k] = std::strtod(cells[k + 1].c_str(), &end);
      if (end == cells[k + 1].c_str() || *end != '\0')
        throw Error("metrics csv: bad number '" + cells[k + 1] + "' on line " +
                    std::to_string(number));
    }
    r.report.mse = v[0];
    r.report.nrmse = v[1];
    r.report.ssim = v[2];
    r.report.psnr = v[3];
    r.ok = !std::isnan(v[0]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_svg(std::span<const MetricDistribution> distributions, const std::string &metric) {
  std::vector<const MetricDistribution *> boxes;
  const std::string suffix = "/" + metric;
  for (const auto &d : distributions)
    if (d.label.size() > suffix.size() && d.label.ends_with(suffix))
      boxes.push_back(&d);

  constexpr double kWidth = 480, kHeight = 360;
  constexpr double kLeft = 70, kRight = 20, kTop = 50, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto *d : boxes) {
    lo = std::min({lo, d->summary.whisker_low, d->summary.q1});
    hi = std::max({hi, d->summary.whisker_high, d->summary.q3});
    for (double o : d->summary.outliers) {
      lo = std::min(lo, o);
      hi = std::max(hi, o);
    }
  }
  if (boxes.empty()) {
    lo = 0;
    hi = 1;
  } else if (hi - lo <= 0) {
    const double pad = std::max(0.5 * std::abs(lo), 0.5);
    lo -= pad;
    hi += pad;
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  auto y_of = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">"
    << xml_escape(metric) << "</text>\n";

  if (boxes.size() >= 2) {
    std::vector<std::vector<double>> groups;
    for (const auto *d : boxes)
      groups.push_back(d->values);
    try {
      const KruskalWallis kw = kruskal_wallis(groups);
      s << "<text x=\"" << kWidth / 2 << "\" y=\"40\" text-anchor=\"middle\" font-size=\"11\">"
        << "Kruskal-Wallis H = " << fmt("%.4f", kw.h) << ", p = " << fmt("%.3g", kw.p)
        << "</text>\n";
    } catch (const Error &) {
      // every value identical: no test to report
    }
  }

  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
    << kTop + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    const std::string y = fmt("%.2f", y_of(v));
    s << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kLeft - 8 << "\" y=\"" << y
      << "\" text-anchor=\"end\" dominant-baseline=\"middle\" font-size=\"10\">" << fmt("%.4g", v)
      << "</text>\n";
  }
  if (boxes.empty())
    s << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"12\">no finite values</text>\n";

  const double slot = plot_w / static_cast<double>(std::max<std::size_t>(boxes.size(), 1));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BoxStats &b = boxes[i]->summary;
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(30.0, slot * 0.3);
    const std::string x0 = fmt("%.2f", cx - half), x1 = fmt("%.2f", cx + half);
    const std::string xc = fmt("%.2f", cx);
    const std::string cap0 = fmt("%.2f", cx - half / 2), cap1 = fmt("%.2f", cx + half / 2);
    const std::string name = boxes[i]->label.substr(0, boxes[i]->label.size() - suffix.size());
    s << "<g>\n"
      << "<line x1=\"" << xc << "\" y1=\"" << fmt("%.2f", y_of(b.whisker_high)) << "\" x2=\"" << xc
      << "\" y2=\"" << fmt("%.2f", y_of(b.q3)) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << xc << "\" y1=\"" << fmt("%.2f", y_of(b.q1)) << "\" x2=\"" << xc
      << "\" y2=\"" << fmt("%.2f", y_of(b.whisker_low)) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << cap0 << "\" y1=\"" << fmt("%.2f", y_of(b.whisker_high)) << "\" x2=\""
      << cap1 << "\" y2=\"" << fmt("%.2f", y_of(b.whisker_high)) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << cap0 << "\" y1=\"" << fmt("%.2f", y_of(b.whisker_low)) << "\" x2=\""
      << cap1 << "\" y2=\"" << fmt("%.2f", y_of(b.whisker_low)) << "\" stroke=\"black\"/>\n"
      << "<rect x=\"" << x0 << "\" y=\"" << fmt("%.2f", y_of(b.q3)) << "\" width=\""
      << fmt("%.2f", 2 * half) << "\" height=\"" << fmt("%.2f", y_of(b.q1) - y_of(b.q3))
      << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << fmt("%.2f", y_of(b.median)) << "\" x2=\"" << x1
      << "\" y2=\"" << fmt("%.2f", y_of(b.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double o : b.outliers)
      s << "<circle cx=\"" << xc << "\" cy=\"" << fmt("%.2f", y_of(o))
        << "\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << xc << "\" y=\"" << kTop + plot_h + 20
      << "\" text-anchor=\"middle\" font-size=\"11\">" << xml_escape(name) << "</text>\n"
      << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void render_report(std::span<const EvaluationRow> rows,
                   std::span<const MetricDistribution> distributions, const fs::path &out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw Error("cannot create report directory " + out_dir.string());
  write_file(out_dir / "metrics.csv", metrics_csv(rows));
  write_file(out_dir / "summary.csv", summary_csv(distributions));
  if (distributions.empty())
    return;
  for (const char *metric : kMetricNames)
    write_file(out_dir / (std::string(metric) + ".svg"), render_svg(distributions, metric));
}

} // namespace cxgan::stats
