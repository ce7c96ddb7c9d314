// SPDX-License-Identifier: Apache-2.0
#include "cxgan/cli/cli.hpp"

#include "cxgan/cli/json_config.hpp"
#include "cxgan/data/dataset.hpp"
#include "cxgan/data/image_io.hpp"
#include "cxgan/error.hpp"
#include "cxgan/psf/channels.hpp"
#include "cxgan/stats/evaluate.hpp"
#include "cxgan/train/checkpoint.hpp"
#include "cxgan/train/trainer.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace cxgan::cli {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- arguments

struct PrepareArgs {
  data::PrepareOptions options;
  std::vector<double> fractions{0.80, 0.19, 0.01};
};

struct TrainArgs {
  fs::path manifest;
  train::TrainConfig config;
};

struct PsfArgs {
  bool delta = false;
  std::vector<double> wavelengths{psf::kRgbWavelengthsNm};
  psf::PsfParams optics;
  int iterations = 10;

  psf::ChannelDeconvOptions options() const {
    psf::ChannelDeconvOptions o;
    o.optics = optics;
    o.wavelengths_nm = wavelengths;
    o.iterations = iterations;
    o.delta = delta;
    return o;
  }
};

struct ImageArgs {
  std::vector<fs::path> inputs;
  fs::path out_dir;
};

struct EnhanceArgs {
  ImageArgs images;
  fs::path checkpoint;
};

struct DeconvolveArgs {
  ImageArgs images;
  PsfArgs psf;
};

struct EvaluateArgs {
  fs::path manifest;
  fs::path out_dir;
  fs::path checkpoint;
  bool deconvolve = false;
  bool no_lq = false;
  data::Split split = data::Split::Test;
  PsfArgs psf;
  metrics::SsimOptions ssim;
};

struct ReportArgs {
  fs::path metrics;
  fs::path out_dir;
};

// ---------------------------------------------------------------- helpers

std::string fmt(const char *format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

/// Files named on the command line, with directories expanded to their
/// image files in name order.
std::vector<fs::path> expand_inputs(const std::vector<fs::path> &inputs) {
  std::vector<fs::path> files;
  for (const auto &p : inputs) {
    if (!fs::is_directory(p)) {
      files.push_back(p);
      continue;
    }
    std::vector<fs::path> found;
    for (const auto &e : fs::directory_iterator(p))
      if (e.is_regular_file() && data::is_image_file(e.path()))
        found.push_back(e.path());
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  return files;
}

fs::path output_name(const fs::path &input, const fs::path &out_dir, const std::string &suffix) {
  const fs::path ext = data::is_image_file(input) ? input.extension() : fs::path(".tif");
  return out_dir / (input.stem().string() + suffix + ext.string());
}

/// Applies `f` to every input image; failures are reported and skipped.
template <typename F>
int for_each_image(const ImageArgs &args, const std::string &suffix, std::ostream &out,
                   std::ostream &err, F &&f) {
  const auto files = expand_inputs(args.inputs);
  if (files.empty())
    throw Error("no input images");
  fs::create_directories(args.out_dir);
  std::size_t failed = 0;
  for (const auto &file : files) {
    try {
      const fs::path target = output_name(file, args.out_dir, suffix);
      data::save_image(target, f(data::load_image(file), file), 16);
      out << file.string() << " -> " << target.string() << "\n";
    } catch (const std::exception &e) {
      ++failed;
      err << "error: " << file.string() << ": " << e.what() << "\n";
    }
  }
  out << files.size() - failed << " of " << files.size() << " images written\n";
  return failed ? kExitFailure : kExitOk;
}

void add_psf_options(CLI::App *sub, PsfArgs &a) {
  sub->add_flag("--delta-psf", a.delta, "Use a delta kernel instead of the optics model")
      ->default_str("false");
  sub->add_option("--wavelengths", a.wavelengths, "Emission wavelength per channel in nm (R G B)");
  sub->add_option("--na", a.optics.numerical_aperture, "Numerical aperture")
      ->check(CLI::PositiveNumber);
  sub->add_option("--refractive-index", a.optics.refractive_index, "Immersion refractive index")
      ->check(CLI::PositiveNumber);
  sub->add_option("--pixel-size", a.optics.pixel_size_nm, "Pixel size in nm")
      ->check(CLI::PositiveNumber);
  sub->add_option("--kernel-size", a.optics.kernel_size, "PSF kernel side (odd)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--rl-iterations", a.iterations, "Richardson-Lucy iterations")
      ->check(CLI::NonNegativeNumber);
}

// ---------------------------------------------------------------- commands

int cmd_prepare(PrepareArgs &a, std::ostream &out) {
  if (a.fractions.size() != 3)
    throw Error("--fractions needs train, test and validation values");
  std::copy(a.fractions.begin(), a.fractions.end(), a.options.fractions.begin());
  const auto result = data::prepare_dataset(a.options);
  for (const auto &r : result.report)
    if (!r.aligned)
      out << "unaligned " << r.id << ": " << r.message << "\n";
  const auto &m = result.manifest;
  out << m.entries.size() << " pairs: " << m.count(data::Split::Train) << " train, "
      << m.count(data::Split::Test) << " test, " << m.count(data::Split::Validation)
      << " validation\n"
      << "manifest: " << (a.options.out_dir / "manifest.json").string() << "\n";
  return kExitOk;
}

int cmd_train(TrainArgs &a, std::ostream &out) {
  out << train::kLogHeader << "\n";
  const auto result = train::train_loop(a.manifest, a.config, [&](const train::LogRow &row) {
    out << train::format_log_row(row) << "\n" << std::flush;
  });
  out << "final: " << (a.config.output_dir / "final.ckpt").string() << "\n";
  if (!result.log.empty())
    out << "best: iteration " << result.best_meta.iteration << ", val ssim "
        << fmt("%.6f", result.best_meta.val_ssim) << "\n";
  return kExitOk;
}

int cmd_enhance(EnhanceArgs &a, std::ostream &out, std::ostream &err) {
  auto loaded = train::load_checkpoint(a.checkpoint);
  models::Generator &g = loaded.model;
  const std::size_t m = g.config().multiple();
  return for_each_image(a.images, "_generated", out, err,
                        [&](const nn::Tensor &x, const fs::path &) {
    const auto &s = x.shape();
    if (s.c != g.config().channels)
      throw Error("expected " + std::to_string(g.config().channels) + " channels, got " +
                  std::to_string(s.c));
    if (s.h % m || s.w % m)
      throw Error(std::to_string(s.h) + "x" + std::to_string(s.w) +
                  " is not divisible by " + std::to_string(m) + "; center-crop to " +
                  std::to_string(s.h / m * m) + "x" + std::to_string(s.w / m * m) + " first");
    nn::Tensor y = g.forward(x);
    for (auto &v : y.values())
      v = std::clamp(v, 0.0f, 1.0f);
    return y;
  });
}

int cmd_deconvolve(DeconvolveArgs &a, std::ostream &out, std::ostream &err) {
  const auto options = a.psf.options();
  if (!options.delta)
    options.optics.validate();
  return for_each_image(a.images, "_deconvolved", out, err,
                        [&](const nn::Tensor &x, const fs::path &) {
    return psf::deconvolve_channels(x, options);
  });
}

int cmd_evaluate(EvaluateArgs &a, std::ostream &out, std::ostream &err) {
  stats::EvaluationOptions options;
  options.split = a.split;
  options.compare_lq = !a.no_lq;
  options.ssim = a.ssim;
  std::optional<train::LoadedCheckpoint> loaded;
  if (!a.checkpoint.empty()) {
    loaded.emplace(train::load_checkpoint(a.checkpoint));
    options.generator = &loaded->model;
  }
  if (a.deconvolve)
    options.deconvolution = a.psf.options();

  const auto ev = stats::evaluate_dataset(a.manifest, options);
  fs::create_directories(a.out_dir);
  const fs::path csv = a.out_dir / "metrics.csv";
  std::ofstream file(csv, std::ios::binary | std::ios::trunc);
  file << stats::metrics_csv(ev.rows);
  if (!file)
    throw Error("cannot write " + csv.string());
  for (const auto &r : ev.rows)
    if (!r.ok)
      err << "error: " << r.label() << ": " << r.error << "\n";
  out << ev.rows.size() << " rows, " << ev.failures() << " failed\n"
      << "metrics: " << csv.string() << "\n";
  return ev.failures() ? kExitFailure : kExitOk;
}

void print_tests(const std::vector<stats::MetricDistribution> &dists, std::ostream &out) {
  for (const char *metric : stats::kMetricNames) {
    std::vector<std::vector<double>> groups;
    std::vector<std::string> names;
    const std::string tail = std::string("/") + metric;
    for (const auto &d : dists)
      if (d.label.ends_with(tail)) {
        groups.push_back(d.values);
        names.push_back(d.label.substr(0, d.label.size() - tail.size()));
      }
    if (groups.size() < 2)
      continue;
    try {
      const auto kw = stats::kruskal_wallis(groups);
      out << metric << ": Kruskal-Wallis H " << fmt("%.4f", kw.h) << ", p "
          << fmt("%.4g", kw.p) << "\n";
      for (const auto &p : stats::dunn_test(groups).pairs)
        out << "  " << names[p.i] << " vs " << names[p.j] << ": z " << fmt("%.4f", p.z)
            << ", p_adj " << fmt("%.4g", p.p_adjusted) << "\n";
    } catch (const Error &e) {
      out << metric << ": " << e.what() << "\n";
    }
  }
}

int cmd_report(ReportArgs &a, std::ostream &out) {
  std::ifstream in(a.metrics, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  const auto rows = stats::parse_metrics_csv(text.str());
  const auto dists = stats::summarize(rows);
  stats::render_report(rows, dists, a.out_dir);
  print_tests(dists, out);
  out << "report: " << a.out_dir.string() << "\n";
  return kExitOk;
}

} // namespace

int run(std::span<const std::string> args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Enhancement of wide-field fluorescence images with a conditional GAN", "cxgan"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);

  fs::path config_file;
  const auto add_config = [&](CLI::App *sub) {
    sub->add_option("--config", config_file, "JSON file of flag values; flags given here win")
        ->check(CLI::ExistingFile);
  };
  std::uint64_t seed = 0;

  PrepareArgs prep;
  auto *prepare = app.add_subcommand("prepare", "Align, augment and split raw LQ/HQ pairs");
  add_config(prepare);
  prepare->add_option("--lq-dir", prep.options.lq_dir, "Raw low-quality images")
      ->required()->check(CLI::ExistingDirectory);
  prepare->add_option("--hq-dir", prep.options.hq_dir, "Raw high-quality images")
      ->required()->check(CLI::ExistingDirectory);
  prepare->add_option("--out", prep.options.out_dir, "Dataset directory")->required();
  prepare->add_option("--seed", seed, "Seed for augmentation and split");
  prepare->add_option("--augment", prep.options.augment_extra, "Augmented copies per pair")
      ->check(CLI::NonNegativeNumber);
  prepare->add_option("--fractions", prep.fractions, "Train, test and validation fractions")
      ->expected(3);
  prepare
      ->add_option("--split-order", prep.options.order,
                   "split-first keeps augmented copies in their original's split")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, data::SplitOrder>{{"split-first", data::SplitOrder::SplitFirst},
                                                  {"augment-first", data::SplitOrder::AugmentFirst}},
          CLI::ignore_case))
      ->default_str("split-first");
  prepare->add_option("--patch-size", prep.options.align.patch_size, "Side of the aligned crop")
      ->check(CLI::PositiveNumber);
  prepare->add_option("--rotation-range", prep.options.align.rotation_range_deg,
                      "Rotation search range in degrees");
  prepare->add_option("--rotation-step", prep.options.align.rotation_step_deg,
                      "Rotation search step in degrees")
      ->check(CLI::PositiveNumber);
  prepare->add_option("--min-correlation", prep.options.align.min_correlation,
                      "Reject pairs whose aligned NCC is lower");

  TrainArgs tr;
  auto &tc = tr.config;
  auto *train_cmd = app.add_subcommand("train", "Train the generator and discriminator");
  add_config(train_cmd);
  train_cmd->add_option("--manifest", tr.manifest, "Dataset manifest")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tc.output_dir, "Output directory")->required();
  train_cmd->add_option("--seed", seed, "Seed for initialization and batches");
  train_cmd->add_option("--iterations", tc.iterations, "Training iterations");
  train_cmd->add_option("--batch-size", tc.batch_size, "Pairs per iteration")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--validation-every", tc.validation_every, "Validation cadence")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--checkpoint-every", tc.checkpoint_every, "Checkpoint cadence")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tc.adam.learning_rate, "Adam learning rate");
  train_cmd->add_option("--beta1", tc.adam.beta1, "Adam first-moment decay");
  train_cmd->add_option("--beta2", tc.adam.beta2, "Adam second-moment decay");
  train_cmd->add_option("--alpha", tc.weights.alpha, "MSE loss weight");
  train_cmd->add_option("--beta", tc.weights.beta, "(1 - SSIM) loss weight");
  train_cmd->add_option("--gamma", tc.weights.gamma, "Adversarial loss weight");
  train_cmd->add_option("--g-width", tc.generator.base_width, "Generator base width");
  train_cmd->add_option("--g-depth", tc.generator.depth, "Generator down/up blocks");
  train_cmd->add_option("--d-width", tc.discriminator.base_width, "Discriminator base width");
  train_cmd->add_option("--d-max-width", tc.discriminator.max_width,
                        "Discriminator width cap");
  train_cmd->add_option("--d-hidden", tc.discriminator.hidden, "Discriminator hidden FC size");
  train_cmd->add_option("--d-blocks", tc.discriminator.blocks, "Discriminator blocks");

  EnhanceArgs en;
  auto *enhance = app.add_subcommand("enhance", "Run a trained generator on images");
  add_config(enhance);
  enhance->add_option("inputs", en.images.inputs, "Image files or directories")
      ->required()->check(CLI::ExistingPath);
  enhance->add_option("--checkpoint", en.checkpoint, "Generator checkpoint")
      ->required()->check(CLI::ExistingFile);
  enhance->add_option("--out", en.images.out_dir, "Output directory")->required();

  DeconvolveArgs dc;
  auto *deconvolve = app.add_subcommand("deconvolve", "Per-channel Richardson-Lucy deconvolution");
  add_config(deconvolve);
  deconvolve->add_option("inputs", dc.images.inputs, "Image files or directories")
      ->required()->check(CLI::ExistingPath);
  deconvolve->add_option("--out", dc.images.out_dir, "Output directory")->required();
  add_psf_options(deconvolve, dc.psf);

  EvaluateArgs ev;
  auto *evaluate = app.add_subcommand("evaluate", "Score a dataset split against HQ");
  add_config(evaluate);
  evaluate->add_option("--manifest", ev.manifest, "Dataset manifest")
      ->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", ev.out_dir, "Directory for metrics.csv")->required();
  evaluate->add_option("--checkpoint", ev.checkpoint, "Generator checkpoint for GEN-vs-HQ rows")
      ->check(CLI::ExistingFile)
      ->default_str("none");
  evaluate->add_flag("--deconvolve", ev.deconvolve, "Add DECONV-vs-HQ rows")->default_str("false");
  evaluate->add_flag("--no-lq", ev.no_lq, "Skip LQ-vs-HQ rows")->default_str("false");
  evaluate->add_option("--split", ev.split, "Split to score")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, data::Split>{{"train", data::Split::Train},
                                             {"test", data::Split::Test},
                                             {"validation", data::Split::Validation}},
          CLI::ignore_case))
      ->default_str("test");
  evaluate->add_option("--ssim-window", ev.ssim.window, "SSIM window")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, metrics::SsimWindow>{
              {"uniform7", metrics::SsimWindow::Uniform7},
              {"gaussian11", metrics::SsimWindow::Gaussian11}},
          CLI::ignore_case))
      ->default_str("uniform7");
  add_psf_options(evaluate, ev.psf);

  ReportArgs rp;
  auto *report = app.add_subcommand("report", "Summary table and box plots from metrics.csv");
  add_config(report);
  report->add_option("--metrics", rp.metrics, "metrics.csv from evaluate")
      ->required()->check(CLI::ExistingFile);
  report->add_option("--out", rp.out_dir, "Report directory")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    if (!config_file.empty())
      apply_json_config(*app.get_subcommands().front(), config_file);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*prepare) {
      prep.options.seed = seed;
      return cmd_prepare(prep, out);
    }
    if (*train_cmd) {
      tc.seed = seed;
      return cmd_train(tr, out);
    }
    if (*enhance)
      return cmd_enhance(en, out, err);
    if (*deconvolve)
      return cmd_deconvolve(dc, out, err);
    if (*evaluate)
      return cmd_evaluate(ev, out, err);
    return cmd_report(rp, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

} // namespace cxgan::cli
