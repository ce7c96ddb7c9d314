// SPDX-License-Identifier: Apache-2.0
#include "cxgan/cli/cli.hpp"
#include "cxgan/data/dataset.hpp"
#include "cxgan/data/image_io.hpp"
#include "cxgan/metrics/metrics.hpp"
#include "cxgan/psf/deconv.hpp"
#include "cxgan/stats/evaluate.hpp"
#include "cxgan/train/checkpoint.hpp"

#include "unit/synthetic.hpp"

#include <gtest/gtest.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace cxgan::cli {
namespace {

namespace fs = std::filesystem;
using cxgan::testing::blob_scene;
using cxgan::testing::random_image;
using cxgan::testing::to_rgb;

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("cxgan_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path &p, const std::string &text) { std::ofstream(p, std::ios::binary) << text; }

/// Train, test and validation pairs of 16x16 blob scenes.
fs::path small_dataset(const fs::path &dir, bool identical = false) {
  data::DatasetManifest m;
  const data::Split splits[] = {data::Split::Train, data::Split::Train, data::Split::Test,
                                data::Split::Test, data::Split::Validation};
  for (std::size_t i = 0; i < std::size(splits); ++i) {
    const auto p = cxgan::testing::degraded_pair(16, 40 + i);
    const std::string id = "p" + std::to_string(i);
    data::save_image(dir / "hq" / (id + ".png"), p.hq);
    data::save_image(dir / "lq" / (id + ".png"), identical ? p.hq : p.lq);
    m.entries.push_back({id, "lq/" + id + ".png", "hq/" + id + ".png", splits[i]});
  }
  data::write_manifest(dir / "manifest.json", m);
  return dir / "manifest.json";
}

const std::vector<std::string> kTinyModel = {"--g-width", "2", "--g-depth", "2", "--d-width", "2",
                                             "--d-max-width", "4", "--d-hidden", "4"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string> &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// ---------------------------------------------------------------- usage

TEST(Cli, HelpListsEveryFlagWithItsDefault) {
  for (const std::string sub : {"prepare", "train", "enhance", "deconvolve", "evaluate", "report"}) {
    const auto r = cli({sub, "--help"});
    EXPECT_EQ(r.code, kExitOk) << sub;
    std::istringstream lines(r.out);
    std::string line;
    std::size_t flags = 0;
    while (std::getline(lines, line)) {
      const auto at = line.find("  --");
      if (at != 0 || line.starts_with("  --config") || line.find("REQUIRED") != std::string::npos)
        continue;
      ++flags;
      EXPECT_NE(line.find('['), std::string::npos) << sub << ": " << line;
    }
    if (sub != "enhance" && sub != "report")
      EXPECT_GT(flags, 0u) << sub;
  }
  EXPECT_NE(cli({"deconvolve", "--help"}).out.find("--rl-iterations INT:NONNEGATIVE [10]"),
            std::string::npos);
  EXPECT_NE(cli({"prepare", "--help"}).out.find("[split-first]"), std::string::npos);
}

TEST(Cli, UsageErrorsExitWithTwo) {
  const fs::path dir = temp_dir("usage");
  auto r = cli({"train", "--manifest", (dir / "missing.json").string(), "--out", dir.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("missing.json"), std::string::npos) << r.err;
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"report", "--metrics", "x", "--bogus"}).code, kExitUsage);

  const fs::path manifest = small_dataset(dir);
  write(dir / "bad_key.json", R"({"no_such_flag": 3})");
  r = cli({"train", "--manifest", manifest.string(), "--out", (dir / "o").string(), "--config",
           (dir / "bad_key.json").string()});
  EXPECT_EQ(r.code, kExitUsage) << r.err;
  write(dir / "bad.json", "{not json");
  r = cli({"train", "--manifest", manifest.string(), "--out", (dir / "o").string(), "--config",
           (dir / "bad.json").string()});
  EXPECT_EQ(r.code, kExitUsage) << r.err;
  EXPECT_FALSE(fs::exists(dir / "o"));
}

TEST(Cli, FlagBeatsFileBeatsDefault) {
  const fs::path dir = temp_dir("precedence");
  const fs::path manifest = small_dataset(dir);
  // g_width: file and flag; g_depth: file only; checkpoint_every: default.
  write(dir / "run.json", R"({"iterations": 2, "g_width": 4, "g-depth": 2,
    "d_width": 2, "d_max_width": 4, "d_hidden": 4, "validation_every": 5, "lr": 0.001})");
  const auto r = cli({"train", "--config", (dir / "run.json").string(), "--manifest",
                      manifest.string(), "--out", (dir / "out").string(), "--g-width", "2",
                      "--validation-every", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto header = train::read_checkpoint_header(dir / "out" / "final.ckpt");
  EXPECT_EQ(header.topology.base_width, 2u); // flag over file
  EXPECT_EQ(header.topology.depth, 2u);      // file over default 4
  EXPECT_EQ(header.meta.iteration, 2u);
  EXPECT_FALSE(fs::exists(dir / "out" / "checkpoints")); // default cadence 10000
  const std::string log = slurp(dir / "out" / "train_log.csv");
  EXPECT_NE(log.find("\n1,"), std::string::npos) << log; // every iteration validated
  EXPECT_NE(log.find("\n2,"), std::string::npos) << log;
  EXPECT_NE(r.out.find("\n1,"), std::string::npos) << "progress mirrors the log";
}

// ---------------------------------------------------------------- prepare

TEST(Cli, PrepareAugmentsAndReproduces) {
  const fs::path dir = temp_dir("prepare");
  for (int i = 0; i < 2; ++i) {
    const nn::Tensor img = to_rgb(blob_scene(40, 40, 60 + i, 30, 2.5));
    data::save_image(dir / "lq" / ("f" + std::to_string(i) + ".png"), img);
    data::save_image(dir / "hq" / ("f" + std::to_string(i) + ".png"), img);
  }
  data::save_image(dir / "lq" / "noise.png", random_image(3, 40, 40, 1));
  data::save_image(dir / "hq" / "noise.png", random_image(3, 40, 40, 2));
  const std::vector<std::string> base = {"prepare", "--lq-dir", (dir / "lq").string(),
                                         "--hq-dir", (dir / "hq").string(), "--patch-size", "32",
                                         "--seed", "9", "--fractions", "0.5", "0.25", "0.25",
                                         "--split-order", "augment-first"};
  const auto r1 = cli(concat(base, {"--out", (dir / "a").string()}));
  ASSERT_EQ(r1.code, kExitOk) << r1.err;
  EXPECT_NE(r1.out.find("unaligned noise"), std::string::npos) << r1.out;
  const auto m = data::read_manifest(dir / "a" / "manifest.json");
  EXPECT_EQ(m.entries.size(), 8u); // 2 * (1 + 3)
  for (const auto &e : m.entries)
    EXPECT_FALSE(e.id.starts_with("noise"));

  ASSERT_EQ(cli(concat(base, {"--out", (dir / "b").string()})).code, kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "manifest.json"), slurp(dir / "b" / "manifest.json"));

  const auto bad = cli(concat(base, {"--out", (dir / "c").string(), "--patch-size", "zero"}));
  EXPECT_EQ(bad.code, kExitUsage);
}

// ---------------------------------------------------------------- train

TEST(Cli, ZeroIterationsWritesTheInitialCheckpointOnly) {
  const fs::path dir = temp_dir("zero");
  const fs::path manifest = small_dataset(dir);
  const auto r = cli(concat({"train", "--manifest", manifest.string(), "--out",
                             (dir / "out").string(), "--iterations", "0"},
                            kTinyModel));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "final.ckpt"));
  EXPECT_FALSE(fs::exists(dir / "out" / "best.ckpt"));
  EXPECT_EQ(train::read_checkpoint_header(dir / "out" / "final.ckpt").meta.iteration, 0u);
}

TEST(Cli, SameSeedGivesIdenticalBytes) {
  const fs::path dir = temp_dir("seed");
  const fs::path manifest = small_dataset(dir);
  for (const char *out : {"a", "b"}) {
    const auto r = cli(concat({"train", "--manifest", manifest.string(), "--out",
                               (dir / out).string(), "--iterations", "3", "--validation-every",
                               "2", "--seed", "7", "--lr", "1e-3"},
                              kTinyModel));
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  for (const char *f : {"train_log.csv", "final.ckpt", "best.ckpt"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  const auto other = cli(concat({"train", "--manifest", manifest.string(), "--out",
                                 (dir / "c").string(), "--iterations", "3", "--seed", "8"},
                                kTinyModel));
  ASSERT_EQ(other.code, kExitOk);
  EXPECT_NE(slurp(dir / "a" / "final.ckpt"), slurp(dir / "c" / "final.ckpt"));
}

// ---------------------------------------------------------------- enhance

/// Generator whose output equals its non-negative input exactly.
models::Generator identity_generator() {
  models::GeneratorConfig cfg;
  cfg.base_width = 4;
  cfg.depth = 2;
  models::Generator g(cfg);
  const std::set<std::string> pass = {"down1.transition.weight", "up2.conv1.weight",
                                      "up2.conv2.weight", "up2.conv3.weight", "head.weight"};
  for (auto *p : g.parameters()) {
    p->value.fill(0.0f);
    if (pass.count(p->name))
      for (std::size_t c = 0; c < 3; ++c)
        p->value(c, c, 1, 1) = 1.0f;
  }
  return g;
}

TEST(Cli, IdentityStubEnhancesToItsInput) {
  const fs::path dir = temp_dir("identity");
  auto g = identity_generator();
  train::save_checkpoint(dir / "id.ckpt", g, {});
  const nn::Tensor img = to_rgb(blob_scene(16, 16, 3, 5, 1.5));
  data::save_image(dir / "in" / "x.png", img);
  const auto r = cli({"enhance", (dir / "in").string(), "--checkpoint", (dir / "id.ckpt").string(),
                      "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "in" / "x.png"), slurp(dir / "out" / "x_generated.png"));
}

TEST(Cli, EnhanceWritesOneSixteenBitImagePerInput) {
  const fs::path dir = temp_dir("enhance");
  models::GeneratorConfig cfg;
  cfg.base_width = 2;
  cfg.depth = 2;
  models::Generator g(cfg);
  nn::Rng rng(3);
  g.init(rng);
  train::save_checkpoint(dir / "g.ckpt", g, {});
  for (int i = 0; i < 3; ++i)
    data::save_image(dir / "in" / ("im" + std::to_string(i) + ".tif"), random_image(3, 12, 8, i), 8);
  const std::vector<std::string> args = {"enhance", (dir / "in").string(), "--checkpoint",
                                         (dir / "g.ckpt").string()};
  ASSERT_EQ(cli(concat(args, {"--out", (dir / "a").string()})).code, kExitOk);
  ASSERT_EQ(cli(concat(args, {"--out", (dir / "b").string()})).code, kExitOk);
  for (int i = 0; i < 3; ++i) {
    const std::string name = "im" + std::to_string(i) + "_generated.tif";
    const cv::Mat m = cv::imread((dir / "a" / name).string(), cv::IMREAD_UNCHANGED);
    ASSERT_FALSE(m.empty()) << name;
    EXPECT_EQ(m.depth(), CV_16U);
    EXPECT_EQ(m.rows, 12);
    EXPECT_EQ(m.cols, 8);
    EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name));
  }
  EXPECT_EQ(std::distance(fs::directory_iterator(dir / "a"), fs::directory_iterator{}), 3);
}

TEST(Cli, EnhanceSuggestsCenterCrop) {
  const fs::path dir = temp_dir("crop");
  auto g = identity_generator();
  train::save_checkpoint(dir / "g.ckpt", g, {});
  data::save_image(dir / "ok.png", random_image(3, 8, 8, 1));
  data::save_image(dir / "odd.png", random_image(3, 10, 9, 1));
  const auto r = cli({"enhance", (dir / "ok.png").string(), (dir / "odd.png").string(),
                      "--checkpoint", (dir / "g.ckpt").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("center-crop to 8x8"), std::string::npos) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "ok_generated.png"));
}

// ---------------------------------------------------------------- deconvolve

TEST(Cli, DeltaPsfDeconvolutionKeepsTheImage) {
  const fs::path dir = temp_dir("delta");
  data::save_image(dir / "x.tif", random_image(3, 20, 20, 5));
  const auto r = cli({"deconvolve", (dir / "x.tif").string(), "--delta-psf", "--out",
                      (dir / "out").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto a = data::load_image(dir / "x.tif");
  const auto b = data::load_image(dir / "out" / "x_deconvolved.tif");
  for (std::size_t i = 0; i < a.size(); ++i)
    ASSERT_NEAR(a.values()[i], b.values()[i], 1.0 / 65535);
}

TEST(Cli, DeconvolutionRestoresPerChannelBlur) {
  const fs::path dir = temp_dir("blur");
  nn::Tensor truth({1, 3, 64, 64}, 0.05f);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pos(4, 59);
  for (int i = 0; i < 24; ++i) {
    const std::size_t y = pos(rng), x = pos(rng);
    for (std::size_t c = 0; c < 3; ++c)
      truth(0, c, y, x) = 0.9f;
  }
  nn::Tensor blurred(truth.shape());
  for (std::size_t c = 0; c < 3; ++c) {
    psf::PsfParams p;
    p.wavelength_nm = psf::kRgbWavelengthsNm[c];
    Plane plane(64, 64);
    for (std::size_t i = 0; i < plane.size(); ++i)
      plane.values[i] = truth.plane(0, c)[i];
    const Plane b = psf::fft_convolve(plane, psf::born_wolf_psf(p));
    for (std::size_t i = 0; i < plane.size(); ++i)
      blurred.plane(0, c)[i] = static_cast<float>(b.values[i]);
  }
  data::save_image(dir / "b.tif", blurred);
  ASSERT_EQ(cli({"deconvolve", (dir / "b.tif").string(), "--out", dir.string()}).code, kExitOk);
  const double before = metrics::psnr(truth, data::load_image(dir / "b.tif"));
  const double after = metrics::psnr(truth, data::load_image(dir / "b_deconvolved.tif"));
  EXPECT_GE(after - before, 1.0) << before << " -> " << after;
}

// ---------------------------------------------------------------- evaluate, report

TEST(Cli, EvaluateIdentityStubOnIdenticalPairs) {
  const fs::path dir = temp_dir("evaluate");
  const fs::path manifest = small_dataset(dir, true);
  auto g = identity_generator();
  train::save_checkpoint(dir / "id.ckpt", g, {});
  const auto r = cli({"evaluate", "--manifest", manifest.string(), "--checkpoint",
                      (dir / "id.ckpt").string(), "--deconvolve", "--delta-psf", "--out",
                      (dir / "eval").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = stats::parse_metrics_csv(slurp(dir / "eval" / "metrics.csv"));
  ASSERT_EQ(rows.size(), 6u); // 2 test pairs x 3 comparisons
  for (const auto &row : rows) {
    EXPECT_EQ(row.report.mse, 0.0) << row.label();
    EXPECT_EQ(row.report.nrmse, 0.0) << row.label();
    EXPECT_EQ(row.report.ssim, 1.0) << row.label();
    EXPECT_TRUE(std::isinf(row.report.psnr)) << row.label();
  }
  EXPECT_EQ(rows[1].label(), "GEN-vs-HQ:p2");
}

TEST(Cli, EvaluatePartialFailureExitsWithOne) {
  const fs::path dir = temp_dir("partial");
  const fs::path manifest = small_dataset(dir);
  fs::remove(dir / "hq" / "p3.png");
  const auto r = cli({"evaluate", "--manifest", manifest.string(), "--out", (dir / "e").string()});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_NE(r.err.find("LQ-vs-HQ:p3"), std::string::npos) << r.err;
  EXPECT_TRUE(fs::exists(dir / "e" / "metrics.csv"));
}

TEST(Cli, ReportDirectoryHoldsExactlyTheContractFiles) {
  const fs::path dir = temp_dir("report");
  const fs::path manifest = small_dataset(dir);
  models::GeneratorConfig cfg;
  cfg.base_width = 2;
  cfg.depth = 2;
  models::Generator g(cfg);
  nn::Rng rng(4);
  g.init(rng);
  train::save_checkpoint(dir / "g.ckpt", g, {});
  ASSERT_EQ(cli({"evaluate", "--manifest", manifest.string(), "--checkpoint",
                 (dir / "g.ckpt").string(), "--deconvolve", "--split", "train", "--out",
                 (dir / "e").string()})
                .code,
            kExitOk);
  const auto r = cli({"report", "--metrics", (dir / "e" / "metrics.csv").string(), "--out",
                      (dir / "r").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("ssim: Kruskal-Wallis H"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("LQ-vs-HQ vs GEN-vs-HQ: z"), std::string::npos) << r.out;
  std::set<std::string> names;
  for (const auto &e : fs::directory_iterator(dir / "r"))
    names.insert(e.path().filename().string());
  EXPECT_EQ(names, (std::set<std::string>{"metrics.csv", "summary.csv", "mse.svg", "nrmse.svg",
                                          "ssim.svg", "psnr.svg"}));
  EXPECT_EQ(slurp(dir / "r" / "metrics.csv"), slurp(dir / "e" / "metrics.csv"));
}

} // namespace
} // namespace cxgan::cli
