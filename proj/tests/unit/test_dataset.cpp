// SPDX-License-Identifier: Apache-2.0
#include "cxgan/data/dataset.hpp"
#include "cxgan/data/image_io.hpp"
#include "cxgan/data/registration.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

using namespace cxgan;
using namespace cxgan::data;
using cxgan::testing::blob_scene;
using cxgan::testing::random_image;
using cxgan::testing::to_rgb;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("cxgan_test_" + name);
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

std::vector<ManifestEntry> entries(std::size_t n) {
  std::vector<ManifestEntry> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"s" + std::to_string(i), "lq/" + std::to_string(i) + ".png",
                   "hq/" + std::to_string(i) + ".png", Split::Train});
  return out;
}

} // namespace

TEST(ImageIo, SixteenBitFullScaleIsOne) {
  const fs::path dir = temp_dir("io16");
  cv::Mat m(2, 3, CV_16UC1, cv::Scalar(0));
  m.at<std::uint16_t>(1, 2) = 65535;
  m.at<std::uint16_t>(0, 1) = 32768;
  cv::imwrite((dir / "a.tif").string(), m);
  const nn::Tensor t = load_image(dir / "a.tif");
  EXPECT_EQ(t.shape(), (nn::Shape{1, 1, 2, 3}));
  EXPECT_EQ(t(0, 0, 1, 2), 1.0f);
  EXPECT_EQ(t(0, 0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(t(0, 0, 0, 1), 32768.0f / 65535.0f);
}

TEST(ImageIo, EightBitZeroIsZero) {
  const fs::path dir = temp_dir("io8");
  cv::Mat m(4, 4, CV_8UC1, cv::Scalar(255));
  m.at<std::uint8_t>(2, 2) = 0;
  cv::imwrite((dir / "a.png").string(), m);
  const nn::Tensor t = load_image(dir / "a.png");
  EXPECT_EQ(t(0, 0, 2, 2), 0.0f);
  EXPECT_EQ(t(0, 0, 0, 0), 1.0f);
}

TEST(ImageIo, RoundTripWithinQuantizationStep) {
  const fs::path dir = temp_dir("iort");
  const nn::Tensor img = random_image(3, 17, 23, 3);
  for (const char *name : {"a.png", "a.tif"}) {
    save_image(dir / name, img);
    const nn::Tensor back = load_image(dir / name);
    ASSERT_EQ(back.shape(), img.shape());
    for (std::size_t i = 0; i < img.size(); ++i)
      EXPECT_LE(std::abs(back[i] - img[i]), 1.0 / 65535.0) << name;
  }
}

TEST(ImageIo, ChannelOrderIsRgb) {
  const fs::path dir = temp_dir("iorgb");
  nn::Tensor red({1, 3, 2, 2});
  for (std::size_t i = 0; i < 4; ++i)
    red.plane(0, 0)[i] = 1.0f;
  save_image(dir / "r.png", red);
  const cv::Mat m = cv::imread((dir / "r.png").string(), cv::IMREAD_UNCHANGED);
  EXPECT_EQ(m.at<cv::Vec3w>(0, 0)[2], 65535); // OpenCV keeps BGR
  EXPECT_EQ(m.at<cv::Vec3w>(0, 0)[0], 0);
  const nn::Tensor back = load_image(dir / "r.png");
  EXPECT_EQ(back(0, 0, 1, 1), 1.0f);
  EXPECT_EQ(back(0, 2, 1, 1), 0.0f);
}

TEST(ImageIo, Errors) {
  const fs::path dir = temp_dir("ioerr");
  EXPECT_THROW(load_image(dir / "missing.png"), Error);
  std::ofstream(dir / "junk.png") << "not an image";
  EXPECT_THROW(load_image(dir / "junk.png"), Error);
  cv::Mat f(3, 3, CV_32FC1, cv::Scalar(0.5));
  cv::imwrite((dir / "f.tif").string(), f);
  EXPECT_THROW(load_image(dir / "f.tif"), Error);
  EXPECT_THROW(save_image(dir / "a.png", random_image(2, 4, 4, 1)), ShapeError);
}

TEST(Registration, RecoversSyntheticShift) {
  const Plane a = blob_scene(64, 64, 11);
  const Plane b = roll(a, 3, 5);
  EXPECT_EQ(estimate_shift(a, b), (Shift{3, 5}));
  EXPECT_EQ(estimate_shift(a, roll(a, -7, 12)), (Shift{-7, 12}));
  EXPECT_EQ(estimate_shift(a, a), (Shift{0, 0}));
}

TEST(Registration, ShiftIsAntisymmetric) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Plane a = blob_scene(48, 40, seed);
    const Plane b = roll(blob_scene(48, 40, seed), static_cast<long>(seed * 4), -9);
    const Shift ab = estimate_shift(a, b), ba = estimate_shift(b, a);
    EXPECT_EQ(((ab.dy + ba.dy) % 48 + 48) % 48, 0);
    EXPECT_EQ(((ab.dx + ba.dx) % 40 + 40) % 40, 0);
  }
}

TEST(Registration, DegenerateInputsRejected) {
  const Plane flat(32, 32, 0.4);
  EXPECT_THROW(estimate_shift(flat, blob_scene(32, 32, 1)), Error);
  EXPECT_THROW(estimate_rotation(flat, flat), Error);
  EXPECT_THROW(estimate_shift(Plane(4, 4, 1), Plane(4, 5, 1)), ShapeError);
  const Plane a = blob_scene(32, 32, 1);
  EXPECT_THROW(estimate_rotation(a, a, 12.0, 0.5), Error);
  EXPECT_THROW(estimate_rotation(a, a, 5.0, 0.05), Error);
}

TEST(Registration, RecoversSyntheticRotation) {
  const Plane a = blob_scene(96, 96, 21);
  const Plane b = apply_transform(a, Transform::rotate(2.0));
  const double angle = estimate_rotation(a, b, 5.0, 0.5);
  EXPECT_NEAR(angle, 2.0, 0.5);
  const Plane c = roll(apply_transform(a, Transform::rotate(-1.5)), 2, -3);
  EXPECT_NEAR(estimate_rotation(a, c, 5.0, 0.5), -1.5, 0.5);
}

TEST(Registration, IdentityRotationAndGridMembership) {
  const Plane a = blob_scene(64, 64, 22);
  EXPECT_EQ(estimate_rotation(a, a, 5.0, 0.5), 0.0);
  const Plane b = apply_transform(a, Transform::rotate(1.3));
  const double r = estimate_rotation(a, b, 3.0, 0.7);
  EXPECT_NEAR(std::remainder(r, 0.7), 0.0, 1e-9);
  EXPECT_LE(std::abs(r), 3.0);
}

TEST(Registration, SelectBestZ) {
  std::vector<Plane> one{blob_scene(24, 24, 5)};
  EXPECT_EQ(select_best_z(one, one), (std::pair<std::size_t, std::size_t>{0, 0}));

  std::vector<Plane> a, b;
  for (std::uint64_t s = 0; s < 5; ++s)
    a.push_back(blob_scene(24, 24, 100 + s));
  for (std::size_t i = 0; i < 5; ++i)
    b.push_back(a[(i + 1) % 5]);
  const auto [ia, ib] = select_best_z(a, b);
  EXPECT_LT(ia, a.size());
  EXPECT_LT(ib, b.size());
  EXPECT_EQ(ia, (ib + 1) % 5);
  EXPECT_THROW(select_best_z(std::span<const Plane>{}, b), Error);
}

TEST(AlignPair, PreAlignedPairLogsIdentity) {
  const nn::Tensor img = to_rgb(blob_scene(80, 80, 31));
  AlignOptions opt;
  opt.patch_size = 64;
  const PairedSample s = align_pair(img, img, "p", opt);
  ASSERT_EQ(s.transform_log.size(), 3u);
  EXPECT_EQ(s.transform_log[0].transform, Transform::rotate(0.0));
  EXPECT_EQ(s.transform_log[1].transform, Transform::crop(0, 0, 80, 80));
  EXPECT_EQ(s.transform_log[2].transform, Transform::crop(8, 8, 64, 64));
  EXPECT_EQ(s.lq, s.hq);
  EXPECT_NEAR(s.correlation, 1.0, 1e-12);
  // preparing again leaves a prepared pair untouched
  opt.patch_size = 64;
  const PairedSample again = align_pair(s.lq, s.hq, "p", opt);
  EXPECT_EQ(again.lq, s.lq);
  EXPECT_EQ(again.hq, s.hq);
}

TEST(AlignPair, RecoversKnownRotationAndShift) {
  const Plane scene = blob_scene(128, 128, 41, 120, 3.0);
  const nn::Tensor hq = apply_transform(to_rgb(scene), Transform::crop(16, 16, 96, 96));
  const nn::Tensor lq = apply_transform(
      apply_transform(to_rgb(scene), Transform::rotate(1.0)), Transform::translate(4, -2));
  AlignOptions opt;
  opt.patch_size = 64;
  const PairedSample s = align_pair(lq, hq, "r", opt);
  EXPECT_NEAR(s.transform_log[0].transform.angle_deg, -1.0, 0.5);
  const Transform &frame = s.transform_log[1].transform;
  EXPECT_LE(std::abs(frame.dy - 16 - 4), 1);
  EXPECT_LE(std::abs(frame.dx - 16 + 2), 1);
  EXPECT_EQ(s.lq.shape(), (nn::Shape{1, 3, 64, 64}));
  EXPECT_EQ(s.hq.shape(), s.lq.shape());
  EXPECT_GT(s.correlation, 0.95);
}

TEST(AlignPair, DefaultPatchIs256Square) {
  const nn::Tensor img = to_rgb(blob_scene(300, 280, 51, 80, 5.0));
  const PairedSample s = align_pair(img, img, "big");
  EXPECT_EQ(s.lq.shape(), (nn::Shape{1, 3, 256, 256}));
  EXPECT_EQ(s.hq.shape(), (nn::Shape{1, 3, 256, 256}));
  for (float v : s.lq.values())
    EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
}

TEST(AlignPair, UnrelatedImagesAreUnalignable) {
  AlignOptions opt;
  opt.patch_size = 32;
  const nn::Tensor a = random_image(3, 48, 48, 1), b = random_image(3, 48, 48, 2);
  try {
    align_pair(a, b, "bad", opt);
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("unalignable pair"), std::string::npos);
  }
  EXPECT_THROW(align_pair(random_image(3, 40, 40, 1), random_image(3, 48, 48, 2), "x", opt),
               Error);
}

TEST(Augment, HorizontalFlipDefinition) {
  const nn::Tensor t = random_image(3, 5, 7, 4);
  const nn::Tensor f = apply_transform(t, Transform::flip_horizontal());
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 7; ++j)
        EXPECT_EQ(f(0, c, i, j), t(0, c, i, 7 - 1 - j));
}

TEST(Augment, QuarterTurnsCompose) {
  const nn::Tensor t = random_image(1, 4, 6, 5);
  const nn::Tensor r1 = apply_transform(t, Transform::rot90(1));
  EXPECT_EQ(r1.shape(), (nn::Shape{1, 1, 6, 4}));
  EXPECT_EQ(r1(0, 0, 0, 0), t(0, 0, 0, 5)); // right column to the top
  nn::Tensor r = t;
  for (int i = 0; i < 4; ++i)
    r = apply_transform(r, Transform::rot90(1));
  EXPECT_EQ(r, t);
  EXPECT_EQ(apply_transform(apply_transform(t, Transform::rot90(1)), Transform::rot90(3)), t);
}

TEST(Augment, TranslationFillsWithZero) {
  const nn::Tensor t(nn::Shape{1, 1, 8, 8}, 1.0f);
  const nn::Tensor s = apply_transform(t, Transform::translate(2, -3));
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x)
      EXPECT_EQ(s(0, 0, y, x), (y >= 2 && x < 5) ? 1.0f : 0.0f);
}

TEST(Augment, DeterministicAndPairingPreserved) {
  PairedSample s;
  s.id = "cell";
  s.lq = random_image(3, 32, 32, 6);
  s.hq = random_image(3, 32, 32, 7);
  s.transform_log = {{Target::Lq, Transform::rotate(0.5)}};
  const auto a = augment_pair(s, 99), b = augment_pair(s, 99);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0].lq, s.lq);
  std::set<std::string> ids;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].lq, b[k].lq);
    EXPECT_EQ(a[k].hq, b[k].hq);
    EXPECT_EQ(a[k].transform_log, b[k].transform_log);
    ids.insert(a[k].id);
    // replaying the logged augmentation reproduces the copy bit-exactly
    std::vector<Transform> ts;
    for (std::size_t i = s.transform_log.size(); i < a[k].transform_log.size(); ++i) {
      EXPECT_EQ(a[k].transform_log[i].target, Target::Both);
      ts.push_back(a[k].transform_log[i].transform);
    }
    EXPECT_EQ(apply_transforms(s.lq, ts), a[k].lq);
    EXPECT_EQ(apply_transforms(s.hq, ts), a[k].hq);
    for (const Transform &t : ts)
      if (t.kind == TransformKind::Translate) {
        EXPECT_LE(std::abs(t.dy), 16);
        EXPECT_LE(std::abs(t.dx), 16);
      }
  }
  EXPECT_EQ(ids.size(), 4u);
  EXPECT_NE(augment_pair(s, 100)[1].lq, a[1].lq);
}

TEST(Augment, CountsMatchTheDatasetSize) {
  PairedSample s;
  s.lq = random_image(1, 4, 4, 1);
  s.hq = s.lq;
  std::size_t total = 0;
  for (int i = 0; i < 149; ++i) {
    s.id = "f" + std::to_string(i);
    total += augment_pair(s, 1, 3).size();
  }
  EXPECT_EQ(total, 596u);
}

TEST(Split, PaperCounts) {
  const SplitCounts c = split_counts(600, {0.80, 0.19, 0.01});
  EXPECT_EQ(c.train, 480u);
  EXPECT_EQ(c.test, 114u);
  EXPECT_EQ(c.validation, 6u);
  const DatasetManifest m = split_dataset(entries(600), {0.80, 0.19, 0.01}, 5);
  EXPECT_EQ(m.count(Split::Train), 480u);
  EXPECT_EQ(m.count(Split::Test), 114u);
  EXPECT_EQ(m.count(Split::Validation), 6u);
  const SplitCounts d = split_counts(596, {0.80, 0.19, 0.01});
  EXPECT_EQ(d.test, 113u);
  EXPECT_EQ(d.validation, 5u);
  EXPECT_EQ(d.train, 478u);
}

TEST(Split, DeterministicDisjointExhaustive) {
  const auto in = entries(57);
  const DatasetManifest a = split_dataset(in, {0.6, 0.3, 0.1}, 3);
  EXPECT_EQ(a, split_dataset(in, {0.6, 0.3, 0.1}, 3));
  EXPECT_NE(a, split_dataset(in, {0.6, 0.3, 0.1}, 4));
  std::set<std::string> seen;
  for (const auto &e : a.entries)
    EXPECT_TRUE(seen.insert(e.id).second);
  EXPECT_EQ(seen.size(), in.size());
}

TEST(Split, Errors) {
  EXPECT_THROW(split_dataset(entries(2), {0.8, 0.19, 0.01}, 1), Error);
  EXPECT_THROW(split_dataset(entries(10), {0.8, 0.3, 0.01}, 1), Error);
  auto dup = entries(4);
  dup[3].id = dup[0].id;
  EXPECT_THROW(split_dataset(dup, {0.5, 0.25, 0.25}, 1), Error);
}

TEST(Manifest, RoundTripWithExactFields) {
  const fs::path dir = temp_dir("manifest");
  const DatasetManifest m = split_dataset(entries(10), {0.8, 0.1, 0.1}, 12);
  write_manifest(dir / "manifest.json", m);
  EXPECT_EQ(read_manifest(dir / "manifest.json"), m);
  const auto doc = nlohmann::json::parse(slurp(dir / "manifest.json"));
  std::set<std::string> keys;
  for (const auto &[k, v] : doc.items())
    keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"version", "seed", "fractions", "entries"}));
  std::set<std::string> entry_keys;
  for (const auto &[k, v] : doc["entries"][0].items())
    entry_keys.insert(k);
  EXPECT_EQ(entry_keys, (std::set<std::string>{"id", "lq_path", "hq_path", "split"}));
  std::ofstream(dir / "bad.json") << "{\"version\": 1}";
  EXPECT_THROW(read_manifest(dir / "bad.json"), Error);
}

TEST(Prepare, TwoPairsAugmentedThreeTimesGiveEightEntries) {
  const fs::path dir = temp_dir("prepare");
  for (int i = 0; i < 2; ++i) {
    const nn::Tensor img = to_rgb(blob_scene(40, 40, 60 + i, 30, 2.5));
    save_image(dir / "lq" / ("f" + std::to_string(i) + ".png"), img);
    save_image(dir / "hq" / ("f" + std::to_string(i) + ".tif"), img);
  }
  save_image(dir / "lq" / "noise.png", random_image(3, 40, 40, 1));
  save_image(dir / "hq" / "noise.png", random_image(3, 40, 40, 2));
  save_image(dir / "lq" / "orphan.png", random_image(3, 40, 40, 3));

  PrepareOptions opt;
  opt.lq_dir = dir / "lq";
  opt.hq_dir = dir / "hq";
  opt.seed = 4;
  opt.fractions = {0.5, 0.25, 0.25};
  opt.order = SplitOrder::AugmentFirst;
  opt.align.patch_size = 32;

  opt.out_dir = dir / "out1";
  const PrepareResult r1 = prepare_dataset(opt);
  EXPECT_EQ(r1.manifest.entries.size(), 8u);
  ASSERT_EQ(r1.report.size(), 3u);
  std::size_t failed = 0;
  for (const auto &rec : r1.report)
    if (!rec.aligned) {
      ++failed;
      EXPECT_EQ(rec.id, "noise");
      EXPECT_NE(rec.message.find("unalignable"), std::string::npos);
    }
  EXPECT_EQ(failed, 1u);
  for (const auto &e : r1.manifest.entries) {
    EXPECT_EQ(e.id.rfind("noise", 0), std::string::npos);
    EXPECT_TRUE(fs::exists(resolve(opt.out_dir / "manifest.json", e.lq_path)));
  }

  opt.out_dir = dir / "out2";
  prepare_dataset(opt);
  EXPECT_EQ(slurp(dir / "out1" / "manifest.json"), slurp(dir / "out2" / "manifest.json"));
  EXPECT_EQ(slurp(dir / "out1" / "alignment.json"), slurp(dir / "out2" / "alignment.json"));
  EXPECT_EQ(slurp(dir / "out1" / "lq" / "f1_aug2.png"),
            slurp(dir / "out2" / "lq" / "f1_aug2.png"));
}

TEST(Prepare, SplitFirstKeepsCopiesTogether) {
  const fs::path dir = temp_dir("prepare_sf");
  for (int i = 0; i < 4; ++i) {
    const nn::Tensor img = to_rgb(blob_scene(36, 36, 70 + i, 30, 2.5));
    save_image(dir / "lq" / ("f" + std::to_string(i) + ".png"), img);
    save_image(dir / "hq" / ("f" + std::to_string(i) + ".png"), img);
  }
  PrepareOptions opt;
  opt.lq_dir = dir / "lq";
  opt.hq_dir = dir / "hq";
  opt.out_dir = dir / "out";
  opt.fractions = {0.5, 0.25, 0.25};
  opt.align.patch_size = 32;
  const PrepareResult r = prepare_dataset(opt);
  EXPECT_EQ(r.manifest.entries.size(), 16u);
  std::map<std::string, std::set<Split>> splits;
  for (const auto &e : r.manifest.entries)
    splits[e.id.substr(0, 2)].insert(e.split);
  EXPECT_EQ(splits.size(), 4u);
  for (const auto &[k, v] : splits)
    EXPECT_EQ(v.size(), 1u) << k;
}

TEST(Prepare, NoMatchablePairs) {
  const fs::path dir = temp_dir("prepare_none");
  save_image(dir / "lq" / "a.png", random_image(3, 8, 8, 1));
  save_image(dir / "hq" / "b.png", random_image(3, 8, 8, 1));
  PrepareOptions opt;
  opt.lq_dir = dir / "lq";
  opt.hq_dir = dir / "hq";
  opt.out_dir = dir / "out";
  EXPECT_THROW(prepare_dataset(opt), Error);
}
