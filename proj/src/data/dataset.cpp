// SPDX-License-Identifier: Apache-2.0
#include "cxgan/data/dataset.hpp"
#include "cxgan/data/image_io.hpp"
#include "cxgan/data/registration.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

namespace cxgan::data {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string &s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

const char *kind_name(TransformKind k) {
  switch (k) {
  case TransformKind::Rotate: return "rotate";
  case TransformKind::Crop: return "crop";
  case TransformKind::FlipHorizontal: return "flip_horizontal";
  case TransformKind::FlipVertical: return "flip_vertical";
  case TransformKind::Rot90: return "rot90";
  case TransformKind::Translate: return "translate";
  }
  return "?";
}

const char *target_name(Target t) {
  switch (t) {
  case Target::Lq: return "lq";
  case Target::Hq: return "hq";
  case Target::Both: return "both";
  }
  return "?";
}

json log_json(const std::vector<LogEntry> &log) {
  json arr = json::array();
  for (const LogEntry &e : log) {
    json j{{"target", target_name(e.target)}, {"kind", kind_name(e.transform.kind)}};
    switch (e.transform.kind) {
    case TransformKind::Rotate:
      j["angle_deg"] = e.transform.angle_deg;
      break;
    case TransformKind::Crop:
      j["y"] = e.transform.dy;
      j["x"] = e.transform.dx;
      j["height"] = e.transform.height;
      j["width"] = e.transform.width;
      break;
    case TransformKind::Rot90:
      j["quarter_turns"] = e.transform.quarter_turns;
      break;
    case TransformKind::Translate:
      j["dy"] = e.transform.dy;
      j["dx"] = e.transform.dx;
      break;
    default:
      break;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

void check_fractions(const std::array<double, 3> &f) {
  for (double v : f)
    if (!(v >= 0.0 && v <= 1.0))
      throw Error("split fractions must lie in [0, 1]");
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-6)
    throw Error("split fractions must sum to 1");
}

nn::Tensor clamp_unit(nn::Tensor t) {
  for (float &v : t.values())
    v = std::clamp(v, 0.0f, 1.0f);
  return t;
}

} // namespace

PairedSample align_pair(const nn::Tensor &lq_raw, const nn::Tensor &hq_raw,
                        const std::string &id, const AlignOptions &options) {
  const nn::Shape ls = lq_raw.shape(), hs = hq_raw.shape();
  if (ls.n != 1 || hs.n != 1 || ls.c != hs.c)
    throw ShapeError("align_pair " + id + ": incompatible shapes " + ls.str() + " and " +
                     hs.str());
  if (ls.h < hs.h || ls.w < hs.w)
    throw Error("align_pair " + id + ": LQ field " + ls.str() +
                " is smaller than the HQ field " + hs.str());
  const std::size_t P = options.patch_size;
  if (P == 0 || hs.h < P || hs.w < P)
    throw Error("align_pair " + id + ": HQ field " + hs.str() + " is smaller than the " +
                std::to_string(P) + " px patch");

  const long oy = static_cast<long>((ls.h - hs.h) / 2);
  const long ox = static_cast<long>((ls.w - hs.w) / 2);
  const Plane hq_gray = grayscale(hq_raw);
  const Plane lq_gray = grayscale(lq_raw);
  const Transform center = Transform::crop(oy, ox, hs.h, hs.w);

  // lq ~ rotate(hq, angle) up to a shift; undo it on the LQ side
  const double angle = estimate_rotation(hq_gray, apply_transform(lq_gray, center),
                                         options.rotation_range_deg,
                                         options.rotation_step_deg);
  const Transform unrotate = Transform::rotate(angle == 0.0 ? 0.0 : -angle);
  const nn::Tensor lq_rot = apply_transform(lq_raw, unrotate);
  const Shift s = estimate_shift(hq_gray, apply_transform(grayscale(lq_rot), center));
  const Transform frame = Transform::crop(oy + s.dy, ox + s.dx, hs.h, hs.w);
  const Transform patch = Transform::crop(static_cast<long>((hs.h - P) / 2),
                                          static_cast<long>((hs.w - P) / 2), P, P);

  PairedSample out;
  out.id = id;
  out.lq = clamp_unit(apply_transform(apply_transform(lq_rot, frame), patch));
  out.hq = clamp_unit(apply_transform(hq_raw, patch));
  out.transform_log = {{Target::Lq, unrotate}, {Target::Lq, frame}, {Target::Both, patch}};
  out.correlation = ncc(grayscale(out.lq), grayscale(out.hq));
  if (!(out.correlation >= options.min_correlation))
    throw Error("unalignable pair " + id + ": correlation " +
                std::to_string(out.correlation) + " below " +
                std::to_string(options.min_correlation));
  return out;
}

std::vector<PairedSample> augment_pair(const PairedSample &sample, std::uint64_t seed,
                                       int extra) {
  if (extra < 0)
    throw Error("augment_pair: negative augmentation count");
  std::vector<PairedSample> out{sample};
  std::mt19937_64 rng(seed ^ fnv1a(sample.id));
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> turns(0, 3);
  std::uniform_int_distribution<long> offset(-16, 16);
  for (int k = 1; k <= extra; ++k) {
    std::vector<Transform> ts;
    if (coin(rng))
      ts.push_back(Transform::flip_horizontal());
    if (coin(rng))
      ts.push_back(Transform::flip_vertical());
    if (const int q = turns(rng); q != 0)
      ts.push_back(Transform::rot90(q));
    const long dy = offset(rng), dx = offset(rng);
    if (dy != 0 || dx != 0)
      ts.push_back(Transform::translate(dy, dx));
    if (ts.empty())
      ts.push_back(Transform::flip_horizontal());

    PairedSample aug;
    aug.id = sample.id + "_aug" + std::to_string(k);
    aug.lq = apply_transforms(sample.lq, ts);
    aug.hq = apply_transforms(sample.hq, ts);
    aug.correlation = sample.correlation;
    aug.transform_log = sample.transform_log;
    for (const Transform &t : ts)
      aug.transform_log.push_back({Target::Both, t});
    out.push_back(std::move(aug));
  }
  return out;
}

std::string to_string(Split s) {
  switch (s) {
  case Split::Train: return "train";
  case Split::Test: return "test";
  case Split::Validation: return "validation";
  }
  return "?";
}

Split parse_split(const std::string &s) {
  if (s == "train")
    return Split::Train;
  if (s == "test")
    return Split::Test;
  if (s == "validation")
    return Split::Validation;
  throw Error("unknown split '" + s + "'");
}

std::size_t DatasetManifest::count(Split s) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [s](const ManifestEntry &e) { return e.split == s; }));
}

SplitCounts split_counts(std::size_t n, const std::array<double, 3> &fractions) {
  check_fractions(fractions);
  const double N = static_cast<double>(n);
  const auto test = static_cast<std::size_t>(std::floor(fractions[1] * N + 1e-9));
  const auto val = static_cast<std::size_t>(std::floor(fractions[2] * N + 1e-9));
  return {n - test - val, test, val};
}

DatasetManifest split_dataset(std::vector<ManifestEntry> entries,
                              const std::array<double, 3> &fractions, std::uint64_t seed) {
  if (entries.size() < 3)
    throw Error("split_dataset: need at least 3 samples, got " +
                std::to_string(entries.size()));
  std::set<std::string> ids;
  for (const ManifestEntry &e : entries)
    if (!ids.insert(e.id).second)
      throw Error("split_dataset: duplicate id " + e.id);

  const SplitCounts c = split_counts(entries.size(), fractions);
  std::mt19937_64 rng(seed);
  std::shuffle(entries.begin(), entries.end(), rng);
  for (std::size_t i = 0; i < entries.size(); ++i)
    entries[i].split = i < c.train            ? Split::Train
                       : i < c.train + c.test ? Split::Test
                                              : Split::Validation;
  DatasetManifest m;
  m.seed = seed;
  m.fractions = fractions;
  m.entries = std::move(entries);
  return m;
}

void write_manifest(const std::filesystem::path &path, const DatasetManifest &m) {
  json entries = json::array();
  for (const ManifestEntry &e : m.entries)
    entries.push_back({{"id", e.id},
                       {"lq_path", e.lq_path},
                       {"hq_path", e.hq_path},
                       {"split", to_string(e.split)}});
  const json doc{{"version", m.version},
                 {"seed", m.seed},
                 {"fractions", m.fractions},
                 {"entries", std::move(entries)}};
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

DatasetManifest read_manifest(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open manifest " + path.string());
  DatasetManifest m;
  try {
    const json doc = json::parse(in);
    m.version = doc.at("version").get<int>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.fractions = doc.at("fractions").get<std::array<double, 3>>();
    for (const json &e : doc.at("entries"))
      m.entries.push_back({e.at("id").get<std::string>(), e.at("lq_path").get<std::string>(),
                           e.at("hq_path").get<std::string>(),
                           parse_split(e.at("split").get<std::string>())});
  } catch (const json::exception &ex) {
    throw Error("malformed manifest " + path.string() + ": " + ex.what());
  }
  if (m.version != 1)
    throw Error("unsupported manifest version " + std::to_string(m.version));
  return m;
}

std::filesystem::path resolve(const std::filesystem::path &manifest_path,
                              const std::string &entry_path) {
  const std::filesystem::path p(entry_path);
  return p.is_absolute() ? p : manifest_path.parent_path() / p;
}

PrepareResult prepare_dataset(const PrepareOptions &opt) {
  check_fractions(opt.fractions);
  for (const auto &dir : {opt.lq_dir, opt.hq_dir})
    if (!std::filesystem::is_directory(dir))
      throw Error("not a directory: " + dir.string());

  // stem -> path; sorted so the result is independent of directory order
  auto scan = [](const std::filesystem::path &dir) {
    std::map<std::string, std::filesystem::path> files;
    for (const auto &e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && is_image_file(e.path()))
        files.emplace(e.path().stem().string(), e.path());
    return files;
  };
  const auto lq_files = scan(opt.lq_dir);
  const auto hq_files = scan(opt.hq_dir);

  PrepareResult result;
  std::vector<PairedSample> aligned;
  for (const auto &[stem, lq_path] : lq_files) {
    const auto hq = hq_files.find(stem);
    if (hq == hq_files.end())
      continue;
    AlignmentRecord rec;
    rec.id = stem;
    try {
      PairedSample s = align_pair(load_image(lq_path), load_image(hq->second), stem, opt.align);
      rec.aligned = true;
      rec.correlation = s.correlation;
      rec.transforms = s.transform_log;
      aligned.push_back(std::move(s));
    } catch (const Error &e) {
      rec.message = e.what();
    }
    result.report.push_back(std::move(rec));
  }
  if (result.report.empty())
    throw Error("no matchable LQ/HQ file pairs between " + opt.lq_dir.string() + " and " +
                opt.hq_dir.string());

  const std::filesystem::path lq_out = opt.out_dir / "lq", hq_out = opt.out_dir / "hq";
  std::filesystem::create_directories(lq_out);
  std::filesystem::create_directories(hq_out);

  std::map<std::string, const PairedSample *> by_id;
  std::vector<ManifestEntry> originals;
  for (const PairedSample &s : aligned) {
    by_id[s.id] = &s;
    originals.push_back({s.id, "lq/" + s.id + ".png", "hq/" + s.id + ".png", Split::Train});
  }

  auto emit = [&](const PairedSample &s, Split split) {
    save_image(lq_out / (s.id + ".png"), s.lq);
    save_image(hq_out / (s.id + ".png"), s.hq);
    return ManifestEntry{s.id, "lq/" + s.id + ".png", "hq/" + s.id + ".png", split};
  };

  DatasetManifest manifest;
  if (opt.order == SplitOrder::SplitFirst) {
    // augmented copies stay in the split of their source field
    const DatasetManifest base = split_dataset(originals, opt.fractions, opt.seed);
    manifest.seed = base.seed;
    manifest.fractions = base.fractions;
    for (const ManifestEntry &e : base.entries)
      for (const PairedSample &s : augment_pair(*by_id.at(e.id), opt.seed, opt.augment_extra))
        manifest.entries.push_back(emit(s, e.split));
  } else {
    std::vector<PairedSample> pool;
    for (const PairedSample &s : aligned)
      for (PairedSample &a : augment_pair(s, opt.seed, opt.augment_extra))
        pool.push_back(std::move(a));
    std::vector<ManifestEntry> all;
    for (const PairedSample &s : pool)
      all.push_back({s.id, "lq/" + s.id + ".png", "hq/" + s.id + ".png", Split::Train});
    manifest = split_dataset(std::move(all), opt.fractions, opt.seed);
    std::map<std::string, Split> split_of;
    for (const ManifestEntry &e : manifest.entries)
      split_of[e.id] = e.split;
    for (const PairedSample &s : pool)
      emit(s, split_of.at(s.id));
  }
  write_manifest(opt.out_dir / "manifest.json", manifest);

  json report = json::array();
  for (const AlignmentRecord &r : result.report)
    report.push_back({{"id", r.id},
                      {"aligned", r.aligned},
                      {"correlation", r.correlation},
                      {"message", r.message},
                      {"transforms", log_json(r.transforms)}});
  std::ofstream(opt.out_dir / "alignment.json", std::ios::binary) << report.dump(2) << '\n';

  result.manifest = std::move(manifest);
  return result;
}

} // namespace cxgan::data
