// SPDX-License-Identifier: Apache-2.0
#include "cxgan/train/checkpoint.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace cxgan::train {

using nlohmann::ordered_json;

namespace {

static_assert(sizeof(float) == 4);

constexpr const char *kFormat = "cxgan-checkpoint";

ordered_json metric_to_json(double v) {
  if (std::isfinite(v))
    return v;
  if (std::isnan(v))
    return "nan";
  return v > 0 ? "inf" : "-inf";
}

double metric_from_json(const ordered_json &j) {
  if (j.is_number())
    return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf")
    return -std::numeric_limits<double>::infinity();
  throw Error("checkpoint: bad metric value '" + s + "'");
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little)
    return v;
  else
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::vector<ParameterInfo> describe(const nn::ParameterList<float> &params) {
  std::vector<ParameterInfo> out;
  out.reserve(params.size());
  for (const auto *p : params)
    out.push_back({p->name, p->value.shape()});
  return out;
}

std::string header_line(const models::GeneratorConfig &config,
                        const std::vector<ParameterInfo> &params, const CheckpointMeta &meta) {
  ordered_json h;
  h["format"] = kFormat;
  h["format_version"] = kCheckpointVersion;
  h["model"] = "generator";
  h["topology"] = {{"channels", config.channels},
                   {"base_width", config.base_width},
                   {"depth", config.depth}};
  auto list = ordered_json::array();
  for (const auto &p : params)
    list.push_back({{"name", p.name}, {"shape", {p.shape.n, p.shape.c, p.shape.h, p.shape.w}}});
  h["parameters"] = std::move(list);
  h["iteration"] = meta.iteration;
  h["seed"] = meta.seed;
  h["val_ssim"] = metric_to_json(meta.val_ssim);
  h["val_psnr"] = metric_to_json(meta.val_psnr);
  return h.dump();
}

CheckpointHeader parse_header(const std::string &line, const std::filesystem::path &path) {
  CheckpointHeader out;
  try {
    const auto h = ordered_json::parse(line);
    if (h.at("format").get<std::string>() != kFormat)
      throw Error("not a checkpoint");
    out.format_version = h.at("format_version").get<int>();
    if (out.format_version != kCheckpointVersion)
      throw Error("unsupported format version " + std::to_string(out.format_version));
    if (h.at("model").get<std::string>() != "generator")
      throw Error("unsupported model '" + h.at("model").get<std::string>() + "'");
    const auto &t = h.at("topology");
    out.topology.channels = t.at("channels").get<std::size_t>();
    out.topology.base_width = t.at("base_width").get<std::size_t>();
    out.topology.depth = t.at("depth").get<std::size_t>();
    for (const auto &p : h.at("parameters")) {
      const auto s = p.at("shape").get<std::vector<std::size_t>>();
      if (s.size() != 4)
        throw Error("parameter shape must have 4 dims");
      out.parameters.push_back({p.at("name").get<std::string>(), {s[0], s[1], s[2], s[3]}});
    }
    out.meta.iteration = h.at("iteration").get<std::uint64_t>();
    out.meta.seed = h.at("seed").get<std::uint64_t>();
    out.meta.val_ssim = metric_from_json(h.at("val_ssim"));
    out.meta.val_psnr = metric_from_json(h.at("val_psnr"));
  } catch (const nlohmann::json::exception &e) {
    throw Error("checkpoint " + path.string() + ": bad header: " + e.what());
  } catch (const Error &e) {
    throw Error("checkpoint " + path.string() + ": " + e.what());
  }
  return out;
}

struct RawCheckpoint {
  CheckpointHeader header;
  std::vector<float> payload;
};

RawCheckpoint read_raw(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || in.eof())
    throw Error("checkpoint " + path.string() + ": truncated header");
  RawCheckpoint raw{parse_header(line, path), {}};

  std::size_t expected = 0;
  for (const auto &p : raw.header.parameters)
    expected += p.shape.size();
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < expected * 4)
    throw Error("checkpoint " + path.string() + ": truncated payload (" +
                std::to_string(bytes.size()) + " of " + std::to_string(expected * 4) + " bytes)");
  if (bytes.size() > expected * 4)
    throw Error("checkpoint " + path.string() + ": " +
                std::to_string(bytes.size() - expected * 4) + " trailing bytes");
  raw.payload.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t u;
    std::memcpy(&u, bytes.data() + 4 * i, 4);
    raw.payload[i] = std::bit_cast<float>(to_le(u));
  }
  return raw;
}

void fill(const RawCheckpoint &raw, models::Generator &model, const std::filesystem::path &path) {
  const auto params = model.parameters();
  const auto have = describe(params);
  const auto &want = raw.header.parameters;
  std::string diff;
  const std::size_t n = std::max(have.size(), want.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i < have.size() && i < want.size() && have[i] == want[i])
      continue;
    if (!diff.empty())
      diff += ", ";
    if (i >= want.size())
      diff += have[i].name + " (missing from file)";
    else if (i >= have.size())
      diff += want[i].name + " (not in model)";
    else if (have[i].name != want[i].name)
      diff += want[i].name + " vs " + have[i].name;
    else
      diff += want[i].name + " " + want[i].shape.str() + " vs " + have[i].shape.str();
  }
  if (!diff.empty())
    throw Error("checkpoint " + path.string() + ": topology mismatch: " + diff);

  std::size_t offset = 0;
  for (auto *p : params) {
    std::copy_n(raw.payload.begin() + static_cast<std::ptrdiff_t>(offset), p->value.size(),
                p->value.data());
    offset += p->value.size();
  }
}

} // namespace

void save_checkpoint(const std::filesystem::path &path, models::Generator &model,
                     const CheckpointMeta &meta) {
  const auto params = model.parameters();
  std::string data = header_line(model.config(), describe(params), meta);
  data.push_back('\n');
  for (const auto *p : params) {
    for (const float v : p->value.values()) {
      const std::uint32_t u = to_le(std::bit_cast<std::uint32_t>(v));
      char b[4];
      std::memcpy(b, &u, 4);
      data.append(b, 4);
    }
  }

  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot write checkpoint " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out)
      throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || in.eof())
    throw Error("checkpoint " + path.string() + ": truncated header");
  return parse_header(line, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path &path) {
  const RawCheckpoint raw = read_raw(path);
  try {
    raw.header.topology.validate();
  } catch (const Error &e) {
    throw Error("checkpoint " + path.string() + ": " + e.what());
  }
  LoadedCheckpoint out{models::Generator(raw.header.topology), raw.header.meta};
  fill(raw, out.model, path);
  return out;
}

CheckpointMeta load_checkpoint_into(const std::filesystem::path &path, models::Generator &model) {
  const RawCheckpoint raw = read_raw(path);
  fill(raw, model, path);
  return raw.header.meta;
}

} // namespace cxgan::train
