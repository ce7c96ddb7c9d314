// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Generator checkpoints.
 *
 * Layout: one line of UTF-8 JSON, '\n', then every parameter as raw
 * little-endian float32 in the order the header lists them. Header keys:
 * format, format_version, model ("generator"), topology (the generator
 * config), parameters ([{name, shape}]), iteration, seed, val_ssim,
 * val_psnr. Metrics that are not finite are written as strings ("nan",
 * "inf").
 */
#pragma once

#include "cxgan/models/generator.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace cxgan::train {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
  double val_ssim = std::numeric_limits<double>::quiet_NaN();
  double val_psnr = std::numeric_limits<double>::quiet_NaN();
};

struct ParameterInfo {
  std::string name;
  nn::Shape shape;
  bool operator==(const ParameterInfo &) const = default;
};

struct CheckpointHeader {
  int format_version = kCheckpointVersion;
  models::GeneratorConfig topology;
  std::vector<ParameterInfo> parameters;
  CheckpointMeta meta;
};

/// Written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path &path, models::Generator &model,
                     const CheckpointMeta &meta);

/// Parses only the header line.
CheckpointHeader read_checkpoint_header(const std::filesystem::path &path);

struct LoadedCheckpoint {
  models::Generator model;
  CheckpointMeta meta;
};

/// Builds a generator from the stored topology and fills its parameters.
LoadedCheckpoint load_checkpoint(const std::filesystem::path &path);

/// Fills an existing generator. Throws, naming every differing parameter,
/// if the stored parameters do not match the model's. The model is left
/// untouched on any error.
CheckpointMeta load_checkpoint_into(const std::filesystem::path &path,
                                    models::Generator &model);

} // namespace cxgan::train
