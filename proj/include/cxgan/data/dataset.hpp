// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/data/geometry.hpp"
#include "cxgan/nn/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cxgan::data {

enum class Target { Lq, Hq, Both };

struct LogEntry {
  Target target = Target::Both;
  Transform transform;
  bool operator==(const LogEntry &) const = default;
};

struct PairedSample {
  nn::Tensor lq;
  nn::Tensor hq;
  std::string id;
  std::vector<LogEntry> transform_log;
  double correlation = 1.0; ///< NCC of the aligned pair
};

struct AlignOptions {
  std::size_t patch_size = 256;
  double rotation_range_deg = 5.0;
  double rotation_step_deg = 0.5;
  double min_correlation = 0.2;
};

/// Rotates and crops the LQ field onto the HQ frame, then center-crops both
/// to patch_size. Throws "unalignable pair" when the result correlates
/// below min_correlation.
PairedSample align_pair(const nn::Tensor &lq_raw, const nn::Tensor &hq_raw,
                        const std::string &id, const AlignOptions &options = {});

/// The sample itself followed by `extra` copies, each with one random
/// flip / quarter-turn / translation sequence applied to lq and hq alike.
std::vector<PairedSample> augment_pair(const PairedSample &sample, std::uint64_t seed,
                                       int extra = 3);

enum class Split { Train, Test, Validation };
std::string to_string(Split s);
Split parse_split(const std::string &s);

struct ManifestEntry {
  std::string id;
  std::string lq_path;
  std::string hq_path;
  Split split = Split::Train;
  bool operator==(const ManifestEntry &) const = default;
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t seed = 0;
  std::array<double, 3> fractions{0.80, 0.19, 0.01}; ///< train, test, validation
  std::vector<ManifestEntry> entries;

  std::size_t count(Split s) const;
  bool operator==(const DatasetManifest &) const = default;
};

struct SplitCounts {
  std::size_t train, test, validation;
};
/// floor(f * n) for test and validation, the remainder to train.
SplitCounts split_counts(std::size_t n, const std::array<double, 3> &fractions);

/// Seeded shuffle, then train / test / validation in contiguous runs.
/// `split` fields of the input are ignored.
DatasetManifest split_dataset(std::vector<ManifestEntry> entries,
                              const std::array<double, 3> &fractions, std::uint64_t seed);

void write_manifest(const std::filesystem::path &path, const DatasetManifest &m);
DatasetManifest read_manifest(const std::filesystem::path &path);

/// Entry path resolved against the manifest's directory.
std::filesystem::path resolve(const std::filesystem::path &manifest_path,
                              const std::string &entry_path);

enum class SplitOrder { SplitFirst, AugmentFirst };

struct PrepareOptions {
  std::filesystem::path lq_dir;
  std::filesystem::path hq_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  int augment_extra = 3;
  std::array<double, 3> fractions{0.80, 0.19, 0.01};
  SplitOrder order = SplitOrder::SplitFirst;
  AlignOptions align;
};

struct AlignmentRecord {
  std::string id;
  bool aligned = false;
  double correlation = 0.0;
  std::string message;
  std::vector<LogEntry> transforms;
};

struct PrepareResult {
  DatasetManifest manifest;
  std::vector<AlignmentRecord> report;
};

/// Pairs files by stem across lq_dir and hq_dir, aligns, augments, splits
/// and writes <out>/lq, <out>/hq, manifest.json and alignment.json.
PrepareResult prepare_dataset(const PrepareOptions &options);

} // namespace cxgan::data
