// SPDX-License-Identifier: Apache-2.0
/**
 * @file   trainer.hpp
 * @brief  Alternating GAN training with validation-scored best model.
 *
 * Each iteration draws one batch and runs a discriminator step (label 0)
 * followed by a generator step (label 1) on it. Every
 * `validation_every` iterations, and at the last one, the generator is
 * scored on the validation pairs: outputs are clamped to [0, 1] and mean
 * SSIM / PSNR are taken with the metrics module. The best model has the
 * highest SSIM, ties going to higher PSNR.
 *
 * Files under `output_dir` (when set):
 *   train_log.csv                 one row per validation
 *   checkpoints/iter_<8 digits>.ckpt every `checkpoint_every` iterations
 *   best.ckpt                     on every best-model improvement
 *   final.ckpt                    after the last iteration
 */
#pragma once

#include "cxgan/data/dataset.hpp"
#include "cxgan/models/discriminator.hpp"
#include "cxgan/models/generator.hpp"
#include "cxgan/models/losses.hpp"
#include "cxgan/train/adam.hpp"
#include "cxgan/train/checkpoint.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cxgan::train {

using nn::Tensor;

struct ImagePair {
  Tensor lq; ///< (1, c, h, w)
  Tensor hq;
};

/// Random-access source of training or validation pairs.
class PairSet {
public:
  virtual ~PairSet() = default;
  virtual std::size_t size() const = 0;
  virtual ImagePair get(std::size_t i) const = 0;
};

class InMemoryPairs final : public PairSet {
public:
  explicit InMemoryPairs(std::vector<ImagePair> pairs) : pairs_(std::move(pairs)) {}
  std::size_t size() const override { return pairs_.size(); }
  ImagePair get(std::size_t i) const override { return pairs_.at(i); }

private:
  std::vector<ImagePair> pairs_;
};

struct TrainConfig {
  std::size_t iterations = 1000;
  std::size_t checkpoint_every = 10000;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  models::LossWeights weights;
  std::size_t validation_every = 100;
  AdamOptions adam; ///< shared by both models
  models::GeneratorConfig generator;
  /// input_size is taken from the data.
  models::DiscriminatorConfig discriminator;
  std::filesystem::path output_dir; ///< empty: nothing is written

  void validate() const;
};

/// Stacks (1, c, h, w) tensors into one (n, c, h, w) batch.
Tensor stack(std::span<const Tensor> items);

/// Label-0 discriminator update. Throws if the generator changed.
double train_discriminator_step(const ImagePair &batch, models::Generator &g,
                                models::Discriminator &d, AdamState<float> &d_state);

/// Label-1 generator update through the discriminator. Throws if the
/// discriminator changed.
models::GeneratorLossParts train_generator_step(const ImagePair &batch, models::Generator &g,
                                                models::Discriminator &d,
                                                AdamState<float> &g_state,
                                                const models::LossWeights &weights);

struct ValidationScore {
  double ssim = 0.0;
  double psnr = 0.0;
};

/// Mean SSIM and PSNR of clamped G(lq) against hq.
ValidationScore validate_generator(models::Generator &g, const PairSet &pairs);

/// True when `a` beats `b` (SSIM first, then PSNR).
bool better(const ValidationScore &a, const ValidationScore &b);

struct LogRow {
  std::size_t iteration = 0;
  double d_loss = 0.0;
  models::GeneratorLossParts g;
  ValidationScore val;
};

inline constexpr const char *kLogHeader =
    "iteration,d_loss,g_total,g_mse_part,g_ssim_part,g_bce_part,val_ssim,val_psnr";

/// One CSV line without the newline, numbers as %.9g.
std::string format_log_row(const LogRow &row);

struct TrainResult {
  models::Generator final_model;
  CheckpointMeta final_meta;
  models::Generator best_model; ///< the initial model if never validated
  CheckpointMeta best_meta;
  std::vector<LogRow> log;
  std::vector<double> d_losses; ///< discriminator loss at every iteration
  std::vector<double> g_totals; ///< generator loss at every iteration
};

using ProgressFn = std::function<void(const LogRow &)>;

TrainResult train_loop(const PairSet &train, const PairSet &validation,
                       const TrainConfig &config, const ProgressFn &progress = {});

/// Pairs of one split of a dataset manifest, loaded on demand.
class ManifestPairs final : public PairSet {
public:
  ManifestPairs(const std::filesystem::path &manifest, data::Split split);
  std::size_t size() const override { return entries_.size(); }
  ImagePair get(std::size_t i) const override;

private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> entries_;
};

/// Trains on the manifest's train split, validating on its validation
/// split. Throws before training if either is empty.
TrainResult train_loop(const std::filesystem::path &manifest, const TrainConfig &config,
                       const ProgressFn &progress = {});

} // namespace cxgan::train
