// SPDX-License-Identifier: Apache-2.0
#include "cxgan/train/trainer.hpp"

#include "cxgan/data/image_io.hpp"
#include "cxgan/metrics/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <random>

namespace cxgan::train {

using models::Discriminator;
using models::Generator;

void TrainConfig::validate() const {
  if (checkpoint_every == 0 || batch_size == 0 || validation_every == 0)
    throw Error("train: checkpoint cadence, batch size and validation cadence must be positive");
  weights.validate();
  adam.validate();
  generator.validate();
}

Tensor stack(std::span<const Tensor> items) {
  if (items.empty())
    throw ShapeError("stack: no tensors");
  const nn::Shape one = items.front().shape();
  if (one.n != 1)
    throw ShapeError("stack: expected batch-1 tensors, got " + one.str());
  Tensor out({items.size(), one.c, one.h, one.w});
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].shape() != one)
      throw ShapeError("stack: " + items[i].shape().str() + " differs from " + one.str());
    std::copy_n(items[i].data(), one.size(), out.data() + i * one.size());
  }
  return out;
}

namespace {

std::vector<double> to_doubles(const Tensor &t) { return {t.values().begin(), t.values().end()}; }

Tensor logit_grad(const std::vector<double> &g) {
  Tensor out({g.size(), 1, 1, 1});
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = static_cast<float>(g[i]);
  return out;
}

void check_batch(const ImagePair &batch) {
  if (batch.lq.shape() != batch.hq.shape())
    throw ShapeError("train: lq " + batch.lq.shape().str() + " and hq " +
                     batch.hq.shape().str() + " differ");
}

} // namespace

double train_discriminator_step(const ImagePair &batch, Generator &g, Discriminator &d,
                                AdamState<float> &d_state) {
  check_batch(batch);
  const std::uint64_t frozen = nn::checksum(g.parameters());
  const std::size_t n = batch.lq.shape().n;

  const Tensor gx = g.forward(batch.lq);
  // Fake and real share one pass: D has no cross-sample state.
  Tensor both({2 * n, gx.shape().c, gx.shape().h, gx.shape().w});
  std::copy_n(gx.data(), gx.size(), both.data());
  std::copy_n(batch.hq.data(), batch.hq.size(), both.data() + gx.size());

  d.zero_grad();
  const std::vector<double> logits = to_doubles(d.forward(both));
  const std::span<const double> all(logits);
  const auto adv = models::discriminator_loss(all.first(n), all.subspan(n), 0);
  std::vector<double> grad(adv.grad_fake);
  grad.insert(grad.end(), adv.grad_real.begin(), adv.grad_real.end());
  d.backward(logit_grad(grad));
  adam_step(d.parameters(), d_state);

  if (nn::checksum(g.parameters()) != frozen)
    throw Error("discriminator step modified the generator");
  return adv.value;
}

models::GeneratorLossParts train_generator_step(const ImagePair &batch, Generator &g,
                                                Discriminator &d, AdamState<float> &g_state,
                                                const models::LossWeights &weights) {
  check_batch(batch);
  const std::uint64_t frozen = nn::checksum(d.parameters());

  const std::vector<double> d_real = to_doubles(d.forward(batch.hq));
  g.zero_grad();
  const Tensor gx = g.forward(batch.lq);
  const std::vector<double> d_fake = to_doubles(d.forward(gx));
  auto loss = models::generator_loss(gx, batch.hq, d_fake, d_real, weights);

  Tensor grad = d.backward(logit_grad(loss.grad_fake));
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] += loss.grad_generated[i];
  g.backward(grad);
  adam_step(g.parameters(), g_state);
  d.zero_grad();

  if (nn::checksum(d.parameters()) != frozen)
    throw Error("generator step modified the discriminator");
  return loss.parts;
}

ValidationScore validate_generator(Generator &g, const PairSet &pairs) {
  if (pairs.size() == 0)
    throw Error("validate: no pairs");
  double ssim = 0.0, psnr = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const ImagePair p = pairs.get(i);
    Tensor out = g.forward(p.lq);
    for (auto &v : out.values())
      v = std::clamp(v, 0.0f, 1.0f);
    ssim += metrics::ssim(out, p.hq);
    psnr += metrics::psnr(out, p.hq);
  }
  const double n = static_cast<double>(pairs.size());
  return {ssim / n, psnr / n};
}

bool better(const ValidationScore &a, const ValidationScore &b) {
  if (a.ssim != b.ssim)
    return a.ssim > b.ssim;
  return a.psnr > b.psnr;
}

std::string format_log_row(const LogRow &r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", r.iteration, r.d_loss,
                r.g.total, r.g.mse, r.g.ssim, r.g.bce, r.val.ssim, r.val.psnr);
  return buf;
}

TrainResult train_loop(const PairSet &train, const PairSet &validation, const TrainConfig &config,
                       const ProgressFn &progress) {
  config.validate();
  if (train.size() == 0)
    throw Error("train: the train split is empty");
  if (validation.size() == 0)
    throw Error("train: the validation split is empty");

  const nn::Shape shape = train.get(0).hq.shape();
  if (shape.h != shape.w)
    throw ShapeError("train: images must be square, got " + shape.str());
  if (shape.h % config.generator.multiple() != 0)
    throw ShapeError("train: image size " + std::to_string(shape.h) +
                     " is not divisible by " + std::to_string(config.generator.multiple()));
  models::GeneratorConfig gcfg = config.generator;
  gcfg.channels = shape.c;
  models::DiscriminatorConfig dcfg = config.discriminator;
  dcfg.channels = shape.c;
  dcfg.input_size = shape.h;

  nn::Rng init_rng(config.seed);
  Generator g(gcfg);
  g.init(init_rng);
  Discriminator d(dcfg);
  d.init(init_rng);
  nn::Rng batch_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);

  AdamState<float> d_state{config.adam, 0, {}, {}};
  AdamState<float> g_state{config.adam, 0, {}, {}};

  const bool write = !config.output_dir.empty();
  std::ofstream log_file;
  if (write) {
    std::filesystem::create_directories(config.output_dir);
    log_file.open(config.output_dir / "train_log.csv", std::ios::trunc);
    if (!log_file)
      throw Error("cannot write " + (config.output_dir / "train_log.csv").string());
    log_file << kLogHeader << '\n';
  }

  TrainResult result{g, {0, config.seed}, g, {0, config.seed}, {}, {}, {}};
  bool have_best = false;
  ValidationScore best{};
  ValidationScore latest{std::numeric_limits<double>::quiet_NaN(),
                         std::numeric_limits<double>::quiet_NaN()};

  std::vector<Tensor> lq(config.batch_size), hq(config.batch_size);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      ImagePair p = train.get(pick(batch_rng));
      lq[b] = std::move(p.lq);
      hq[b] = std::move(p.hq);
    }
    const ImagePair batch{stack(lq), stack(hq)};
    const double d_loss = train_discriminator_step(batch, g, d, d_state);
    const auto parts = train_generator_step(batch, g, d, g_state, config.weights);
    result.d_losses.push_back(d_loss);
    result.g_totals.push_back(parts.total);

    if (it % config.validation_every == 0 || it == config.iterations) {
      latest = validate_generator(g, validation);
      const LogRow row{it, d_loss, parts, latest};
      result.log.push_back(row);
      if (write) {
        log_file << format_log_row(row) << '\n';
        log_file.flush();
      }
      if (progress)
        progress(row);
      if (!have_best || better(latest, best)) {
        have_best = true;
        best = latest;
        result.best_model = g;
        result.best_meta = {it, config.seed, latest.ssim, latest.psnr};
        if (write)
          save_checkpoint(config.output_dir / "best.ckpt", g, result.best_meta);
      }
    }
    if (write && it % config.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "iter_%08zu.ckpt", it);
      save_checkpoint(config.output_dir / "checkpoints" / name, g,
                      {it, config.seed, latest.ssim, latest.psnr});
    }
  }

  result.final_model = g;
  result.final_meta = {config.iterations, config.seed, latest.ssim, latest.psnr};
  if (write)
    save_checkpoint(config.output_dir / "final.ckpt", g, result.final_meta);
  return result;
}

ManifestPairs::ManifestPairs(const std::filesystem::path &manifest, data::Split split) {
  const data::DatasetManifest m = data::read_manifest(manifest);
  for (const auto &e : m.entries)
    if (e.split == split)
      entries_.emplace_back(data::resolve(manifest, e.lq_path), data::resolve(manifest, e.hq_path));
}

ImagePair ManifestPairs::get(std::size_t i) const {
  const auto &[lq, hq] = entries_.at(i);
  return {data::load_image(lq), data::load_image(hq)};
}

TrainResult train_loop(const std::filesystem::path &manifest, const TrainConfig &config,
                       const ProgressFn &progress) {
  const ManifestPairs train(manifest, data::Split::Train);
  const ManifestPairs validation(manifest, data::Split::Validation);
  return train_loop(train, validation, config, progress);
}

} // namespace cxgan::train
