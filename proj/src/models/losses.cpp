// SPDX-License-Identifier: Apache-2.0
#include "cxgan/models/losses.hpp"
#include "cxgan/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cxgan::models {

namespace {

constexpr std::size_t kWindow = 7;

void require_finite(std::span<const double> v, const char *what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw Error(std::string(what) + ": non-finite logit");
}

// p and d BCE / d p with the clamp's zero slope.
struct Bce {
  double value;
  double dp;
};

Bce bce_grad(double p, double t) {
  const double q = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
  const double value = -(t * std::log(q) + (1.0 - t) * std::log(1.0 - q));
  const double dp = (q != p) ? 0.0 : -t / q + (1.0 - t) / (1.0 - q);
  return {value, dp};
}

// Summed-area table with a zero first row and column.
struct Integral {
  std::size_t w1;
  std::vector<double> s;
  template <typename F> Integral(std::size_t h, std::size_t w, F f) : w1(w + 1), s((h + 1) * (w + 1)) {
    for (std::size_t y = 0; y < h; ++y) {
      double row = 0;
      for (std::size_t x = 0; x < w; ++x) {
        row += f(y, x);
        s[(y + 1) * w1 + x + 1] = s[y * w1 + x + 1] + row;
      }
    }
  }
  double box(std::size_t y, std::size_t x, std::size_t k) const {
    return s[(y + k) * w1 + x + k] - s[y * w1 + x + k] - s[(y + k) * w1 + x] + s[y * w1 + x];
  }
};

} // namespace

void LossWeights::validate() const {
  if (!(alpha >= 0 && beta >= 0 && gamma > 0))
    throw Error("loss weights need alpha >= 0, beta >= 0, gamma > 0");
}

double bce(double p, double target) { return bce_grad(p, target).value; }

double discriminator_loss(double d_fake, double d_real, int y) {
  const double f[] = {d_fake}, r[] = {d_real};
  return discriminator_loss(f, r, y).value;
}

AdversarialLoss discriminator_loss(std::span<const double> d_fake,
                                   std::span<const double> d_real, int y) {
  if (d_fake.size() != d_real.size() || d_fake.empty())
    throw ShapeError("discriminator_loss: logit batches must be equal and non-empty");
  if (y != 0 && y != 1)
    throw Error("discriminator_loss: label must be 0 or 1");
  require_finite(d_fake, "discriminator_loss");
  require_finite(d_real, "discriminator_loss");

  const double n = static_cast<double>(d_fake.size());
  AdversarialLoss out;
  out.grad_fake.resize(d_fake.size());
  out.grad_real.resize(d_fake.size());
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    const double diff = d_fake[i] - d_real[i];
    const double s1 = nn::sigmoid(diff), s2 = nn::sigmoid(-diff);
    const Bce a = bce_grad(s1, y), b = bce_grad(s2, 1 - y);
    out.value += (a.value + b.value) / n;
    // d s(x) / dx = s(1 - s)
    const double ddiff = a.dp * s1 * (1 - s1) - b.dp * s2 * (1 - s2);
    out.grad_fake[i] = ddiff / n;
    out.grad_real[i] = -ddiff / n;
  }
  return out;
}

template <typename T>
SsimLoss<T> ssim_with_grad(const nn::BasicTensor<T> &a, const nn::BasicTensor<T> &b,
                           double data_range) {
  const nn::Shape s = a.shape();
  if (s != b.shape())
    throw ShapeError("ssim: shapes " + s.str() + " and " + b.shape().str() + " differ");
  if (s.h < kWindow || s.w < kWindow)
    throw ShapeError("ssim: image " + s.str() + " smaller than the 7x7 window");

  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const double N = kWindow * kWindow;
  const std::size_t vh = s.h - kWindow + 1, vw = s.w - kWindow + 1;
  const double planes = static_cast<double>(s.n * s.c);
  const double scale = 1.0 / (static_cast<double>(vh * vw) * planes);

  SsimLoss<T> out;
  out.grad = nn::BasicTensor<T>(s);
  // Per window: dS/da_i = k0 + kb * b_i + ka * a_i.
  std::vector<double> k0(vh * vw), kb(vh * vw), ka(vh * vw);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T *pa = a.plane(n, c), *pb = b.plane(n, c);
      auto A = [&](std::size_t y, std::size_t x) { return double(pa[y * s.w + x]); };
      auto B = [&](std::size_t y, std::size_t x) { return double(pb[y * s.w + x]); };
      const Integral ia(s.h, s.w, A), ib(s.h, s.w, B);
      const Integral iaa(s.h, s.w, [&](auto y, auto x) { return A(y, x) * A(y, x); });
      const Integral ibb(s.h, s.w, [&](auto y, auto x) { return B(y, x) * B(y, x); });
      const Integral iab(s.h, s.w, [&](auto y, auto x) { return A(y, x) * B(y, x); });

      for (std::size_t y = 0; y < vh; ++y)
        for (std::size_t x = 0; x < vw; ++x) {
          const double sa = ia.box(y, x, kWindow), sb = ib.box(y, x, kWindow);
          const double ma = sa / N, mb = sb / N;
          const double va = (iaa.box(y, x, kWindow) - sa * ma) / (N - 1);
          const double vb = (ibb.box(y, x, kWindow) - sb * mb) / (N - 1);
          const double cov = (iab.box(y, x, kWindow) - sa * mb) / (N - 1);
          const double num_l = 2 * ma * mb + c1, num_c = 2 * cov + c2;
          const double den_l = ma * ma + mb * mb + c1, den_c = va + vb + c2;
          const double S = (num_l * num_c) / (den_l * den_c);
          out.ssim += S * scale;

          const std::size_t i = y * vw + x;
          kb[i] = S * 2 / ((N - 1) * num_c);
          ka[i] = -S * 2 / ((N - 1) * den_c);
          k0[i] = S * (2 * mb / (N * num_l) - 2 * ma / (N * den_l)) - kb[i] * mb - ka[i] * ma;
        }

      // each pixel sums the coefficients of every window covering it
      const Integral s0(vh, vw, [&](auto y, auto x) { return k0[y * vw + x]; });
      const Integral sb_(vh, vw, [&](auto y, auto x) { return kb[y * vw + x]; });
      const Integral sa_(vh, vw, [&](auto y, auto x) { return ka[y * vw + x]; });
      auto covered = [&](const Integral &t, std::size_t y, std::size_t x) {
        const std::size_t y0 = y >= kWindow - 1 ? y - (kWindow - 1) : 0;
        const std::size_t x0 = x >= kWindow - 1 ? x - (kWindow - 1) : 0;
        const std::size_t y1 = std::min(y, vh - 1) + 1, x1 = std::min(x, vw - 1) + 1;
        return t.s[y1 * t.w1 + x1] - t.s[y0 * t.w1 + x1] - t.s[y1 * t.w1 + x0] +
               t.s[y0 * t.w1 + x0];
      };
      T *g = out.grad.plane(n, c);
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x)
          g[y * s.w + x] = static_cast<T>(
              scale * (covered(s0, y, x) + covered(sb_, y, x) * B(y, x) +
                       covered(sa_, y, x) * A(y, x)));
    }
  return out;
}

template <typename T>
GeneratorLoss<T> generator_loss(const nn::BasicTensor<T> &generated,
                                const nn::BasicTensor<T> &target,
                                std::span<const double> d_fake,
                                std::span<const double> d_real, const LossWeights &w) {
  w.validate();
  if (generated.shape() != target.shape())
    throw ShapeError("generator_loss: shapes " + generated.shape().str() + " and " +
                     target.shape().str() + " differ");
  if (d_fake.size() != d_real.size() || d_fake.size() != generated.shape().n)
    throw ShapeError("generator_loss: one logit pair per batch item required");
  if (!generated.all_finite() || !target.all_finite())
    throw Error("generator_loss: non-finite image values");
  require_finite(d_fake, "generator_loss");
  require_finite(d_real, "generator_loss");

  GeneratorLoss<T> out;
  const double count = static_cast<double>(generated.size());
  double sq = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const double d = double(generated[i]) - double(target[i]);
    sq += d * d;
  }
  const SsimLoss<T> ss = ssim_with_grad(generated, target);
  out.grad_generated = nn::BasicTensor<T>(generated.shape());
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const double d = double(generated[i]) - double(target[i]);
    out.grad_generated[i] =
        static_cast<T>(w.alpha * 2.0 * d / count - w.beta * double(ss.grad[i]));
  }

  const double n = static_cast<double>(d_fake.size());
  double bce_mean = 0;
  out.grad_fake.resize(d_fake.size());
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    const double p = nn::sigmoid(d_fake[i] - d_real[i]);
    const Bce b = bce_grad(p, 1.0);
    bce_mean += b.value / n;
    out.grad_fake[i] = w.gamma * b.dp * p * (1 - p) / n;
  }

  out.parts.mse = w.alpha * sq / count;
  out.parts.ssim = w.beta * (1.0 - ss.ssim);
  out.parts.bce = w.gamma * bce_mean;
  out.parts.total = out.parts.mse + out.parts.ssim + out.parts.bce;
  return out;
}

#define CXGAN_INSTANTIATE_LOSSES(T)                                                        \
  template SsimLoss<T> ssim_with_grad(const nn::BasicTensor<T> &, const nn::BasicTensor<T> &, \
                                      double);                                             \
  template GeneratorLoss<T> generator_loss(const nn::BasicTensor<T> &,                     \
                                           const nn::BasicTensor<T> &,                     \
                                           std::span<const double>,                        \
                                           std::span<const double>, const LossWeights &);

CXGAN_INSTANTIATE_LOSSES(float)
CXGAN_INSTANTIATE_LOSSES(double)
#undef CXGAN_INSTANTIATE_LOSSES

} // namespace cxgan::models
