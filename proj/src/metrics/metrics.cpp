// SPDX-License-Identifier: Apache-2.0
#include "cxgan/metrics/metrics.hpp"
#include "cxgan/simd/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace cxgan::metrics {
namespace {

void require_same_shape(const Tensor &a, const Tensor &b, const char *what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape " + a.shape().str() +
                     " vs " + b.shape().str());
  if (a.empty())
    throw ShapeError(std::string(what) + ": empty image");
}

// Summed-area table with a zero first row and column.
class Integral {
public:
  Integral(std::size_t h, std::size_t w) : w_(w + 1), data_((h + 1) * (w + 1)) {}

  template <typename F> void build(std::size_t h, std::size_t w, F value) {
    for (std::size_t y = 0; y < h; ++y) {
      double row = 0.0;
      for (std::size_t x = 0; x < w; ++x) {
        row += value(y, x);
        data_[(y + 1) * w_ + x + 1] = data_[y * w_ + x + 1] + row;
      }
    }
  }

  double box(std::size_t y, std::size_t x, std::size_t k) const {
    return data_[(y + k) * w_ + x + k] - data_[y * w_ + x + k] -
           data_[(y + k) * w_ + x] + data_[y * w_ + x];
  }

private:
  std::size_t w_;
  std::vector<double> data_;
};

double ssim_index(double mx, double my, double vx, double vy, double cxy,
                  double c1, double c2) {
  return ((2 * mx * my + c1) * (2 * cxy + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

double ssim_plane_uniform(const float *a, const float *b, std::size_t h,
                          std::size_t w, double c1, double c2) {
  constexpr std::size_t k = 7;
  const double np = static_cast<double>(k * k);
  const double cov_norm = np / (np - 1.0);
  Integral sa(h, w), sb(h, w), saa(h, w), sbb(h, w), sab(h, w);
  auto at = [w](const float *p, std::size_t y, std::size_t x) {
    return static_cast<double>(p[y * w + x]);
  };
  sa.build(h, w, [&](auto y, auto x) { return at(a, y, x); });
  sb.build(h, w, [&](auto y, auto x) { return at(b, y, x); });
  saa.build(h, w, [&](auto y, auto x) { return at(a, y, x) * at(a, y, x); });
  sbb.build(h, w, [&](auto y, auto x) { return at(b, y, x) * at(b, y, x); });
  sab.build(h, w, [&](auto y, auto x) { return at(a, y, x) * at(b, y, x); });

  double total = 0.0;
  for (std::size_t y = 0; y + k <= h; ++y)
    for (std::size_t x = 0; x + k <= w; ++x) {
      const double mx = sa.box(y, x, k) / np;
      const double my = sb.box(y, x, k) / np;
      const double vx = cov_norm * (saa.box(y, x, k) / np - mx * mx);
      const double vy = cov_norm * (sbb.box(y, x, k) / np - my * my);
      const double cxy = cov_norm * (sab.box(y, x, k) / np - mx * my);
      total += ssim_index(mx, my, vx, vy, cxy, c1, c2);
    }
  return total / static_cast<double>((h - k + 1) * (w - k + 1));
}

std::vector<double> gaussian_window(std::size_t k, double sigma) {
  std::vector<double> g(k * k);
  const double c = static_cast<double>(k - 1) / 2.0;
  double s = 0.0;
  for (std::size_t y = 0; y < k; ++y)
    for (std::size_t x = 0; x < k; ++x) {
      const double dy = static_cast<double>(y) - c;
      const double dx = static_cast<double>(x) - c;
      g[y * k + x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      s += g[y * k + x];
    }
  for (double &v : g)
    v /= s;
  return g;
}

double ssim_plane_gaussian(const float *a, const float *b, std::size_t h,
                           std::size_t w, double c1, double c2) {
  constexpr std::size_t k = 11;
  static const std::vector<double> g = gaussian_window(k, 1.5);
  double total = 0.0;
  for (std::size_t y = 0; y + k <= h; ++y)
    for (std::size_t x = 0; x + k <= w; ++x) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (std::size_t dy = 0; dy < k; ++dy)
        for (std::size_t dx = 0; dx < k; ++dx) {
          const double wt = g[dy * k + dx];
          const double va = a[(y + dy) * w + x + dx];
          const double vb = b[(y + dy) * w + x + dx];
          mx += wt * va;
          my += wt * vb;
          xx += wt * va * va;
          yy += wt * vb * vb;
          xy += wt * va * vb;
        }
      total += ssim_index(mx, my, xx - mx * mx, yy - my * my, xy - mx * my,
                          c1, c2);
    }
  return total / static_cast<double>((h - k + 1) * (w - k + 1));
}

} // namespace

double mse(const Tensor &a, const Tensor &b) {
  require_same_shape(a, b, "mse");
  const double sq =
      simd::active_kernels().squared_distance(a.data(), b.data(), a.size());
  return sq / static_cast<double>(a.size());
}

double nrmse(const Tensor &reference, const Tensor &test) {
  require_same_shape(reference, test, "nrmse");
  const double ref_energy = simd::active_kernels().dot(
      reference.data(), reference.data(), reference.size());
  if (ref_energy == 0.0)
    throw Error("nrmse: reference image is identically zero");
  const double ref_rms = std::sqrt(ref_energy / static_cast<double>(reference.size()));
  return std::sqrt(mse(reference, test)) / ref_rms;
}

double psnr_from_mse(double mse_value, double data_range) {
  if (mse_value == 0.0)
    return kPsnrInfinite;
  return 10.0 * std::log10(data_range * data_range / mse_value);
}

double psnr(const Tensor &a, const Tensor &b, double data_range) {
  return psnr_from_mse(mse(a, b), data_range);
}

double ssim(const Tensor &a, const Tensor &b, const SsimOptions &options) {
  require_same_shape(a, b, "ssim");
  const auto &s = a.shape();
  const std::size_t k = options.window == SsimWindow::Uniform7 ? 7 : 11;
  if (s.h < k || s.w < k)
    throw ShapeError("ssim: image " + s.str() + " smaller than the " +
                     std::to_string(k) + "x" + std::to_string(k) + " window");
  const double c1 = (0.01 * options.data_range) * (0.01 * options.data_range);
  const double c2 = (0.03 * options.data_range) * (0.03 * options.data_range);
  double total = 0.0;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      total += options.window == SsimWindow::Uniform7
                   ? ssim_plane_uniform(a.plane(n, c), b.plane(n, c), s.h, s.w, c1, c2)
                   : ssim_plane_gaussian(a.plane(n, c), b.plane(n, c), s.h, s.w, c1, c2);
  return total / static_cast<double>(s.n * s.c);
}

MetricReport compare(const Tensor &a, const Tensor &b, std::string name_a,
                     std::string name_b, const SsimOptions &options) {
  MetricReport r;
  r.name_a = std::move(name_a);
  r.name_b = std::move(name_b);
  r.mse = mse(a, b);
  r.nrmse = nrmse(a, b);
  r.ssim = ssim(a, b, options);
  r.psnr = psnr_from_mse(r.mse, options.data_range);
  return r;
}

std::string format_metric(double value) {
  if (std::isinf(value))
    return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

} // namespace cxgan::metrics
