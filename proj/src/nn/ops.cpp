// SPDX-License-Identifier: Apache-2.0
#include "cxgan/nn/ops.hpp"
#include "cxgan/simd/kernels.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace cxgan::nn {
namespace {

// Row kernels. float goes through the runtime-selected SIMD table; double
// uses plain loops (it only backs gradient checks).
template <typename T> struct Row;

template <> struct Row<float> {
  const simd::KernelTable &k = simd::active_kernels();
  void axpy(float a, const float *x, float *y, std::size_t n) const {
    k.axpy(a, x, y, n);
  }
  double dot(const float *x, const float *y, std::size_t n) const {
    return k.dot(x, y, n);
  }
  double sum(const float *x, std::size_t n) const { return k.sum(x, n); }
  void lrelu(const float *x, float *y, std::size_t n, float a) const {
    k.lrelu(x, y, n, a);
  }
  void lrelu_backward(const float *x, const float *gy, float *gx,
                      std::size_t n, float a) const {
    k.lrelu_backward(x, gy, gx, n, a);
  }
};

template <> struct Row<double> {
  void axpy(double a, const double *x, double *y, std::size_t n) const {
    for (std::size_t i = 0; i < n; ++i)
      y[i] += a * x[i];
  }
  double dot(const double *x, const double *y, std::size_t n) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * y[i];
    return acc;
  }
  double sum(const double *x, std::size_t n) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i];
    return acc;
  }
  void lrelu(const double *x, double *y, std::size_t n, double a) const {
    for (std::size_t i = 0; i < n; ++i)
      y[i] = x[i] > 0.0 ? x[i] : a * x[i];
  }
  void lrelu_backward(const double *x, const double *gy, double *gx,
                      std::size_t n, double a) const {
    for (std::size_t i = 0; i < n; ++i)
      gx[i] = gy[i] * (x[i] > 0.0 ? 1.0 : a);
  }
};

template <typename T>
void require_finite(const BasicTensor<T> &t, const char *op) {
  if (!t.all_finite())
    throw Error(std::string(op) + ": input contains NaN or Inf");
}

struct ConvGeometry {
  std::size_t pad_h, pad_w, stride, out_h, out_w;
};

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T> &input,
                           const BasicTensor<T> &weight,
                           const BasicTensor<T> &bias, const ConvSpec &spec) {
  const Shape &is = input.shape();
  const Shape &ws = weight.shape();
  if (spec.stride < 1)
    throw Error("conv2d: stride must be positive");
  if (is.c != ws.c)
    throw ShapeError("conv2d: input " + is.str() + " has " +
                     std::to_string(is.c) + " channels but weight " +
                     ws.str() + " expects " + std::to_string(ws.c));
  if (bias.size() != ws.n)
    throw ShapeError("conv2d: bias " + bias.shape().str() +
                     " does not match weight " + ws.str());
  if (spec.padding && *spec.padding < 0)
    throw Error("conv2d: negative padding");
  const std::size_t ph =
      spec.padding ? static_cast<std::size_t>(*spec.padding) : (ws.h - 1) / 2;
  const std::size_t pw =
      spec.padding ? static_cast<std::size_t>(*spec.padding) : (ws.w - 1) / 2;
  if (is.h + 2 * ph < ws.h || is.w + 2 * pw < ws.w)
    throw ShapeError("conv2d: kernel " + ws.str() +
                     " does not fit padded input " + is.str());
  const auto s = static_cast<std::size_t>(spec.stride);
  return {ph, pw, s, (is.h + 2 * ph - ws.h) / s + 1,
          (is.w + 2 * pw - ws.w) / s + 1};
}

// Output columns ox whose input column ox*s + kx - pad lies in [0, width).
struct ColumnRange {
  std::size_t begin, end;
};

ColumnRange valid_columns(std::size_t kx, const ConvGeometry &g,
                          std::size_t in_w) {
  // ox*s + kx >= pad  and  ox*s + kx - pad <= in_w - 1
  std::size_t begin = 0;
  if (g.pad_w > kx)
    begin = (g.pad_w - kx + g.stride - 1) / g.stride;
  if (in_w + g.pad_w < kx + 1)
    return {0, 0};
  std::size_t end = (in_w - 1 + g.pad_w - kx) / g.stride + 1;
  end = std::min(end, g.out_w);
  if (begin >= end)
    return {0, 0};
  return {begin, end};
}

bool input_row(std::size_t oy, std::size_t ky, const ConvGeometry &g,
               std::size_t in_h, std::size_t &iy) {
  const std::size_t pos = oy * g.stride + ky;
  if (pos < g.pad_h || pos - g.pad_h >= in_h)
    return false;
  iy = pos - g.pad_h;
  return true;
}

} // namespace

double sigmoid(double x) {
  // exp argument stays within [-700, 0]
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-std::min(x, 700.0)));
  const double e = std::exp(std::max(x, -700.0));
  return e / (1.0 + e);
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T> &input, const BasicTensor<T> &weight,
                      const BasicTensor<T> &bias, ConvSpec spec) {
  const ConvGeometry g = conv_geometry(input, weight, bias, spec);
  require_finite(input, "conv2d");
  const Shape &is = input.shape();
  const Shape &ws = weight.shape();
  BasicTensor<T> out(Shape{is.n, ws.n, g.out_h, g.out_w});
  const Row<T> row;
  std::vector<T> gather(g.out_w);

  for (std::size_t n = 0; n < is.n; ++n) {
    for (std::size_t co = 0; co < ws.n; ++co) {
      T *out_plane = out.plane(n, co);
      std::fill(out_plane, out_plane + g.out_h * g.out_w, bias[co]);
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        T *out_row = out_plane + oy * g.out_w;
        for (std::size_t ci = 0; ci < is.c; ++ci) {
          const T *in_plane = input.plane(n, ci);
          for (std::size_t ky = 0; ky < ws.h; ++ky) {
            std::size_t iy;
            if (!input_row(oy, ky, g, is.h, iy))
              continue;
            const T *in_row = in_plane + iy * is.w;
            for (std::size_t kx = 0; kx < ws.w; ++kx) {
              const auto [b, e] = valid_columns(kx, g, is.w);
              if (b == e)
                continue;
              const T wv = weight(co, ci, ky, kx);
              const std::size_t first = b * g.stride + kx - g.pad_w;
              if (g.stride == 1) {
                row.axpy(wv, in_row + first, out_row + b, e - b);
              } else {
                for (std::size_t i = 0; i < e - b; ++i)
                  gather[i] = in_row[first + i * g.stride];
                row.axpy(wv, gather.data(), out_row + b, e - b);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T> &input,
                             const BasicTensor<T> &weight,
                             const BasicTensor<T> &output_grad, ConvSpec spec) {
  const Shape &ws = weight.shape();
  const BasicTensor<T> bias_shape(Shape{1, ws.n, 1, 1});
  const ConvGeometry g = conv_geometry(input, weight, bias_shape, spec);
  const Shape &is = input.shape();
  const Shape expected{is.n, ws.n, g.out_h, g.out_w};
  if (output_grad.shape() != expected)
    throw ShapeError("conv2d_backward: output_grad " +
                     output_grad.shape().str() + " does not match forward "
                     "output " + expected.str());

  ConvGrads<T> grads{BasicTensor<T>(is), BasicTensor<T>(ws),
                     BasicTensor<T>(Shape{1, ws.n, 1, 1})};
  const Row<T> row;
  std::vector<T> gather(g.out_w);

  // input gradient: scatter every output gradient row back through the kernel
  for (std::size_t n = 0; n < is.n; ++n) {
    for (std::size_t co = 0; co < ws.n; ++co) {
      const T *g_plane = output_grad.plane(n, co);
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        const T *g_row = g_plane + oy * g.out_w;
        for (std::size_t ci = 0; ci < is.c; ++ci) {
          T *ig_plane = grads.input.plane(n, ci);
          for (std::size_t ky = 0; ky < ws.h; ++ky) {
            std::size_t iy;
            if (!input_row(oy, ky, g, is.h, iy))
              continue;
            T *ig_row = ig_plane + iy * is.w;
            for (std::size_t kx = 0; kx < ws.w; ++kx) {
              const auto [b, e] = valid_columns(kx, g, is.w);
              if (b == e)
                continue;
              const T wv = weight(co, ci, ky, kx);
              const std::size_t first = b * g.stride + kx - g.pad_w;
              if (g.stride == 1) {
                row.axpy(wv, g_row + b, ig_row + first, e - b);
              } else {
                for (std::size_t i = 0; i < e - b; ++i)
                  ig_row[first + i * g.stride] += wv * g_row[b + i];
              }
            }
          }
        }
      }
    }
  }

  // weight gradient: correlate output gradient with the input, per tap
  for (std::size_t co = 0; co < ws.n; ++co) {
    for (std::size_t ci = 0; ci < is.c; ++ci) {
      for (std::size_t ky = 0; ky < ws.h; ++ky) {
        for (std::size_t kx = 0; kx < ws.w; ++kx) {
          const auto [b, e] = valid_columns(kx, g, is.w);
          double acc = 0.0;
          if (b != e) {
            const std::size_t first = b * g.stride + kx - g.pad_w;
            for (std::size_t n = 0; n < is.n; ++n) {
              const T *g_plane = output_grad.plane(n, co);
              const T *in_plane = input.plane(n, ci);
              for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                std::size_t iy;
                if (!input_row(oy, ky, g, is.h, iy))
                  continue;
                const T *in_row = in_plane + iy * is.w;
                const T *g_row = g_plane + oy * g.out_w + b;
                if (g.stride == 1) {
                  acc += row.dot(g_row, in_row + first, e - b);
                } else {
                  for (std::size_t i = 0; i < e - b; ++i)
                    gather[i] = in_row[first + i * g.stride];
                  acc += row.dot(g_row, gather.data(), e - b);
                }
              }
            }
          }
          grads.weight(co, ci, ky, kx) = static_cast<T>(acc);
        }
      }
    }
    double bias_acc = 0.0;
    for (std::size_t n = 0; n < is.n; ++n)
      bias_acc += row.sum(output_grad.plane(n, co), g.out_h * g.out_w);
    grads.bias[co] = static_cast<T>(bias_acc);
  }
  return grads;
}

template <typename T> BasicTensor<T> lrelu(const BasicTensor<T> &x, T slope) {
  if (!std::isfinite(slope) || slope < T(0) || slope >= T(1))
    throw Error("lrelu: slope must lie in [0, 1)");
  require_finite(x, "lrelu");
  BasicTensor<T> out(x.shape());
  Row<T>{}.lrelu(x.data(), out.data(), x.size(), slope);
  return out;
}

template <typename T>
BasicTensor<T> lrelu_backward(const BasicTensor<T> &x,
                              const BasicTensor<T> &output_grad, T slope) {
  if (x.shape() != output_grad.shape())
    throw ShapeError("lrelu_backward: input " + x.shape().str() +
                     " vs gradient " + output_grad.shape().str());
  BasicTensor<T> out(x.shape());
  Row<T>{}.lrelu_backward(x.data(), output_grad.data(), out.data(), x.size(),
                          slope);
  return out;
}

template <typename T>
BasicTensor<T> avg_pool(const BasicTensor<T> &x, std::size_t size) {
  const Shape &s = x.shape();
  if (size == 0 || s.h % size != 0 || s.w % size != 0)
    throw ShapeError("avg_pool: spatial dims of " + s.str() +
                     " not divisible by " + std::to_string(size));
  const Shape os{s.n, s.c, s.h / size, s.w / size};
  BasicTensor<T> out(os);
  const double count = static_cast<double>(size * size);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      const T *in = x.plane(n, c);
      T *o = out.plane(n, c);
      for (std::size_t oy = 0; oy < os.h; ++oy)
        for (std::size_t ox = 0; ox < os.w; ++ox) {
          double acc = 0.0;
          for (std::size_t dy = 0; dy < size; ++dy) {
            const T *r = in + (oy * size + dy) * s.w + ox * size;
            for (std::size_t dx = 0; dx < size; ++dx)
              acc += r[dx];
          }
          o[oy * os.w + ox] = static_cast<T>(acc / count);
        }
    }
  return out;
}

template <typename T>
BasicTensor<T> avg_pool_backward(const BasicTensor<T> &output_grad,
                                 std::size_t size) {
  if (size == 0)
    throw Error("avg_pool_backward: size must be positive");
  const Shape &gs = output_grad.shape();
  BasicTensor<T> out(Shape{gs.n, gs.c, gs.h * size, gs.w * size});
  const T inv = static_cast<T>(1.0 / static_cast<double>(size * size));
  for (std::size_t n = 0; n < gs.n; ++n)
    for (std::size_t c = 0; c < gs.c; ++c)
      for (std::size_t y = 0; y < gs.h * size; ++y)
        for (std::size_t x = 0; x < gs.w * size; ++x)
          out(n, c, y, x) = output_grad(n, c, y / size, x / size) * inv;
  return out;
}

template <typename T>
BasicTensor<T> upsample_nn(const BasicTensor<T> &x, std::size_t factor) {
  if (factor == 0)
    throw Error("upsample_nn: factor must be >= 1");
  const Shape &s = x.shape();
  BasicTensor<T> out(Shape{s.n, s.c, s.h * factor, s.w * factor});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < s.h * factor; ++y)
        for (std::size_t xx = 0; xx < s.w * factor; ++xx)
          out(n, c, y, xx) = x(n, c, y / factor, xx / factor);
  return out;
}

template <typename T>
BasicTensor<T> upsample_nn_backward(const BasicTensor<T> &output_grad,
                                    std::size_t factor) {
  const Shape &gs = output_grad.shape();
  if (factor == 0 || gs.h % factor != 0 || gs.w % factor != 0)
    throw ShapeError("upsample_nn_backward: gradient " + gs.str() +
                     " not divisible by factor " + std::to_string(factor));
  const Shape os{gs.n, gs.c, gs.h / factor, gs.w / factor};
  BasicTensor<T> out(os);
  for (std::size_t n = 0; n < gs.n; ++n)
    for (std::size_t c = 0; c < gs.c; ++c)
      for (std::size_t oy = 0; oy < os.h; ++oy)
        for (std::size_t ox = 0; ox < os.w; ++ox) {
          double acc = 0.0;
          for (std::size_t dy = 0; dy < factor; ++dy)
            for (std::size_t dx = 0; dx < factor; ++dx)
              acc += output_grad(n, c, oy * factor + dy, ox * factor + dx);
          out(n, c, oy, ox) = static_cast<T>(acc);
        }
  return out;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T> &a,
                               const BasicTensor<T> &b) {
  const Shape &sa = a.shape();
  const Shape &sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw ShapeError("concat_channels: " + sa.str() + " and " + sb.str() +
                     " disagree on batch or spatial size");
  BasicTensor<T> out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (std::size_t n = 0; n < sa.n; ++n) {
    std::copy_n(a.plane(n, 0), sa.item(), out.plane(n, 0));
    std::copy_n(b.plane(n, 0), sb.item(), out.plane(n, 0) + sa.item());
  }
  return out;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>>
split_channels(const BasicTensor<T> &x, std::size_t channels_a) {
  const Shape &s = x.shape();
  if (channels_a > s.c)
    throw ShapeError("split_channels: cannot take " +
                     std::to_string(channels_a) + " channels from " + s.str());
  BasicTensor<T> a(Shape{s.n, channels_a, s.h, s.w});
  BasicTensor<T> b(Shape{s.n, s.c - channels_a, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n) {
    std::copy_n(x.plane(n, 0), a.shape().item(), a.data() + n * a.shape().item());
    std::copy_n(x.plane(n, 0) + a.shape().item(), b.shape().item(),
                b.data() + n * b.shape().item());
  }
  return {std::move(a), std::move(b)};
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T> &a, const BasicTensor<T> &b) {
  if (a.shape() != b.shape())
    throw ShapeError("add: " + a.shape().str() + " vs " + b.shape().str());
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = a[i] + b[i];
  return out;
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T> &x, const BasicTensor<T> &weight,
                     const BasicTensor<T> &bias) {
  const std::size_t in = x.shape().item();
  const std::size_t out_features = weight.shape().n;
  if (weight.shape().item() != in)
    throw ShapeError("dense: flattened input length " + std::to_string(in) +
                     " does not match weight " + weight.shape().str());
  if (bias.size() != out_features)
    throw ShapeError("dense: bias " + bias.shape().str() +
                     " does not match weight " + weight.shape().str());
  require_finite(x, "dense");
  const Row<T> row;
  BasicTensor<T> out(Shape{x.shape().n, out_features, 1, 1});
  for (std::size_t n = 0; n < x.shape().n; ++n) {
    const T *xi = x.data() + n * in;
    for (std::size_t o = 0; o < out_features; ++o)
      out(n, o, 0, 0) = static_cast<T>(
          row.dot(weight.data() + o * in, xi, in) + static_cast<double>(bias[o]));
  }
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T> &x,
                             const BasicTensor<T> &weight,
                             const BasicTensor<T> &output_grad) {
  const std::size_t in = x.shape().item();
  const std::size_t out_features = weight.shape().n;
  const std::size_t batch = x.shape().n;
  if (weight.shape().item() != in ||
      output_grad.shape() != Shape{batch, out_features, 1, 1})
    throw ShapeError("dense_backward: input " + x.shape().str() + ", weight " +
                     weight.shape().str() + ", gradient " +
                     output_grad.shape().str() + " are inconsistent");
  DenseGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()),
                  BasicTensor<T>(Shape{1, out_features, 1, 1})};
  std::vector<double> acc(in);
  for (std::size_t n = 0; n < batch; ++n) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t o = 0; o < out_features; ++o) {
      const double go = output_grad(n, o, 0, 0);
      const T *w = weight.data() + o * in;
      for (std::size_t i = 0; i < in; ++i)
        acc[i] += go * static_cast<double>(w[i]);
    }
    T *gi = g.input.data() + n * in;
    for (std::size_t i = 0; i < in; ++i)
      gi[i] = static_cast<T>(acc[i]);
  }
  for (std::size_t o = 0; o < out_features; ++o) {
    T *gw = g.weight.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) {
      double s = 0.0;
      for (std::size_t n = 0; n < batch; ++n)
        s += static_cast<double>(output_grad(n, o, 0, 0)) *
             static_cast<double>(x[n * in + i]);
      gw[i] = static_cast<T>(s);
    }
    double b = 0.0;
    for (std::size_t n = 0; n < batch; ++n)
      b += output_grad(n, o, 0, 0);
    g.bias[o] = static_cast<T>(b);
  }
  return g;
}

template <typename T> BasicTensor<T> sigmoid(const BasicTensor<T> &x) {
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<T>(sigmoid(static_cast<double>(x[i])));
  return out;
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T> &s,
                                const BasicTensor<T> &output_grad) {
  if (s.shape() != output_grad.shape())
    throw ShapeError("sigmoid_backward: " + s.shape().str() + " vs " +
                     output_grad.shape().str());
  BasicTensor<T> out(s.shape());
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = output_grad[i] * s[i] * (T(1) - s[i]);
  return out;
}

#define CXGAN_INSTANTIATE_OPS(T)                                               \
  template BasicTensor<T> conv2d(const BasicTensor<T> &,                       \
                                 const BasicTensor<T> &,                       \
                                 const BasicTensor<T> &, ConvSpec);            \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T> &,                \
                                        const BasicTensor<T> &,                \
                                        const BasicTensor<T> &, ConvSpec);     \
  template BasicTensor<T> lrelu(const BasicTensor<T> &, T);                    \
  template BasicTensor<T> lrelu_backward(const BasicTensor<T> &,               \
                                         const BasicTensor<T> &, T);           \
  template BasicTensor<T> avg_pool(const BasicTensor<T> &, std::size_t);       \
  template BasicTensor<T> avg_pool_backward(const BasicTensor<T> &,            \
                                            std::size_t);                      \
  template BasicTensor<T> upsample_nn(const BasicTensor<T> &, std::size_t);    \
  template BasicTensor<T> upsample_nn_backward(const BasicTensor<T> &,         \
                                               std::size_t);                   \
  template BasicTensor<T> concat_channels(const BasicTensor<T> &,              \
                                          const BasicTensor<T> &);             \
  template std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(           \
      const BasicTensor<T> &, std::size_t);                                    \
  template BasicTensor<T> add(const BasicTensor<T> &, const BasicTensor<T> &); \
  template BasicTensor<T> dense(const BasicTensor<T> &,                        \
                                const BasicTensor<T> &,                        \
                                const BasicTensor<T> &);                       \
  template DenseGrads<T> dense_backward(const BasicTensor<T> &,                \
                                        const BasicTensor<T> &,                \
                                        const BasicTensor<T> &);               \
  template BasicTensor<T> sigmoid(const BasicTensor<T> &);                     \
  template BasicTensor<T> sigmoid_backward(const BasicTensor<T> &,             \
                                           const BasicTensor<T> &);

CXGAN_INSTANTIATE_OPS(float)
CXGAN_INSTANTIATE_OPS(double)

#undef CXGAN_INSTANTIATE_OPS

} // namespace cxgan::nn
