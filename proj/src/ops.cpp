#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mgdfis {

ConvSpec ConvSpec::same(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw,
                        std::size_t dilation, std::size_t groups) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.dilation_h = s.dilation_w = dilation;
  s.groups = groups;
  const std::size_t total_h = dilation * (kh - 1);
  const std::size_t total_w = dilation * (kw - 1);
  s.pad_top = total_h / 2;
  s.pad_bottom = total_h - s.pad_top;
  s.pad_left = total_w / 2;
  s.pad_right = total_w - s.pad_left;
  return s;
}

void ConvSpec::validate() const {
  if (in_channels == 0 || out_channels == 0 || kernel_h == 0 || kernel_w == 0 || stride_h == 0 ||
      stride_w == 0 || dilation_h == 0 || dilation_w == 0 || groups == 0) {
    throw ConfigError("conv spec: extents, strides, dilations and groups must be >= 1");
  }
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw ConfigError("conv spec: groups (" + std::to_string(groups) +
                      ") must divide in_channels (" + std::to_string(in_channels) +
                      ") and out_channels (" + std::to_string(out_channels) + ")");
  }
}

Dims ConvSpec::weight_dims() const {
  return {out_channels, in_channels / groups, kernel_h, kernel_w};
}

std::size_t ConvSpec::out_height(std::size_t h) const {
  const std::size_t span = dilation_h * (kernel_h - 1) + 1;
  const std::size_t padded = h + pad_top + pad_bottom;
  if (padded < span) throw ShapeError("height", "input too small for kernel");
  return (padded - span) / stride_h + 1;
}

std::size_t ConvSpec::out_width(std::size_t w) const {
  const std::size_t span = dilation_w * (kernel_w - 1) + 1;
  const std::size_t padded = w + pad_left + pad_right;
  if (padded < span) throw ShapeError("width", "input too small for kernel");
  return (padded - span) / stride_w + 1;
}

Dims ConvSpec::output_dims(const Dims& input) const {
  return {input[0], out_channels, out_height(input[2]), out_width(input[3])};
}

namespace {

void check_conv_args(const Tensor& x, const Tensor& weights, std::span<const double> bias,
                     const ConvSpec& spec) {
  spec.validate();
  if (x.channels() != spec.in_channels) {
    throw ShapeError("channels", "conv2d input has " + std::to_string(x.channels()) +
                                     " channels, spec expects " +
                                     std::to_string(spec.in_channels));
  }
  expect_dims(weights.dims(), spec.weight_dims(), "conv2d weights");
  if (!bias.empty() && bias.size() != spec.out_channels) {
    throw ShapeError("channels", "conv2d bias length " + std::to_string(bias.size()) +
                                     " != out_channels " + std::to_string(spec.out_channels));
  }
}

// Range of output columns [lo, hi) whose input column ow*stride + shift lies in [0, width).
struct ColumnRange {
  std::size_t lo;
  std::size_t hi;
};

ColumnRange valid_columns(std::ptrdiff_t shift, std::size_t stride, std::size_t width,
                          std::size_t out_width) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  std::ptrdiff_t lo = 0;
  if (shift < 0) lo = (-shift + s - 1) / s;
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(width) - 1 - shift;
  std::ptrdiff_t hi = last < 0 ? 0 : last / s + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out_width));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Visits every (output row, input row, kernel tap) triple of one plane pair. The callback
// gets the column shift and the valid output-column range for that tap.
template <class F>
void for_each_tap(const ConvSpec& spec, std::size_t in_h, std::size_t in_w, std::size_t out_h,
                  std::size_t out_w, F&& f) {
  for (std::size_t kh = 0; kh < spec.kernel_h; ++kh) {
    for (std::size_t oh = 0; oh < out_h; ++oh) {
      const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * spec.stride_h + kh * spec.dilation_h) -
                                static_cast<std::ptrdiff_t>(spec.pad_top);
      if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_h)) continue;
      for (std::size_t kw = 0; kw < spec.kernel_w; ++kw) {
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kw * spec.dilation_w) -
                                     static_cast<std::ptrdiff_t>(spec.pad_left);
        const ColumnRange cols = valid_columns(shift, spec.stride_w, in_w, out_w);
        if (cols.lo >= cols.hi) continue;
        f(kh, kw, oh, static_cast<std::size_t>(ih), shift, cols);
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weights, std::span<const double> bias,
              const ConvSpec& spec) {
  check_conv_args(x, weights, bias, spec);
  const Dims od = spec.output_dims(x.dims());
  Tensor out(od);
  const std::size_t in_h = x.height(), in_w = x.width(), out_h = od[2], out_w = od[3];
  const std::size_t cin_g = spec.in_channels / spec.groups;
  const std::size_t cout_g = spec.out_channels / spec.groups;
  const std::size_t sw = spec.stride_w;

  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
      double* dst = out.plane(n, oc).data();
      if (!bias.empty()) std::fill(dst, dst + out_h * out_w, bias[oc]);
      const std::size_t g = oc / cout_g;
      for (std::size_t icg = 0; icg < cin_g; ++icg) {
        const double* src = x.plane(n, g * cin_g + icg).data();
        const double* wk = weights.raw() + weights.offset(oc, icg, 0, 0);
        for_each_tap(spec, in_h, in_w, out_h, out_w,
                     [&](std::size_t kh, std::size_t kw, std::size_t oh, std::size_t ih,
                         std::ptrdiff_t shift, ColumnRange cols) {
                       const double wv = wk[kh * spec.kernel_w + kw];
                       double* orow = dst + oh * out_w;
                       const double* irow = src + ih * in_w + shift;
                       if (sw == 1) {
                         for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) orow[ow] += wv * irow[ow];
                       } else {
                         for (std::size_t ow = cols.lo; ow < cols.hi; ++ow)
                           orow[ow] += wv * irow[ow * sw];
                       }
                     });
      }
    }
  }
  return out;
}

Tensor conv2d_im2col(const Tensor& x, const Tensor& weights, std::span<const double> bias,
                     const ConvSpec& spec) {
  check_conv_args(x, weights, bias, spec);
  const Dims od = spec.output_dims(x.dims());
  Tensor out(od);
  const std::size_t in_h = x.height(), in_w = x.width(), out_h = od[2], out_w = od[3];
  const std::size_t cin_g = spec.in_channels / spec.groups;
  const std::size_t cout_g = spec.out_channels / spec.groups;
  const std::size_t taps = spec.kernel_h * spec.kernel_w;
  const std::size_t rows = cin_g * taps;
  const std::size_t cols = out_h * out_w;
  std::vector<double> col(rows * cols);

  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t g = 0; g < spec.groups; ++g) {
      // Lower the receptive fields of this group into a (cin_g*kh*kw) x (out_h*out_w) matrix.
      for (std::size_t icg = 0; icg < cin_g; ++icg) {
        const std::span<const double> src = x.plane(n, g * cin_g + icg);
        for (std::size_t kh = 0; kh < spec.kernel_h; ++kh) {
          for (std::size_t kw = 0; kw < spec.kernel_w; ++kw) {
            double* row = col.data() + ((icg * spec.kernel_h + kh) * spec.kernel_w + kw) * cols;
            for (std::size_t oh = 0; oh < out_h; ++oh) {
              const auto ih = static_cast<std::ptrdiff_t>(oh * spec.stride_h + kh * spec.dilation_h) -
                              static_cast<std::ptrdiff_t>(spec.pad_top);
              for (std::size_t ow = 0; ow < out_w; ++ow) {
                const auto iw = static_cast<std::ptrdiff_t>(ow * spec.stride_w + kw * spec.dilation_w) -
                                static_cast<std::ptrdiff_t>(spec.pad_left);
                const bool inside = ih >= 0 && iw >= 0 && ih < static_cast<std::ptrdiff_t>(in_h) &&
                                    iw < static_cast<std::ptrdiff_t>(in_w);
                row[oh * out_w + ow] =
                    inside ? src[static_cast<std::size_t>(ih) * in_w + static_cast<std::size_t>(iw)]
                           : 0.0;
              }
            }
          }
        }
      }
      for (std::size_t ocg = 0; ocg < cout_g; ++ocg) {
        const std::size_t oc = g * cout_g + ocg;
        double* dst = out.plane(n, oc).data();
        std::fill(dst, dst + cols, bias.empty() ? 0.0 : bias[oc]);
        const double* wrow = weights.raw() + weights.offset(oc, 0, 0, 0);
        for (std::size_t r = 0; r < rows; ++r) {
          const double wv = wrow[r];
          const double* crow = col.data() + r * cols;
          for (std::size_t j = 0; j < cols; ++j) dst[j] += wv * crow[j];
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& weights, const ConvSpec& spec,
                          const Tensor& grad_out) {
  check_conv_args(x, weights, {}, spec);
  const Dims od = spec.output_dims(x.dims());
  expect_dims(grad_out.dims(), od, "conv2d_backward grad_out");
  ConvGrads g{Tensor(x.dims()), Tensor(weights.dims()), std::vector<double>(spec.out_channels)};
  const std::size_t in_h = x.height(), in_w = x.width(), out_h = od[2], out_w = od[3];
  const std::size_t cin_g = spec.in_channels / spec.groups;
  const std::size_t cout_g = spec.out_channels / spec.groups;
  const std::size_t sw = spec.stride_w;

  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t oc = 0; oc < spec.out_channels; ++oc) {
      const double* gy = grad_out.plane(n, oc).data();
      double bsum = 0.0;
      for (std::size_t i = 0; i < out_h * out_w; ++i) bsum += gy[i];
      g.bias[oc] += bsum;
      const std::size_t grp = oc / cout_g;
      for (std::size_t icg = 0; icg < cin_g; ++icg) {
        const std::size_t ic = grp * cin_g + icg;
        const double* src = x.plane(n, ic).data();
        double* gsrc = g.input.plane(n, ic).data();
        const double* wk = weights.raw() + weights.offset(oc, icg, 0, 0);
        double* gwk = g.weights.raw() + g.weights.offset(oc, icg, 0, 0);
        for_each_tap(spec, in_h, in_w, out_h, out_w,
                     [&](std::size_t kh, std::size_t kw, std::size_t oh, std::size_t ih,
                         std::ptrdiff_t shift, ColumnRange cols) {
                       const std::size_t tap = kh * spec.kernel_w + kw;
                       const double wv = wk[tap];
                       const double* grow = gy + oh * out_w;
                       const double* irow = src + ih * in_w + shift;
                       double* girow = gsrc + ih * in_w + shift;
                       double acc = 0.0;
                       for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) {
                         acc += grow[ow] * irow[ow * sw];
                         girow[ow * sw] += wv * grow[ow];
                       }
                       gwk[tap] += acc;
                     });
      }
    }
  }
  return g;
}

namespace {

void check_linear(const Tensor& x, const Tensor& weights) {
  if (weights.batch() != 1 || weights.channels() != 1) {
    throw ShapeError("batch", "linear weights must be 1x1xINxOUT, got " + to_string(weights.dims()));
  }
  if (x.width() != weights.height()) {
    throw ShapeError("width", "linear inner dimension mismatch: input has " +
                                  std::to_string(x.width()) + " features, weights expect " +
                                  std::to_string(weights.height()));
  }
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& weights, std::span<const double> bias) {
  check_linear(x, weights);
  const std::size_t in = weights.height(), outf = weights.width();
  if (!bias.empty() && bias.size() != outf) {
    throw ShapeError("width", "linear bias length " + std::to_string(bias.size()) +
                                  " != output features " + std::to_string(outf));
  }
  const std::size_t rows = x.size() / in;
  Tensor out({x.batch(), x.channels(), x.height(), outf});
  const double* w = weights.raw();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.raw() + r * in;
    double* yr = out.raw() + r * outf;
    if (!bias.empty()) std::copy(bias.begin(), bias.end(), yr);
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = xr[k];
      const double* wr = w + k * outf;
      for (std::size_t j = 0; j < outf; ++j) yr[j] += xv * wr[j];
    }
  }
  return out;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& weights, const Tensor& grad_out) {
  check_linear(x, weights);
  const std::size_t in = weights.height(), outf = weights.width();
  expect_dims(grad_out.dims(), {x.batch(), x.channels(), x.height(), outf},
              "linear_backward grad_out");
  LinearGrads g{Tensor(x.dims()), Tensor(weights.dims()), std::vector<double>(outf)};
  const std::size_t rows = x.size() / in;
  const double* w = weights.raw();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.raw() + r * in;
    const double* gy = grad_out.raw() + r * outf;
    double* gx = g.input.raw() + r * in;
    for (std::size_t j = 0; j < outf; ++j) g.bias[j] += gy[j];
    for (std::size_t k = 0; k < in; ++k) {
      const double* wr = w + k * outf;
      double* gwr = g.weights.raw() + k * outf;
      double acc = 0.0;
      for (std::size_t j = 0; j < outf; ++j) {
        acc += wr[j] * gy[j];
        gwr[j] += xr[k] * gy[j];
      }
      gx[k] = acc;
    }
  }
  return g;
}

namespace {

struct AxisWalk {
  std::size_t outer;
  std::size_t length;
  std::size_t inner;
};

AxisWalk axis_walk(const Dims& d, std::size_t axis) {
  if (axis > 3) throw ShapeError("axis", "softmax axis must be 0..3, got " + std::to_string(axis));
  AxisWalk w{1, d[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) w.outer *= d[i];
  for (std::size_t i = axis + 1; i < 4; ++i) w.inner *= d[i];
  return w;
}

}  // namespace

Tensor softmax(const Tensor& x, std::size_t axis) {
  const AxisWalk aw = axis_walk(x.dims(), axis);
  Tensor y(x.dims());
  for (std::size_t o = 0; o < aw.outer; ++o) {
    for (std::size_t i = 0; i < aw.inner; ++i) {
      const std::size_t base = o * aw.length * aw.inner + i;
      double m = x[base];
      for (std::size_t k = 1; k < aw.length; ++k) m = std::max(m, x[base + k * aw.inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < aw.length; ++k) {
        const double e = std::exp(x[base + k * aw.inner] - m);
        y[base + k * aw.inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < aw.length; ++k) y[base + k * aw.inner] /= z;
    }
  }
  return y;
}

Tensor softmax_backward(const Tensor& y, std::size_t axis, const Tensor& grad_out) {
  expect_dims(grad_out.dims(), y.dims(), "softmax_backward grad_out");
  const AxisWalk aw = axis_walk(y.dims(), axis);
  Tensor gx(y.dims());
  for (std::size_t o = 0; o < aw.outer; ++o) {
    for (std::size_t i = 0; i < aw.inner; ++i) {
      const std::size_t base = o * aw.length * aw.inner + i;
      double dot = 0.0;
      for (std::size_t k = 0; k < aw.length; ++k) {
        const std::size_t j = base + k * aw.inner;
        dot += grad_out[j] * y[j];
      }
      for (std::size_t k = 0; k < aw.length; ++k) {
        const std::size_t j = base + k * aw.inner;
        gx[j] = y[j] * (grad_out[j] - dot);
      }
    }
  }
  return gx;
}

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::tanh:
      return std::tanh(x);
    case Activation::gelu:
      return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    case Activation::silu:
      return x * sigmoid(x);
    case Activation::sigmoid:
      return sigmoid(x);
  }
  return 0.0;
}

double activate_derivative(Activation kind, double x) {
  switch (kind) {
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::gelu: {
      const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
      const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
      return cdf + x * pdf;
    }
    case Activation::silu: {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
    case Activation::sigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
  }
  return 0.0;
}

Tensor activation(Activation kind, const Tensor& x) {
  Tensor y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = activate(kind, x[i]);
  return y;
}

Tensor activation_backward(Activation kind, const Tensor& x, const Tensor& grad_out) {
  expect_dims(grad_out.dims(), x.dims(), "activation_backward grad_out");
  Tensor gx(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = grad_out[i] * activate_derivative(kind, x[i]);
  return gx;
}

Tensor global_avg_pool(const Tensor& x) {
  Tensor y({x.batch(), x.channels(), 1, 1});
  const double inv = 1.0 / static_cast<double>(x.height() * x.width());
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      double s = 0.0;
      for (double v : x.plane(n, c)) s += v;
      y(n, c, 0, 0) = s * inv;
    }
  }
  return y;
}

Tensor global_avg_pool_backward(const Dims& input_dims, const Tensor& grad_out) {
  expect_dims(grad_out.dims(), {input_dims[0], input_dims[1], 1, 1}, "gap_backward grad_out");
  Tensor gx(input_dims);
  const double inv = 1.0 / static_cast<double>(input_dims[2] * input_dims[3]);
  for (std::size_t n = 0; n < input_dims[0]; ++n) {
    for (std::size_t c = 0; c < input_dims[1]; ++c) {
      const double v = grad_out(n, c, 0, 0) * inv;
      for (double& g : gx.plane(n, c)) g = v;
    }
  }
  return gx;
}

namespace {

struct Tap {
  std::size_t i0;
  std::size_t i1;
  double w1;  // weight on i1; i0 gets 1 - w1
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

Tensor resize_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  Tensor y({x.batch(), x.channels(), out_h, out_w});
  const auto th = bilinear_taps(x.height(), out_h);
  const auto tw = bilinear_taps(x.width(), out_w);
  const std::size_t in_w = x.width();
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const double* src = x.plane(n, c).data();
      double* dst = y.plane(n, c).data();
      for (std::size_t oh = 0; oh < out_h; ++oh) {
        const Tap& a = th[oh];
        for (std::size_t ow = 0; ow < out_w; ++ow) {
          const Tap& b = tw[ow];
          const double top = (1.0 - b.w1) * src[a.i0 * in_w + b.i0] + b.w1 * src[a.i0 * in_w + b.i1];
          const double bot = (1.0 - b.w1) * src[a.i1 * in_w + b.i0] + b.w1 * src[a.i1 * in_w + b.i1];
          dst[oh * out_w + ow] = (1.0 - a.w1) * top + a.w1 * bot;
        }
      }
    }
  }
  return y;
}

Tensor resize_bilinear_backward(const Dims& input_dims, const Tensor& grad_out) {
  if (grad_out.batch() != input_dims[0] || grad_out.channels() != input_dims[1]) {
    throw ShapeError("channels", "resize_bilinear_backward: batch/channel mismatch");
  }
  Tensor gx(input_dims);
  const std::size_t out_h = grad_out.height(), out_w = grad_out.width(), in_w = input_dims[3];
  const auto th = bilinear_taps(input_dims[2], out_h);
  const auto tw = bilinear_taps(input_dims[3], out_w);
  for (std::size_t n = 0; n < input_dims[0]; ++n) {
    for (std::size_t c = 0; c < input_dims[1]; ++c) {
      const double* gy = grad_out.plane(n, c).data();
      double* g = gx.plane(n, c).data();
      for (std::size_t oh = 0; oh < out_h; ++oh) {
        const Tap& a = th[oh];
        for (std::size_t ow = 0; ow < out_w; ++ow) {
          const Tap& b = tw[ow];
          const double v = gy[oh * out_w + ow];
          g[a.i0 * in_w + b.i0] += (1.0 - a.w1) * (1.0 - b.w1) * v;
          g[a.i0 * in_w + b.i1] += (1.0 - a.w1) * b.w1 * v;
          g[a.i1 * in_w + b.i0] += a.w1 * (1.0 - b.w1) * v;
          g[a.i1 * in_w + b.i1] += a.w1 * b.w1 * v;
        }
      }
    }
  }
  return gx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.batch() != b.batch()) throw ShapeError("batch", "concat_channels batch mismatch");
  if (a.height() != b.height()) throw ShapeError("height", "concat_channels height mismatch");
  if (a.width() != b.width()) throw ShapeError("width", "concat_channels width mismatch");
  Tensor out({a.batch(), a.channels() + b.channels(), a.height(), a.width()});
  const std::size_t plane = a.height() * a.width();
  for (std::size_t n = 0; n < a.batch(); ++n) {
    std::copy_n(a.raw() + a.offset(n, 0, 0, 0), a.channels() * plane, out.raw() + out.offset(n, 0, 0, 0));
    std::copy_n(b.raw() + b.offset(n, 0, 0, 0), b.channels() * plane,
                out.raw() + out.offset(n, a.channels(), 0, 0));
  }
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, std::size_t first) {
  if (first == 0 || first >= x.channels()) {
    throw ShapeError("channels", "split_channels: cannot split " + std::to_string(x.channels()) +
                                     " channels at " + std::to_string(first));
  }
  Tensor a({x.batch(), first, x.height(), x.width()});
  Tensor b({x.batch(), x.channels() - first, x.height(), x.width()});
  const std::size_t plane = x.height() * x.width();
  for (std::size_t n = 0; n < x.batch(); ++n) {
    std::copy_n(x.raw() + x.offset(n, 0, 0, 0), first * plane, a.raw() + a.offset(n, 0, 0, 0));
    std::copy_n(x.raw() + x.offset(n, first, 0, 0), b.channels() * plane,
                b.raw() + b.offset(n, 0, 0, 0));
  }
  return {std::move(a), std::move(b)};
}

Tensor scale_channels(const Tensor& x, const Tensor& gate) {
  expect_dims(gate.dims(), {x.batch(), x.channels(), 1, 1}, "scale_channels gate");
  Tensor y(x.dims());
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const double g = gate(n, c, 0, 0);
      const auto src = x.plane(n, c);
      auto dst = y.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * g;
    }
  }
  return y;
}

}  // namespace mgdfis
