#include "ftssa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"

namespace mgdfis {

// ---------------------------------------------------------------------------
// DyT

DytParams DytParams::init(std::size_t channels) {
  return {0.5, std::vector<double>(channels, 1.0), std::vector<double>(channels, 0.0)};
}

void DytParams::visit(std::string_view prefix, const ParamVisitor& f) {
  visit_scalar(prefix, "alpha", alpha, f);
  visit_vector(prefix, "gamma", gamma, f);
  visit_vector(prefix, "beta", beta, f);
}

namespace {

void check_dyt(const Tensor& x, const DytParams& p) {
  if (p.gamma.size() != x.channels() || p.beta.size() != x.channels()) {
    throw ShapeError("channels", "dyt: gamma/beta length does not match " +
                                     std::to_string(x.channels()) + " channels");
  }
}

}  // namespace

Tensor dyt(const Tensor& x, const DytParams& p) {
  check_dyt(x, p);
  Tensor y(x.dims());
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const auto src = x.plane(n, c);
      auto dst = y.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = p.gamma[c] * std::tanh(p.alpha * src[i]) + p.beta[c];
      }
    }
  }
  return y;
}

Tensor dyt_backward(const Tensor& x, const DytParams& p, const Tensor& grad_out, DytParams& grad) {
  check_dyt(x, p);
  expect_dims(grad_out.dims(), x.dims(), "dyt_backward grad_out");
  Tensor gx(x.dims());
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const auto src = x.plane(n, c);
      const auto gy = grad_out.plane(n, c);
      auto g = gx.plane(n, c);
      double g_alpha = 0.0, g_gamma = 0.0, g_beta = 0.0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double t = std::tanh(p.alpha * src[i]);
        const double sech2 = 1.0 - t * t;
        g[i] = gy[i] * p.gamma[c] * p.alpha * sech2;
        g_alpha += gy[i] * p.gamma[c] * src[i] * sech2;
        g_gamma += gy[i] * t;
        g_beta += gy[i];
      }
      grad.alpha += g_alpha;
      grad.gamma[c] += g_gamma;
      grad.beta[c] += g_beta;
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// TSSA

TssaParams TssaParams::init(std::size_t channels, std::size_t heads, std::size_t head_dim,
                            Rng& rng) {
  TssaParams p = zeros(channels, heads, head_dim);
  fill_uniform_fan_in(p.qkv.data(), channels, rng);
  p.out = LinearLayer::init(heads * head_dim, channels, rng);
  return p;
}

TssaParams TssaParams::zeros(std::size_t channels, std::size_t heads, std::size_t head_dim) {
  if (heads == 0 || head_dim == 0) throw ConfigError("tssa: heads and head_dim must be >= 1");
  TssaParams p;
  p.heads = heads;
  p.head_dim = head_dim;
  p.qkv = Tensor({1, 1, channels, heads * head_dim});
  p.out = LinearLayer::zeros(heads * head_dim, channels);
  return p;
}

void TssaParams::visit(std::string_view prefix, const ParamVisitor& f) {
  f({join_name(prefix, "qkv"), qkv.data(), {qkv.height(), qkv.width()}, false});
  out.visit(join_name(prefix, "out"), f);
}

namespace {

Tensor to_tokens(const Tensor& f) {
  const std::size_t b = f.batch(), c = f.channels(), n = f.height() * f.width();
  Tensor t({1, 1, b * n, c});
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      const auto src = f.plane(bi, ci);
      for (std::size_t i = 0; i < n; ++i) t[(bi * n + i) * c + ci] = src[i];
    }
  }
  return t;
}

Tensor from_tokens(const Tensor& t, const Dims& dims) {
  Tensor f(dims);
  const std::size_t n = dims[2] * dims[3], c = dims[1];
  for (std::size_t bi = 0; bi < dims[0]; ++bi) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      auto dst = f.plane(bi, ci);
      for (std::size_t i = 0; i < n; ++i) dst[i] = t[(bi * n + i) * c + ci];
    }
  }
  return f;
}

void check_tssa(const Tensor& f, const TssaParams& p) {
  const std::size_t j = p.heads * p.head_dim;
  if (p.qkv.height() != f.channels()) {
    throw ShapeError("channels", "tssa: qkv expects " + std::to_string(p.qkv.height()) +
                                     " channels, input has " + std::to_string(f.channels()));
  }
  if (p.qkv.width() != j || p.out.in_features() != j || p.out.out_features() != f.channels()) {
    throw ShapeError("width", "tssa: projection sizes inconsistent with heads*head_dim");
  }
}

// Forward state shared by tssa and its backward pass. Index conventions:
// token-major u[(b*N + n)*J + h*D + d]; head stats [(b*heads + h)*N + n];
// per-head feature stats [(b*heads + h)*D + d].
struct TssaState {
  std::size_t batch, tokens, heads, dim, width;
  Tensor x;  // tokens
  Tensor u;  // projected statistics
  std::vector<double> norm;  // ||u[b,n,h,:]||
  std::vector<double> pi;
  std::vector<double> z;     // sum_n pi, per (b, h)
  std::vector<double> dots;
  std::vector<double> attn;
  Tensor o;  // pre-projection output, token-major

  double mult(std::size_t b, std::size_t h, std::size_t n, PiMode mode) const {
    return mode == PiMode::constant ? std::numbers::pi : pi[(b * heads + h) * tokens + n];
  }
};

TssaState tssa_state(const Tensor& f, const TssaParams& p) {
  check_tssa(f, p);
  TssaState s;
  s.batch = f.batch();
  s.tokens = f.height() * f.width();
  s.heads = p.heads;
  s.dim = p.head_dim;
  s.width = p.heads * p.head_dim;
  s.x = to_tokens(f);
  s.u = linear(s.x, p.qkv, {});
  const double eps = TssaParams::kEps;
  const std::size_t B = s.batch, N = s.tokens, H = s.heads, D = s.dim, J = s.width;

  s.norm.assign(B * H * N, 0.0);
  s.pi.assign(B * H * N, 0.0);
  std::vector<double> stat(H);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      const double* ut = s.u.raw() + (b * N + n) * J;
      double mx = -HUGE_VAL;
      for (std::size_t h = 0; h < H; ++h) {
        double sq = 0.0;
        for (std::size_t d = 0; d < D; ++d) sq += ut[h * D + d] * ut[h * D + d];
        const double r = std::sqrt(sq);
        s.norm[(b * H + h) * N + n] = r;
        // Sum over D of the squared L2-normalized row.
        const double den = r + eps;
        stat[h] = sq / (den * den);
        mx = std::max(mx, stat[h]);
      }
      double zsum = 0.0;
      for (std::size_t h = 0; h < H; ++h) {
        stat[h] = std::exp(stat[h] - mx);
        zsum += stat[h];
      }
      for (std::size_t h = 0; h < H; ++h) s.pi[(b * H + h) * N + n] = stat[h] / zsum;
    }
  }

  s.z.assign(B * H, 0.0);
  s.dots.assign(B * H * D, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      double zs = 0.0;
      for (std::size_t n = 0; n < N; ++n) zs += s.pi[(b * H + h) * N + n];
      s.z[b * H + h] = zs;
      double* dots = s.dots.data() + (b * H + h) * D;
      for (std::size_t n = 0; n < N; ++n) {
        const double w = s.pi[(b * H + h) * N + n] / (zs + eps);
        const double* ut = s.u.raw() + (b * N + n) * J + h * D;
        for (std::size_t d = 0; d < D; ++d) dots[d] += w * ut[d] * ut[d];
      }
    }
  }
  s.attn.resize(s.dots.size());
  for (std::size_t i = 0; i < s.dots.size(); ++i) s.attn[i] = 1.0 / (1.0 + s.dots[i]);

  s.o = Tensor(s.u.dims());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      const double* ut = s.u.raw() + (b * N + n) * J;
      double* ot = s.o.raw() + (b * N + n) * J;
      for (std::size_t h = 0; h < H; ++h) {
        const double m = s.mult(b, h, n, p.pi_mode);
        const double* a = s.attn.data() + (b * H + h) * D;
        for (std::size_t d = 0; d < D; ++d) ot[h * D + d] = -ut[h * D + d] * m * a[d];
      }
    }
  }
  return s;
}

}  // namespace

Tensor tssa(const Tensor& f, const TssaParams& p, TssaTrace* trace) {
  const TssaState s = tssa_state(f, p);
  if (trace != nullptr) {
    trace->pi = Tensor({s.batch, s.heads, s.tokens, 1}, s.pi);
    trace->dots = Tensor({s.batch, s.heads, 1, s.dim}, s.dots);
    trace->attn = Tensor({s.batch, s.heads, 1, s.dim}, s.attn);
  }
  return from_tokens(p.out.forward(s.o), f.dims());
}

Tensor tssa_backward(const Tensor& f, const TssaParams& p, const Tensor& grad_out,
                     TssaParams& grad) {
  expect_dims(grad_out.dims(), f.dims(), "tssa_backward grad_out");
  const TssaState s = tssa_state(f, p);
  const double eps = TssaParams::kEps;
  const std::size_t B = s.batch, N = s.tokens, H = s.heads, D = s.dim, J = s.width;

  const Tensor go = p.out.backward(s.o, to_tokens(grad_out), grad.out);
  Tensor gu(s.u.dims());
  std::vector<double> g_attn(B * H * D, 0.0);
  std::vector<double> g_pi(B * H * N, 0.0);

  // o = -u * m * attn
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      const double* ut = s.u.raw() + (b * N + n) * J;
      const double* gt = go.raw() + (b * N + n) * J;
      double* gut = gu.raw() + (b * N + n) * J;
      for (std::size_t h = 0; h < H; ++h) {
        const double m = s.mult(b, h, n, p.pi_mode);
        const double* a = s.attn.data() + (b * H + h) * D;
        double* ga = g_attn.data() + (b * H + h) * D;
        double gm = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
          const double g = gt[h * D + d];
          gut[h * D + d] -= g * m * a[d];
          ga[d] -= g * ut[h * D + d] * m;
          gm -= g * ut[h * D + d] * a[d];
        }
        if (p.pi_mode == PiMode::distribution) g_pi[(b * H + h) * N + n] += gm;
      }
    }
  }

  // attn = 1 / (1 + dots); dots = sum_n w_n u_n^2 with w = pi / (z + eps)
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      const double zden = s.z[b * H + h] + eps;
      std::vector<double> g_dots(D);
      for (std::size_t d = 0; d < D; ++d) {
        const double a = s.attn[(b * H + h) * D + d];
        g_dots[d] = -g_attn[(b * H + h) * D + d] * a * a;
      }
      std::vector<double> g_w(N, 0.0);
      for (std::size_t n = 0; n < N; ++n) {
        const double w = s.pi[(b * H + h) * N + n] / zden;
        const double* ut = s.u.raw() + (b * N + n) * J + h * D;
        double* gut = gu.raw() + (b * N + n) * J + h * D;
        double gw = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
          gut[d] += g_dots[d] * w * 2.0 * ut[d];
          gw += g_dots[d] * ut[d] * ut[d];
        }
        g_w[n] = gw;
      }
      double cross = 0.0;
      for (std::size_t n = 0; n < N; ++n) cross += g_w[n] * s.pi[(b * H + h) * N + n];
      for (std::size_t n = 0; n < N; ++n) {
        g_pi[(b * H + h) * N + n] += g_w[n] / zden - cross / (zden * zden);
      }
    }
  }

  // pi = softmax_h(stat); stat = r^2 / (r + eps)^2 so d stat / du = 2 eps u / (r + eps)^3
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t n = 0; n < N; ++n) {
      double dot = 0.0;
      for (std::size_t h = 0; h < H; ++h) {
        const std::size_t i = (b * H + h) * N + n;
        dot += g_pi[i] * s.pi[i];
      }
      double* gut = gu.raw() + (b * N + n) * J;
      const double* ut = s.u.raw() + (b * N + n) * J;
      for (std::size_t h = 0; h < H; ++h) {
        const std::size_t i = (b * H + h) * N + n;
        const double g_stat = s.pi[i] * (g_pi[i] - dot);
        const double den = s.norm[i] + eps;
        const double coef = g_stat * 2.0 * eps / (den * den * den);
        for (std::size_t d = 0; d < D; ++d) gut[h * D + d] += coef * ut[h * D + d];
      }
    }
  }

  LinearGrads lg = linear_backward(s.x, p.qkv, gu);
  grad.qkv += lg.weights;
  return from_tokens(lg.input, f.dims());
}

// ---------------------------------------------------------------------------
// Mona

MonaParams MonaParams::init(std::size_t channels, std::size_t reduced, Rng& rng) {
  MonaParams p;
  p.down = ConvLayer::init(ConvSpec::pointwise(channels, reduced), rng);
  p.dw3 = ConvLayer::init(ConvSpec::depthwise(reduced, 3), rng);
  p.dw5 = ConvLayer::init(ConvSpec::depthwise(reduced, 5), rng);
  p.dw7 = ConvLayer::init(ConvSpec::depthwise(reduced, 7), rng);
  p.mix = ConvLayer::init(ConvSpec::pointwise(reduced, reduced), rng);
  p.up = ConvLayer::init(ConvSpec::pointwise(reduced, channels), rng);
  p.xmona_proj = ConvLayer::init(ConvSpec::pointwise(channels, channels), rng);
  p.xmona_scale = 1e-6;
  return p;
}

MonaParams MonaParams::zeros(std::size_t channels, std::size_t reduced) {
  MonaParams p;
  p.down = ConvLayer::zeros(ConvSpec::pointwise(channels, reduced));
  p.dw3 = ConvLayer::zeros(ConvSpec::depthwise(reduced, 3));
  p.dw5 = ConvLayer::zeros(ConvSpec::depthwise(reduced, 5));
  p.dw7 = ConvLayer::zeros(ConvSpec::depthwise(reduced, 7));
  p.mix = ConvLayer::zeros(ConvSpec::pointwise(reduced, reduced));
  p.up = ConvLayer::zeros(ConvSpec::pointwise(reduced, channels));
  p.xmona_proj = ConvLayer::zeros(ConvSpec::pointwise(channels, channels));
  p.xmona_scale = 0.0;
  return p;
}

void MonaParams::visit(std::string_view prefix, const ParamVisitor& f) {
  down.visit(join_name(prefix, "down"), f);
  dw3.visit(join_name(prefix, "dw3"), f);
  dw5.visit(join_name(prefix, "dw5"), f);
  dw7.visit(join_name(prefix, "dw7"), f);
  mix.visit(join_name(prefix, "mix"), f);
  up.visit(join_name(prefix, "up"), f);
  xmona_proj.visit(join_name(prefix, "xmona_proj"), f);
  visit_scalar(prefix, "xmona_scale", xmona_scale, f);
}

namespace {

Tensor multi_scale_mix_input(const Tensor& z, const MonaParams& p) {
  Tensor a = p.dw3.forward(z);
  a += p.dw5.forward(z);
  a += p.dw7.forward(z);
  a *= 1.0 / 3.0;
  a += z;
  return a;
}

}  // namespace

Tensor mona_op(const Tensor& z, const MonaParams& p) {
  return z + p.mix.forward(multi_scale_mix_input(z, p));
}

Tensor mona_op_backward(const Tensor& z, const MonaParams& p, const Tensor& grad_out,
                        MonaParams& grad) {
  const Tensor a = multi_scale_mix_input(z, p);
  const Tensor ga = p.mix.backward(a, grad_out, grad.mix);
  const Tensor ga3 = ga * (1.0 / 3.0);
  Tensor gz = grad_out + ga;
  gz += p.dw3.backward(z, ga3, grad.dw3);
  gz += p.dw5.backward(z, ga3, grad.dw5);
  gz += p.dw7.backward(z, ga3, grad.dw7);
  return gz;
}

Tensor xmona(const Tensor& x, const MonaParams& p) {
  return p.xmona_proj.forward(x) * p.xmona_scale;
}

Tensor xmona_backward(const Tensor& x, const MonaParams& p, const Tensor& grad_out,
                      MonaParams& grad) {
  const Tensor proj = p.xmona_proj.forward(x);
  double g_scale = 0.0;
  for (std::size_t i = 0; i < proj.size(); ++i) g_scale += grad_out[i] * proj[i];
  grad.xmona_scale += g_scale;
  return p.xmona_proj.backward(x, grad_out * p.xmona_scale, grad.xmona_proj);
}

Tensor mona(const Tensor& x, const MonaParams& p) {
  const Tensor z = p.down.forward(x);
  const Tensor m = mona_op(z, p);
  return xmona(x, p) + p.up.forward(activation(Activation::gelu, m));
}

Tensor mona_backward(const Tensor& x, const MonaParams& p, const Tensor& grad_out,
                     MonaParams& grad) {
  const Tensor z = p.down.forward(x);
  const Tensor m = mona_op(z, p);
  const Tensor act = activation(Activation::gelu, m);
  const Tensor g_act = p.up.backward(act, grad_out, grad.up);
  const Tensor g_m = activation_backward(Activation::gelu, m, g_act);
  const Tensor g_z = mona_op_backward(z, p, g_m, grad);
  Tensor gx = p.down.backward(x, g_z, grad.down);
  gx += xmona_backward(x, p, grad_out, grad);
  return gx;
}

// ---------------------------------------------------------------------------
// SEFF

SeffParams SeffParams::init(std::size_t channels, std::size_t base, Rng& rng) {
  SeffParams p = zeros(channels, base);
  p.split = ConvLayer::init(ConvSpec::pointwise(channels, 2 * channels), rng);
  p.branch1 = ConvLayer::init(ConvSpec::depthwise(channels, 3), rng);
  p.branch2 = ConvLayer::init(ConvSpec::depthwise(channels, 3, 2), rng);
  p.merge = ConvLayer::init(ConvSpec::pointwise(channels, channels), rng);
  p.w1 = ComplexTensor({1, channels, base, base}, {1.0, 0.0});
  p.w2 = ComplexTensor({1, channels, base, base}, {1.0, 0.0});
  return p;
}

SeffParams SeffParams::zeros(std::size_t channels, std::size_t base) {
  if (base == 0) throw ConfigError("seff: base resolution must be >= 1");
  SeffParams p;
  p.split = ConvLayer::zeros(ConvSpec::pointwise(channels, 2 * channels));
  p.branch1 = ConvLayer::zeros(ConvSpec::depthwise(channels, 3));
  p.branch2 = ConvLayer::zeros(ConvSpec::depthwise(channels, 3, 2));
  p.merge = ConvLayer::zeros(ConvSpec::pointwise(channels, channels));
  p.w1 = ComplexTensor({1, channels, base, base});
  p.w2 = ComplexTensor({1, channels, base, base});
  p.b1.assign(channels, 0.0);
  p.b2.assign(channels, 0.0);
  return p;
}

void SeffParams::visit(std::string_view prefix, const ParamVisitor& f) {
  split.visit(join_name(prefix, "split"), f);
  branch1.visit(join_name(prefix, "branch1"), f);
  branch2.visit(join_name(prefix, "branch2"), f);
  merge.visit(join_name(prefix, "merge"), f);
  visit_complex(prefix, "w1", w1, f);
  visit_complex(prefix, "w2", w2, f);
  visit_vector(prefix, "b1", b1, f);
  visit_vector(prefix, "b2", b2, f);
}

namespace {

ComplexTensor upsample_weights(const ComplexTensor& w, std::size_t h, std::size_t wd) {
  return ComplexTensor::from_parts(resize_bilinear(w.real(), h, wd),
                                   resize_bilinear(w.imag(), h, wd));
}

void check_filter(const Tensor& x, const ComplexTensor& weights, std::size_t bias_len) {
  if (weights.dims()[0] != 1 || weights.dims()[1] != x.channels()) {
    throw ShapeError("channels", "spectral_filter: weights " + to_string(weights.dims()) +
                                     " do not match input " + to_string(x.dims()));
  }
  if (bias_len != x.channels()) {
    throw ShapeError("channels", "spectral_filter: bias length mismatch");
  }
}

}  // namespace

Tensor spectral_filter(const Tensor& x, const ComplexTensor& weights, std::span<const double> bias) {
  check_filter(x, weights, bias.size());
  const ComplexTensor w = upsample_weights(weights, x.height(), x.width());
  ComplexTensor spec = fft2(x);
  const std::size_t plane = x.height() * x.width();
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      auto* s = spec.data().data() + spec.offset(n, c, 0, 0);
      const auto* wc = w.data().data() + w.offset(0, c, 0, 0);
      for (std::size_t k = 0; k < plane; ++k) s[k] = wc[k] * s[k] + bias[c];
    }
  }
  return ifft2(spec);
}

Tensor spectral_filter_backward(const Tensor& x, const ComplexTensor& weights,
                                const Tensor& grad_out, ComplexTensor& grad_weights,
                                std::vector<double>& grad_bias) {
  check_filter(x, weights, grad_bias.size());
  expect_dims(grad_out.dims(), x.dims(), "spectral_filter_backward grad_out");
  const std::size_t h = x.height(), wd = x.width(), plane = h * wd;
  const ComplexTensor w = upsample_weights(weights, h, wd);
  const ComplexTensor spec = fft2(x);
  // y = Re(F^-1 (W ⊙ F x + b)); the DFT matrices are symmetric, so the
  // adjoint path is F(W ⊙ F^-1 gy) and the weight gradient is X ⊙ F^-1 gy.
  const ComplexTensor q = ifft2_complex(ComplexTensor(grad_out));
  ComplexTensor back(x.dims());
  Tensor gw_re({1, x.channels(), h, wd});
  Tensor gw_im({1, x.channels(), h, wd});
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const std::size_t off = spec.offset(n, c, 0, 0);
      const std::size_t woff = w.offset(0, c, 0, 0);
      std::complex<double> qsum{};
      for (std::size_t k = 0; k < plane; ++k) {
        const auto qk = q[off + k];
        const auto prod = spec[off + k] * qk;
        gw_re[woff + k] += prod.real();
        gw_im[woff + k] -= prod.imag();
        back[off + k] = w[woff + k] * qk;
        qsum += qk;
      }
      grad_bias[c] += qsum.real();
    }
  }
  const Dims base = weights.dims();
  const Tensor gre = resize_bilinear_backward(base, gw_re);
  const Tensor gim = resize_bilinear_backward(base, gw_im);
  for (std::size_t i = 0; i < grad_weights.size(); ++i) {
    grad_weights[i] += std::complex<double>(gre[i], gim[i]);
  }
  return fft2(back).real();
}

namespace {

struct SeffState {
  Tensor s, f1, f2, r1, r2, g1, g2, gated;
};

SeffState seff_state(const Tensor& fs, const SeffParams& p) {
  const std::size_t c = p.channels();
  SeffState st;
  st.s = p.split.forward(fs);
  auto halves = split_channels(st.s, c);
  st.f1 = std::move(halves.first);
  st.f2 = std::move(halves.second);
  st.r1 = p.branch1.forward(st.f1);
  st.r2 = p.branch2.forward(st.f2);
  st.g1 = spectral_filter(st.r1, p.w1, p.b1);
  st.g2 = spectral_filter(st.r2, p.w2, p.b2);
  st.gated = hadamard(activation(Activation::silu, st.g2), st.g1);
  return st;
}

}  // namespace

Tensor seff(const Tensor& fs, const SeffParams& p) {
  const SeffState st = seff_state(fs, p);
  return p.merge.forward(st.gated);
}

Tensor seff_backward(const Tensor& fs, const SeffParams& p, const Tensor& grad_out,
                     SeffParams& grad) {
  const SeffState st = seff_state(fs, p);
  const Tensor g_gated = p.merge.backward(st.gated, grad_out, grad.merge);
  const Tensor g_g1 = hadamard(g_gated, activation(Activation::silu, st.g2));
  const Tensor g_g2 = activation_backward(Activation::silu, st.g2, hadamard(g_gated, st.g1));
  const Tensor g_r1 = spectral_filter_backward(st.r1, p.w1, g_g1, grad.w1, grad.b1);
  const Tensor g_r2 = spectral_filter_backward(st.r2, p.w2, g_g2, grad.w2, grad.b2);
  const Tensor g_f1 = p.branch1.backward(st.f1, g_r1, grad.branch1);
  const Tensor g_f2 = p.branch2.backward(st.f2, g_r2, grad.branch2);
  return p.split.backward(fs, concat_channels(g_f1, g_f2), grad.split);
}

// ---------------------------------------------------------------------------
// DAFF, SERR, FTSSA

Tensor daff(const Tensor& x, const DytParams& dyt_p, const TssaParams& tssa_p,
            const MonaParams& mona_p) {
  return mona(x + tssa(dyt(x, dyt_p), tssa_p), mona_p);
}

Tensor daff_backward(const Tensor& x, const DytParams& dyt_p, const TssaParams& tssa_p,
                     const MonaParams& mona_p, const Tensor& grad_out, DytParams& dyt_g,
                     TssaParams& tssa_g, MonaParams& mona_g) {
  const Tensor f = dyt(x, dyt_p);
  const Tensor sum_in = x + tssa(f, tssa_p);
  const Tensor g_sum = mona_backward(sum_in, mona_p, grad_out, mona_g);
  const Tensor g_f = tssa_backward(f, tssa_p, g_sum, tssa_g);
  return g_sum + dyt_backward(x, dyt_p, g_f, dyt_g);
}

Tensor serr(const Tensor& daff_out, const DytParams& dyt_p, const SeffParams& seff_p,
            const MonaParams& mona_p) {
  return mona(daff_out + seff(dyt(daff_out, dyt_p), seff_p), mona_p);
}

Tensor serr_backward(const Tensor& daff_out, const DytParams& dyt_p, const SeffParams& seff_p,
                     const MonaParams& mona_p, const Tensor& grad_out, DytParams& dyt_g,
                     SeffParams& seff_g, MonaParams& mona_g) {
  const Tensor fs = dyt(daff_out, dyt_p);
  const Tensor sum_in = daff_out + seff(fs, seff_p);
  const Tensor g_sum = mona_backward(sum_in, mona_p, grad_out, mona_g);
  const Tensor g_fs = seff_backward(fs, seff_p, g_sum, seff_g);
  return g_sum + dyt_backward(daff_out, dyt_p, g_fs, dyt_g);
}

FtssaParams FtssaParams::init(std::size_t channels, const FtssaShape& shape, Rng& rng) {
  const std::size_t r = shape.reduced(channels);
  FtssaParams p;
  p.dyt1 = DytParams::init(channels);
  p.tssa = TssaParams::init(channels, shape.heads, shape.head_dim, rng);
  p.tssa.pi_mode = shape.pi_mode;
  p.mona1 = MonaParams::init(channels, r, rng);
  p.dyt2 = DytParams::init(channels);
  p.seff = SeffParams::init(channels, shape.seff_base, rng);
  p.mona2 = MonaParams::init(channels, r, rng);
  return p;
}

FtssaParams FtssaParams::zeros(std::size_t channels, const FtssaShape& shape) {
  const std::size_t r = shape.reduced(channels);
  FtssaParams p;
  p.dyt1 = DytParams::init(channels);
  p.tssa = TssaParams::zeros(channels, shape.heads, shape.head_dim);
  p.tssa.pi_mode = shape.pi_mode;
  p.mona1 = MonaParams::zeros(channels, r);
  p.dyt2 = DytParams::init(channels);
  p.seff = SeffParams::zeros(channels, shape.seff_base);
  p.mona2 = MonaParams::zeros(channels, r);
  return zeros_like_params(p);
}

void FtssaParams::visit(std::string_view prefix, const ParamVisitor& f) {
  dyt1.visit(join_name(prefix, "dyt1"), f);
  tssa.visit(join_name(prefix, "tssa"), f);
  mona1.visit(join_name(prefix, "mona1"), f);
  dyt2.visit(join_name(prefix, "dyt2"), f);
  seff.visit(join_name(prefix, "seff"), f);
  mona2.visit(join_name(prefix, "mona2"), f);
}

Tensor ftssa(const Tensor& x, const FtssaParams& p) {
  return serr(daff(x, p.dyt1, p.tssa, p.mona1), p.dyt2, p.seff, p.mona2);
}

Tensor ftssa_backward(const Tensor& x, const FtssaParams& p, const Tensor& grad_out,
                      FtssaParams& grad) {
  const Tensor d = daff(x, p.dyt1, p.tssa, p.mona1);
  const Tensor g_d = serr_backward(d, p.dyt2, p.seff, p.mona2, grad_out, grad.dyt2, grad.seff,
                                   grad.mona2);
  return daff_backward(x, p.dyt1, p.tssa, p.mona1, g_d, grad.dyt1, grad.tssa, grad.mona1);
}

}  // namespace mgdfis
