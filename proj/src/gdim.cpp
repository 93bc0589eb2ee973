#include "gdim.hpp"

#include <cmath>
#include <string>

namespace mgdfis {

// ---------------------------------------------------------------------------
// Aggregation

AggregateParams AggregateParams::init(const Dims& f1, const Dims& f2, Rng& rng) {
  AggregateParams p;
  if (f1 != f2) p.proj = ConvLayer::init(ConvSpec::pointwise(f2[1], f1[1]), rng);
  return p;
}

void AggregateParams::visit(std::string_view prefix, const ParamVisitor& f) {
  if (proj) proj->visit(join_name(prefix, "proj"), f);
}

namespace {

bool needs_resize(const Dims& x, const Dims& target) {
  return x[2] != target[2] || x[3] != target[3];
}

void check_reconcile(const Dims& x, const Dims& target, const AggregateParams& p) {
  if (x[0] != target[0]) {
    throw ShapeError("batch", "cannot reconcile " + to_string(x) + " onto " + to_string(target));
  }
  if (x == target) return;
  if (p.proj) {
    if (p.proj->spec.in_channels != x[1] || p.proj->spec.out_channels != target[1]) {
      throw ShapeError("channels", "aggregate projection maps " +
                                       std::to_string(p.proj->spec.in_channels) + " -> " +
                                       std::to_string(p.proj->spec.out_channels) +
                                       " channels, need " + std::to_string(x[1]) + " -> " +
                                       std::to_string(target[1]));
    }
  } else if (x[1] != target[1]) {
    throw ShapeError("channels", "channel counts differ (" + to_string(x) + " vs " +
                                     to_string(target) + ") and no projection is configured");
  }
}

}  // namespace

Tensor reconcile(const Tensor& x, const Dims& target, const AggregateParams& p) {
  check_reconcile(x.dims(), target, p);
  if (x.dims() == target) return x;
  Tensor y = needs_resize(x.dims(), target) ? resize_bilinear(x, target[2], target[3]) : x;
  return p.proj ? p.proj->forward(y) : y;
}

Tensor reconcile_backward(const Tensor& x, const Dims& target, const AggregateParams& p,
                          const Tensor& grad_out, AggregateParams& grad) {
  check_reconcile(x.dims(), target, p);
  expect_dims(grad_out.dims(), target, "reconcile_backward grad_out");
  if (x.dims() == target) return grad_out;
  const bool resize = needs_resize(x.dims(), target);
  const Tensor y = resize ? resize_bilinear(x, target[2], target[3]) : x;
  const Tensor gy = p.proj ? p.proj->backward(y, grad_out, *grad.proj) : grad_out;
  return resize ? resize_bilinear_backward(x.dims(), gy) : gy;
}

Tensor aggregate(const Tensor& f1, const Tensor& f2, const AggregateParams& p) {
  return f1 + reconcile(f2, f1.dims(), p);
}

PairGrads aggregate_backward(const Tensor& f1, const Tensor& f2, const AggregateParams& p,
                             const Tensor& grad_out, AggregateParams& grad) {
  return {grad_out, reconcile_backward(f2, f1.dims(), p, grad_out, grad)};
}

// ---------------------------------------------------------------------------
// Batch norm

BatchNormParams BatchNormParams::init(std::size_t channels) {
  return {std::vector<double>(channels, 1.0), std::vector<double>(channels, 0.0),
          std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0), 1e-5};
}

void BatchNormParams::visit(std::string_view prefix, const ParamVisitor& f) {
  visit_vector(prefix, "scale", scale, f);
  visit_vector(prefix, "shift", shift, f);
}

namespace {

void check_bn(const Tensor& x, const BatchNormParams& p) {
  const std::size_t c = x.channels();
  if (p.scale.size() != c || p.shift.size() != c || p.running_mean.size() != c ||
      p.running_var.size() != c) {
    throw ShapeError("channels", "batch_norm parameter length mismatch");
  }
}

}  // namespace

Tensor batch_norm(const Tensor& x, const BatchNormParams& p) {
  check_bn(x, p);
  Tensor y(x.dims());
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const double inv = 1.0 / std::sqrt(p.running_var[c] + p.eps);
      const auto src = x.plane(n, c);
      auto dst = y.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = (src[i] - p.running_mean[c]) * inv * p.scale[c] + p.shift[c];
      }
    }
  }
  return y;
}

Tensor batch_norm_backward(const Tensor& x, const BatchNormParams& p, const Tensor& grad_out,
                           BatchNormParams& grad) {
  check_bn(x, p);
  expect_dims(grad_out.dims(), x.dims(), "batch_norm_backward grad_out");
  Tensor gx(x.dims());
  for (std::size_t n = 0; n < x.batch(); ++n) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const double inv = 1.0 / std::sqrt(p.running_var[c] + p.eps);
      const auto src = x.plane(n, c);
      const auto gy = grad_out.plane(n, c);
      auto g = gx.plane(n, c);
      double g_scale = 0.0, g_shift = 0.0;
      for (std::size_t i = 0; i < src.size(); ++i) {
        g[i] = gy[i] * inv * p.scale[c];
        g_scale += gy[i] * (src[i] - p.running_mean[c]) * inv;
        g_shift += gy[i];
      }
      grad.scale[c] += g_scale;
      grad.shift[c] += g_shift;
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Regrouping

namespace {

void check_groups(std::size_t channels, std::size_t groups) {
  if (groups == 0 || channels % groups != 0) {
    throw ConfigError("gmm: group count " + std::to_string(groups) + " must divide " +
                      std::to_string(channels) + " channels");
  }
}

}  // namespace

Tensor regroup_columns(const Tensor& x, std::size_t groups) {
  check_groups(x.channels(), groups);
  const std::size_t cg = x.channels() / groups, h = x.height(), w = x.width();
  Tensor out({x.batch(), cg, h, groups * w});
  for (std::size_t n = 0; n < x.batch(); ++n)
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t c = 0; c < cg; ++c)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) out(n, c, i, g * w + j) = x(n, g * cg + c, i, j);
  return out;
}

Tensor restore_columns(const Tensor& x, std::size_t groups) {
  if (groups == 0 || x.width() % groups != 0) {
    throw ShapeError("width", "restore_columns: width not divisible by group count");
  }
  const std::size_t cg = x.channels(), h = x.height(), w = x.width() / groups;
  Tensor out({x.batch(), cg * groups, h, w});
  for (std::size_t n = 0; n < x.batch(); ++n)
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t c = 0; c < cg; ++c)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) out(n, g * cg + c, i, j) = x(n, c, i, g * w + j);
  return out;
}

Tensor regroup_rows(const Tensor& x, std::size_t groups) {
  check_groups(x.channels(), groups);
  const std::size_t cg = x.channels() / groups, h = x.height(), w = x.width();
  Tensor out({x.batch(), cg, groups * h, w});
  for (std::size_t n = 0; n < x.batch(); ++n)
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t c = 0; c < cg; ++c)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) out(n, c, g * h + i, j) = x(n, g * cg + c, i, j);
  return out;
}

Tensor restore_rows(const Tensor& x, std::size_t groups) {
  if (groups == 0 || x.height() % groups != 0) {
    throw ShapeError("height", "restore_rows: height not divisible by group count");
  }
  const std::size_t cg = x.channels(), h = x.height() / groups, w = x.width();
  Tensor out({x.batch(), cg * groups, h, w});
  for (std::size_t n = 0; n < x.batch(); ++n)
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t c = 0; c < cg; ++c)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) out(n, g * cg + c, i, j) = x(n, c, g * h + i, j);
  return out;
}

// ---------------------------------------------------------------------------
// GMM

GmmParams GmmParams::zeros(std::size_t channels, std::size_t height, std::size_t width,
                           std::size_t groups) {
  check_groups(channels, groups);
  const std::size_t cg = channels / groups;
  GmmParams p;
  p.groups = groups;
  p.pos_w = Tensor({1, cg, height, groups * width});
  p.pos_h = Tensor({1, cg, groups * height, width});
  p.col_conv = ConvLayer::zeros(ConvSpec::same(cg, cg, 3, 3));
  p.row_conv = ConvLayer::zeros(ConvSpec::same(cg, cg, 3, 3));
  p.col_bn = BatchNormParams::init(channels);
  p.row_bn = BatchNormParams::init(channels);
  p.col_fuse = ConvLayer::zeros(ConvSpec::pointwise(2 * channels, channels));
  p.row_fuse = ConvLayer::zeros(ConvSpec::pointwise(2 * channels, channels));
  return p;
}

GmmParams GmmParams::init(std::size_t channels, std::size_t height, std::size_t width,
                          std::size_t groups, Rng& rng) {
  GmmParams p = zeros(channels, height, width, groups);
  const std::size_t cg = channels / groups;
  p.col_conv = ConvLayer::init(ConvSpec::same(cg, cg, 3, 3), rng);
  p.col_fuse = ConvLayer::init(ConvSpec::pointwise(2 * channels, channels), rng);
  p.row_conv = ConvLayer::init(ConvSpec::same(cg, cg, 3, 3), rng);
  p.row_fuse = ConvLayer::init(ConvSpec::pointwise(2 * channels, channels), rng);
  return p;
}

void GmmParams::visit(std::string_view prefix, const ParamVisitor& f) {
  visit_tensor(prefix, "pos_w", pos_w, f);
  col_conv.visit(join_name(prefix, "col_conv"), f);
  col_bn.visit(join_name(prefix, "col_bn"), f);
  col_fuse.visit(join_name(prefix, "col_fuse"), f);
  visit_tensor(prefix, "pos_h", pos_h, f);
  row_conv.visit(join_name(prefix, "row_conv"), f);
  row_bn.visit(join_name(prefix, "row_bn"), f);
  row_fuse.visit(join_name(prefix, "row_fuse"), f);
}

namespace {

enum class Axis { columns, rows };

struct PassRefs {
  const Tensor& pos;
  const ConvLayer& conv;
  const BatchNormParams& bn;
  const ConvLayer& fuse;
};

struct PassGrads {
  Tensor& pos;
  ConvLayer& conv;
  BatchNormParams& bn;
  ConvLayer& fuse;
};

Tensor regroup(const Tensor& x, std::size_t k, Axis axis) {
  return axis == Axis::columns ? regroup_columns(x, k) : regroup_rows(x, k);
}

Tensor restore(const Tensor& x, std::size_t k, Axis axis) {
  return axis == Axis::columns ? restore_columns(x, k) : restore_rows(x, k);
}

Tensor add_broadcast_batch(const Tensor& x, const Tensor& pos, const char* what) {
  expect_dims(pos.dims(), {1, x.channels(), x.height(), x.width()}, what);
  Tensor y = x;
  const std::size_t per = pos.size();
  for (std::size_t n = 0; n < x.batch(); ++n) {
    double* dst = y.raw() + n * per;
    for (std::size_t i = 0; i < per; ++i) dst[i] += pos[i];
  }
  return y;
}

struct PassState {
  Tensor regrouped;  // with position embedding
  Tensor conv_out;
  Tensor restored;
  Tensor normed;
  Tensor concat;
};

PassState pass_state(const Tensor& x, std::size_t k, Axis axis, const PassRefs& p) {
  PassState s;
  s.regrouped = add_broadcast_batch(regroup(x, k, axis), p.pos,
                                    axis == Axis::columns ? "gmm pos_w" : "gmm pos_h");
  s.conv_out = p.conv.forward(s.regrouped);
  s.restored = restore(s.conv_out, k, axis);
  s.normed = batch_norm(s.restored, p.bn);
  s.concat = concat_channels(x, activation(Activation::gelu, s.normed));
  return s;
}

Tensor pass_forward(const Tensor& x, std::size_t k, Axis axis, const PassRefs& p) {
  return p.fuse.forward(pass_state(x, k, axis, p).concat);
}

Tensor pass_backward(const Tensor& x, std::size_t k, Axis axis, const PassRefs& p,
                     const Tensor& grad_out, const PassGrads& g) {
  const PassState s = pass_state(x, k, axis, p);
  const Tensor g_cat = p.fuse.backward(s.concat, grad_out, g.fuse);
  auto [g_direct, g_act] = split_channels(g_cat, x.channels());
  const Tensor g_norm = activation_backward(Activation::gelu, s.normed, g_act);
  const Tensor g_restored = batch_norm_backward(s.restored, p.bn, g_norm, g.bn);
  // restore is a permutation; its adjoint is the matching regroup.
  const Tensor g_conv = regroup(g_restored, k, axis);
  const Tensor g_reg = p.conv.backward(s.regrouped, g_conv, g.conv);
  const std::size_t per = g.pos.size();
  for (std::size_t n = 0; n < g_reg.batch(); ++n) {
    const double* src = g_reg.raw() + n * per;
    for (std::size_t i = 0; i < per; ++i) g.pos[i] += src[i];
  }
  g_direct += restore(g_reg, k, axis);
  return g_direct;
}

}  // namespace

Tensor gmm(const Tensor& f_agg, const GmmParams& p) {
  check_groups(f_agg.channels(), p.groups);
  const Tensor col = pass_forward(f_agg, p.groups, Axis::columns,
                                  {p.pos_w, p.col_conv, p.col_bn, p.col_fuse});
  return pass_forward(col, p.groups, Axis::rows, {p.pos_h, p.row_conv, p.row_bn, p.row_fuse});
}

Tensor gmm_backward(const Tensor& f_agg, const GmmParams& p, const Tensor& grad_out,
                    GmmParams& grad) {
  check_groups(f_agg.channels(), p.groups);
  const PassRefs col_refs{p.pos_w, p.col_conv, p.col_bn, p.col_fuse};
  const PassRefs row_refs{p.pos_h, p.row_conv, p.row_bn, p.row_fuse};
  const Tensor col = pass_forward(f_agg, p.groups, Axis::columns, col_refs);
  const Tensor g_col = pass_backward(col, p.groups, Axis::rows, row_refs, grad_out,
                                     {grad.pos_h, grad.row_conv, grad.row_bn, grad.row_fuse});
  return pass_backward(f_agg, p.groups, Axis::columns, col_refs, g_col,
                       {grad.pos_w, grad.col_conv, grad.col_bn, grad.col_fuse});
}

// ---------------------------------------------------------------------------
// DMM

namespace {

std::size_t mlp_hidden(std::size_t channels, std::size_t ratio) {
  if (ratio == 0) throw ConfigError("dmm: mlp_ratio must be >= 1");
  return std::max<std::size_t>(channels / ratio, 1);
}

}  // namespace

DmmParams DmmParams::init(std::size_t channels, const FtssaShape& shape, std::size_t mlp_ratio,
                          Rng& rng) {
  const std::size_t hidden = mlp_hidden(channels, mlp_ratio);
  DmmParams p;
  p.dir46 = ConvLayer::init(ConvSpec::same(channels, channels, 4, 6), rng);
  p.dir64 = ConvLayer::init(ConvSpec::same(channels, channels, 6, 4), rng);
  p.ftssa = FtssaParams::init(channels, shape, rng);
  p.mlp1 = LinearLayer::init(channels, hidden, rng);
  p.mlp2 = LinearLayer::init(hidden, channels, rng);
  return p;
}

DmmParams DmmParams::zeros(std::size_t channels, const FtssaShape& shape, std::size_t mlp_ratio) {
  const std::size_t hidden = mlp_hidden(channels, mlp_ratio);
  DmmParams p;
  p.dir46 = ConvLayer::zeros(ConvSpec::same(channels, channels, 4, 6));
  p.dir64 = ConvLayer::zeros(ConvSpec::same(channels, channels, 6, 4));
  p.ftssa = FtssaParams::zeros(channels, shape);
  p.mlp1 = LinearLayer::zeros(channels, hidden);
  p.mlp2 = LinearLayer::zeros(hidden, channels);
  return p;
}

void DmmParams::visit(std::string_view prefix, const ParamVisitor& f) {
  dir46.visit(join_name(prefix, "dir46"), f);
  dir64.visit(join_name(prefix, "dir64"), f);
  ftssa.visit(join_name(prefix, "ftssa"), f);
  mlp1.visit(join_name(prefix, "mlp1"), f);
  mlp2.visit(join_name(prefix, "mlp2"), f);
}

Tensor dmm_directional(const Tensor& f_gmm, const DmmParams& p) {
  Tensor out = f_gmm;
  out += p.dir46.forward(f_gmm);
  out += p.dir64.forward(f_gmm);
  return out;
}

Tensor dmm_directional_backward(const Tensor& f_gmm, const DmmParams& p, const Tensor& grad_out,
                                DmmParams& grad) {
  Tensor gx = grad_out;
  gx += p.dir46.backward(f_gmm, grad_out, grad.dir46);
  gx += p.dir64.backward(f_gmm, grad_out, grad.dir64);
  return gx;
}

namespace {

// N×C×1×1 and 1×1×N×C share a layout; the MLP runs on the latter.
Tensor as_rows(const Tensor& pooled) {
  return Tensor({1, 1, pooled.batch(), pooled.channels()},
                std::vector<double>(pooled.data().begin(), pooled.data().end()));
}

Tensor as_gate(const Tensor& rows) {
  return Tensor({rows.height(), rows.width(), 1, 1},
                std::vector<double>(rows.data().begin(), rows.data().end()));
}

struct GateState {
  Tensor refined;
  Tensor pooled;  // rows
  Tensor hidden_pre;
  Tensor hidden;
  Tensor logits;
};

GateState gate_state(const Tensor& f_add, const DmmParams& p, const DmmHooks& hooks) {
  GateState s;
  s.refined = hooks.bypass_ftssa ? f_add : ftssa(f_add, p.ftssa);
  s.pooled = as_rows(global_avg_pool(s.refined));
  s.hidden_pre = p.mlp1.forward(s.pooled);
  s.hidden = activation(Activation::gelu, s.hidden_pre);
  s.logits = p.mlp2.forward(s.hidden);
  return s;
}

}  // namespace

Tensor dmm_attention(const Tensor& f_add, const DmmParams& p, const DmmHooks& hooks) {
  if (hooks.constant_gate) return Tensor({f_add.batch(), f_add.channels(), 1, 1}, *hooks.constant_gate);
  const GateState s = gate_state(f_add, p, hooks);
  return as_gate(activation(Activation::silu, s.logits));
}

Tensor dmm_attention_backward(const Tensor& f_add, const DmmParams& p, const Tensor& grad_out,
                              DmmParams& grad, const DmmHooks& hooks) {
  if (hooks.constant_gate) return Tensor(f_add.dims());
  const GateState s = gate_state(f_add, p, hooks);
  const Tensor g_logits = activation_backward(Activation::silu, s.logits, as_rows(grad_out));
  const Tensor g_hidden = p.mlp2.backward(s.hidden, g_logits, grad.mlp2);
  const Tensor g_pre = activation_backward(Activation::gelu, s.hidden_pre, g_hidden);
  const Tensor g_pooled = p.mlp1.backward(s.pooled, g_pre, grad.mlp1);
  const Tensor g_refined = global_avg_pool_backward(f_add.dims(), as_gate(g_pooled));
  if (hooks.bypass_ftssa) return g_refined;
  return ftssa_backward(f_add, p.ftssa, g_refined, grad.ftssa);
}

Tensor dmm(const Tensor& f_gmm, const DmmParams& p, const DmmHooks& hooks) {
  const Tensor f_add = dmm_directional(f_gmm, p);
  return scale_channels(f_add, dmm_attention(f_add, p, hooks));
}

Tensor dmm_backward(const Tensor& f_gmm, const DmmParams& p, const Tensor& grad_out,
                    DmmParams& grad, const DmmHooks& hooks) {
  const Tensor f_add = dmm_directional(f_gmm, p);
  const Tensor gate = dmm_attention(f_add, p, hooks);
  // out[n,c,i] = f_add[n,c,i] * gate[n,c]
  Tensor g_add = scale_channels(grad_out, gate);
  Tensor g_gate({f_add.batch(), f_add.channels(), 1, 1});
  for (std::size_t n = 0; n < f_add.batch(); ++n) {
    for (std::size_t c = 0; c < f_add.channels(); ++c) {
      const auto a = f_add.plane(n, c);
      const auto g = grad_out.plane(n, c);
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * g[i];
      g_gate(n, c, 0, 0) = s;
    }
  }
  g_add += dmm_attention_backward(f_add, p, g_gate, grad, hooks);
  return dmm_directional_backward(f_gmm, p, g_add, grad);
}

Tensor gdim(const Tensor& f1, const Tensor& f2, const GmmParams& gmm_p, const DmmParams& dmm_p,
            const AggregateParams& agg_p, const DmmHooks& hooks) {
  return dmm(gmm(aggregate(f1, f2, agg_p), gmm_p), dmm_p, hooks);
}

PairGrads gdim_backward(const Tensor& f1, const Tensor& f2, const GmmParams& gmm_p,
                        const DmmParams& dmm_p, const AggregateParams& agg_p,
                        const Tensor& grad_out, GmmParams& gmm_g, DmmParams& dmm_g,
                        AggregateParams& agg_g, const DmmHooks& hooks) {
  const Tensor f_agg = aggregate(f1, f2, agg_p);
  const Tensor f_gmm = gmm(f_agg, gmm_p);
  const Tensor g_gmm = dmm_backward(f_gmm, dmm_p, grad_out, dmm_g, hooks);
  const Tensor g_agg = gmm_backward(f_agg, gmm_p, g_gmm, gmm_g);
  return aggregate_backward(f1, f2, agg_p, g_agg, agg_g);
}

}  // namespace mgdfis
