#include "dpam.hpp"

namespace mgdfis {

DpamParams DpamParams::init(std::size_t channels, Rng& rng) {
  return {ConvLayer::init(ConvSpec::same(2 * channels, channels, 7, 7), rng)};
}

DpamParams DpamParams::zeros(std::size_t channels) {
  return {ConvLayer::zeros(ConvSpec::same(2 * channels, channels, 7, 7))};
}

void DpamParams::visit(std::string_view prefix, const ParamVisitor& f) {
  conv.visit(join_name(prefix, "conv"), f);
}

Tensor dpam(const Tensor& f_agg, const Tensor& f_hat, const DpamParams& p) {
  expect_dims(f_hat.dims(), f_agg.dims(), "dpam f_hat");
  return activation(Activation::sigmoid, p.conv.forward(concat_channels(f_agg, f_hat)));
}

PairGrads dpam_backward(const Tensor& f_agg, const Tensor& f_hat, const DpamParams& p,
                        const Tensor& grad_out, DpamParams& grad) {
  expect_dims(f_hat.dims(), f_agg.dims(), "dpam f_hat");
  const Tensor mix = concat_channels(f_agg, f_hat);
  const Tensor local = p.conv.forward(mix);
  const Tensor g_local = activation_backward(Activation::sigmoid, local, grad_out);
  auto [g_agg, g_hat] = split_channels(p.conv.backward(mix, g_local, grad.conv), f_agg.channels());
  return {std::move(g_agg), std::move(g_hat)};
}

void FusionWeights::visit(std::string_view prefix, const ParamVisitor& f) {
  visit_scalar(prefix, "w_map", w_map, f);
  visit_scalar(prefix, "w_x1", w_x1, f);
  visit_scalar(prefix, "w_x2", w_x2, f);
}

namespace {

Tensor background(const Tensor& x1r, const Tensor& x2r, const FusionWeights& w) {
  Tensor bg(x1r.dims());
  for (std::size_t i = 0; i < bg.size(); ++i) bg[i] = w.w_x1 * x1r[i] + w.w_x2 * x2r[i];
  return bg;
}

}  // namespace

Tensor mgdfis_fuse(const Tensor& amap, const Tensor& f_hat, const Tensor& x1, const Tensor& x2,
                   const FusionWeights& w, const AggregateParams& agg) {
  expect_dims(amap.dims(), f_hat.dims(), "mgdfis_fuse amap");
  const Tensor bg =
      background(reconcile(x1, f_hat.dims(), agg), reconcile(x2, f_hat.dims(), agg), w);
  Tensor out(f_hat.dims());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = w.w_map * (amap[i] * f_hat[i] + (1.0 - amap[i]) * bg[i]);
  }
  return out;
}

FuseGrads mgdfis_fuse_backward(const Tensor& amap, const Tensor& f_hat, const Tensor& x1,
                               const Tensor& x2, const FusionWeights& w,
                               const AggregateParams& agg, const Tensor& grad_out,
                               FusionWeights& w_grad, AggregateParams& agg_grad) {
  expect_dims(amap.dims(), f_hat.dims(), "mgdfis_fuse amap");
  expect_dims(grad_out.dims(), f_hat.dims(), "mgdfis_fuse grad_out");
  const Tensor x1r = reconcile(x1, f_hat.dims(), agg);
  const Tensor x2r = reconcile(x2, f_hat.dims(), agg);
  const Tensor bg = background(x1r, x2r, w);

  FuseGrads g{Tensor(f_hat.dims()), Tensor(f_hat.dims()), {}, {}};
  Tensor g_x1r(f_hat.dims()), g_x2r(f_hat.dims());
  for (std::size_t i = 0; i < f_hat.size(); ++i) {
    const double a = amap[i], gy = grad_out[i];
    const double inner = a * f_hat[i] + (1.0 - a) * bg[i];
    w_grad.w_map += gy * inner;
    const double gi = gy * w.w_map;
    g.amap[i] = gi * (f_hat[i] - bg[i]);
    g.f_hat[i] = gi * a;
    const double g_bg = gi * (1.0 - a);
    w_grad.w_x1 += g_bg * x1r[i];
    w_grad.w_x2 += g_bg * x2r[i];
    g_x1r[i] = g_bg * w.w_x1;
    g_x2r[i] = g_bg * w.w_x2;
  }
  g.x1 = reconcile_backward(x1, f_hat.dims(), agg, g_x1r, agg_grad);
  g.x2 = reconcile_backward(x2, f_hat.dims(), agg, g_x2r, agg_grad);
  return g;
}

// ---------------------------------------------------------------------------

MgdfisParams MgdfisParams::init(const MgdfisShape& shape, Rng& rng) {
  const std::size_t c = shape.f1[1];
  MgdfisParams p;
  p.agg = AggregateParams::init(shape.f1, shape.f2, rng);
  p.gmm = GmmParams::init(c, shape.f1[2], shape.f1[3], shape.groups, rng);
  p.dmm = DmmParams::init(c, shape.ftssa, shape.mlp_ratio, rng);
  p.dpam = DpamParams::init(c, rng);
  return p;
}

void MgdfisParams::visit(std::string_view prefix, const ParamVisitor& f) {
  agg.visit(join_name(prefix, "agg"), f);
  gmm.visit(join_name(prefix, "gmm"), f);
  dmm.visit(join_name(prefix, "dmm"), f);
  dpam.visit(join_name(prefix, "dpam"), f);
  fusion.visit(join_name(prefix, "fusion"), f);
}

Tensor mgdfis(const Tensor& f1, const Tensor& f2, const MgdfisParams& p, const DmmHooks& hooks,
              MgdfisTrace* trace) {
  Tensor f_agg = aggregate(f1, f2, p.agg);
  Tensor f_gmm = gmm(f_agg, p.gmm);
  Tensor f_hat = dmm(f_gmm, p.dmm, hooks);
  Tensor amap = dpam(f_agg, f_hat, p.dpam);
  Tensor out = mgdfis_fuse(amap, f_hat, f1, f2, p.fusion, p.agg);
  if (trace) *trace = {std::move(f_agg), std::move(f_gmm), std::move(f_hat), std::move(amap)};
  return out;
}

PairGrads mgdfis_backward(const Tensor& f1, const Tensor& f2, const MgdfisParams& p,
                          const Tensor& grad_out, MgdfisParams& grad, const DmmHooks& hooks) {
  MgdfisTrace t;
  mgdfis(f1, f2, p, hooks, &t);
  FuseGrads fg = mgdfis_fuse_backward(t.amap, t.f_hat, f1, f2, p.fusion, p.agg, grad_out,
                                      grad.fusion, grad.agg);
  PairGrads dg = dpam_backward(t.f_agg, t.f_hat, p.dpam, fg.amap, grad.dpam);
  fg.f_hat += dg.second;
  const Tensor g_gmm = dmm_backward(t.f_gmm, p.dmm, fg.f_hat, grad.dmm, hooks);
  Tensor g_agg = gmm_backward(t.f_agg, p.gmm, g_gmm, grad.gmm);
  g_agg += dg.first;
  PairGrads ag = aggregate_backward(f1, f2, p.agg, g_agg, grad.agg);
  ag.first += fg.x1;
  ag.second += fg.x2;
  return ag;
}

}  // namespace mgdfis
