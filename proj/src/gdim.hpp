#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "ftssa.hpp"
#include "layers.hpp"
#include "tensor.hpp"

namespace mgdfis {

// ---------------------------------------------------------------------------
// Aggregation of the two input maps

/// Projection used when f2 has to be brought onto f1's dims. Absent when the
/// two inputs already agree.
struct AggregateParams {
  std::optional<ConvLayer> proj;

  static AggregateParams init(const Dims& f1, const Dims& f2, Rng& rng);
  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// Brings x onto `target` (same batch): bilinear resample to the target's
/// spatial size, then the 1×1 projection. Identity when dims already match.
Tensor reconcile(const Tensor& x, const Dims& target, const AggregateParams& p);
Tensor reconcile_backward(const Tensor& x, const Dims& target, const AggregateParams& p,
                          const Tensor& grad_out, AggregateParams& grad);

/// f1 + reconcile(f2, dims(f1)).
Tensor aggregate(const Tensor& f1, const Tensor& f2, const AggregateParams& p);

struct PairGrads {
  Tensor first;
  Tensor second;
};

PairGrads aggregate_backward(const Tensor& f1, const Tensor& f2, const AggregateParams& p,
                             const Tensor& grad_out, AggregateParams& grad);

// ---------------------------------------------------------------------------
// GMM

/// Inference-mode batch norm with fixed running moments; only scale and shift learn.
struct BatchNormParams {
  std::vector<double> scale;
  std::vector<double> shift;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;

  static BatchNormParams init(std::size_t channels);
  void visit(std::string_view prefix, const ParamVisitor& f);
};

Tensor batch_norm(const Tensor& x, const BatchNormParams& p);
Tensor batch_norm_backward(const Tensor& x, const BatchNormParams& p, const Tensor& grad_out,
                           BatchNormParams& grad);

/// Channel group g (of k) becomes width band g: C×H×W → (C/k)×H×(kW).
Tensor regroup_columns(const Tensor& x, std::size_t groups);
Tensor restore_columns(const Tensor& x, std::size_t groups);
/// Channel group g becomes height band g: C×H×W → (C/k)×(kH)×W.
Tensor regroup_rows(const Tensor& x, std::size_t groups);
Tensor restore_rows(const Tensor& x, std::size_t groups);

struct GmmParams {
  std::size_t groups = 2;
  Tensor pos_w;  // 1 × C/k × H × kW, added before the column conv
  Tensor pos_h;  // 1 × C/k × kH × W, added before the row conv
  ConvLayer col_conv;  // 3×3, C/k → C/k
  ConvLayer row_conv;
  BatchNormParams col_bn;
  BatchNormParams row_bn;
  ConvLayer col_fuse;  // 1×1, 2C → C
  ConvLayer row_fuse;

  static GmmParams init(std::size_t channels, std::size_t height, std::size_t width,
                        std::size_t groups, Rng& rng);
  static GmmParams zeros(std::size_t channels, std::size_t height, std::size_t width,
                         std::size_t groups);
  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// Column pass then row pass; the row pass consumes the column pass output.
Tensor gmm(const Tensor& f_agg, const GmmParams& p);
Tensor gmm_backward(const Tensor& f_agg, const GmmParams& p, const Tensor& grad_out,
                    GmmParams& grad);

// ---------------------------------------------------------------------------
// DMM

struct DmmParams {
  ConvLayer dir46;  // 4×6, C → C, same-padded
  ConvLayer dir64;  // 6×4
  FtssaParams ftssa;
  LinearLayer mlp1;  // C → max(C/r, 1)
  LinearLayer mlp2;  // hidden → C

  static DmmParams init(std::size_t channels, const FtssaShape& shape, std::size_t mlp_ratio,
                        Rng& rng);
  static DmmParams zeros(std::size_t channels, const FtssaShape& shape, std::size_t mlp_ratio);
  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// Test and ablation switches for the channel gate.
struct DmmHooks {
  bool bypass_ftssa = false;
  std::optional<double> constant_gate;
};

/// f + conv4x6(f) + conv6x4(f)
Tensor dmm_directional(const Tensor& f_gmm, const DmmParams& p);
Tensor dmm_directional_backward(const Tensor& f_gmm, const DmmParams& p, const Tensor& grad_out,
                                DmmParams& grad);

/// Swish(MLP(GAP(FTSSA(f_add)))) as an N×C×1×1 gate.
Tensor dmm_attention(const Tensor& f_add, const DmmParams& p, const DmmHooks& hooks = {});
Tensor dmm_attention_backward(const Tensor& f_add, const DmmParams& p, const Tensor& grad_out,
                              DmmParams& grad, const DmmHooks& hooks = {});

Tensor dmm(const Tensor& f_gmm, const DmmParams& p, const DmmHooks& hooks = {});
Tensor dmm_backward(const Tensor& f_gmm, const DmmParams& p, const Tensor& grad_out,
                    DmmParams& grad, const DmmHooks& hooks = {});

/// dmm(gmm(aggregate(f1, f2)))
Tensor gdim(const Tensor& f1, const Tensor& f2, const GmmParams& gmm_p, const DmmParams& dmm_p,
            const AggregateParams& agg_p, const DmmHooks& hooks = {});
PairGrads gdim_backward(const Tensor& f1, const Tensor& f2, const GmmParams& gmm_p,
                        const DmmParams& dmm_p, const AggregateParams& agg_p,
                        const Tensor& grad_out, GmmParams& gmm_g, DmmParams& dmm_g,
                        AggregateParams& agg_g, const DmmHooks& hooks = {});

}  // namespace mgdfis
