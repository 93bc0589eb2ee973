#pragma once

#include <cstddef>
#include <string_view>

#include "gdim.hpp"
#include "layers.hpp"
#include "tensor.hpp"

namespace mgdfis {

struct DpamParams {
  ConvLayer conv;  // 7×7, 2C → C, pad 3

  static DpamParams init(std::size_t channels, Rng& rng);
  static DpamParams zeros(std::size_t channels);
  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// sigmoid(conv7x7(concat(f_agg, f_hat))); every element lies in (0, 1).
Tensor dpam(const Tensor& f_agg, const Tensor& f_hat, const DpamParams& p);
PairGrads dpam_backward(const Tensor& f_agg, const Tensor& f_hat, const DpamParams& p,
                        const Tensor& grad_out, DpamParams& grad);

struct FusionWeights {
  double w_map = 1.0;
  double w_x1 = 0.5;
  double w_x2 = 0.5;

  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// w_map · (amap ⊙ f_hat + (1 − amap) ⊙ (w_x1·x1' + w_x2·x2')), where x1' and x2'
/// are x1 and x2 reconciled onto f_hat's dims with `agg`.
Tensor mgdfis_fuse(const Tensor& amap, const Tensor& f_hat, const Tensor& x1, const Tensor& x2,
                   const FusionWeights& w, const AggregateParams& agg);

struct FuseGrads {
  Tensor amap;
  Tensor f_hat;
  Tensor x1;
  Tensor x2;
};

FuseGrads mgdfis_fuse_backward(const Tensor& amap, const Tensor& f_hat, const Tensor& x1,
                               const Tensor& x2, const FusionWeights& w,
                               const AggregateParams& agg, const Tensor& grad_out,
                               FusionWeights& w_grad, AggregateParams& agg_grad);

// ---------------------------------------------------------------------------
// End-to-end pipeline

struct MgdfisShape {
  Dims f1{1, 64, 80, 80};
  Dims f2{1, 64, 40, 40};
  std::size_t groups = 2;
  std::size_t mlp_ratio = 4;
  FtssaShape ftssa;
};

struct MgdfisParams {
  AggregateParams agg;
  GmmParams gmm;
  DmmParams dmm;
  DpamParams dpam;
  FusionWeights fusion;

  /// Draws every weight tensor from `rng` in the order agg, gmm, dmm, dpam.
  static MgdfisParams init(const MgdfisShape& shape, Rng& rng);
  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// Intermediate maps of one pipeline call.
struct MgdfisTrace {
  Tensor f_agg;
  Tensor f_gmm;
  Tensor f_hat;
  Tensor amap;
};

Tensor mgdfis(const Tensor& f1, const Tensor& f2, const MgdfisParams& p,
              const DmmHooks& hooks = {}, MgdfisTrace* trace = nullptr);
PairGrads mgdfis_backward(const Tensor& f1, const Tensor& f2, const MgdfisParams& p,
                          const Tensor& grad_out, MgdfisParams& grad, const DmmHooks& hooks = {});

}  // namespace mgdfis
