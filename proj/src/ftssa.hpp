#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "layers.hpp"
#include "tensor.hpp"

namespace mgdfis {

// ---------------------------------------------------------------------------
// DynamicTanh: y = gamma_c * tanh(alpha * x) + beta_c

struct DytParams {
  double alpha = 0.5;
  std::vector<double> gamma;
  std::vector<double> beta;

  static DytParams init(std::size_t channels);
  void visit(std::string_view prefix, const ParamVisitor& f);
};

Tensor dyt(const Tensor& x, const DytParams& p);
Tensor dyt_backward(const Tensor& x, const DytParams& p, const Tensor& grad_out, DytParams& grad);

// ---------------------------------------------------------------------------
// Token-statistics self-attention

/// What multiplies the attention output: the constant pi, or the per-token head
/// distribution Pi.
enum class PiMode { constant, distribution };

struct TssaParams {
  static constexpr double kEps = 1e-8;

  std::size_t heads = 1;
  std::size_t head_dim = 1;
  Tensor qkv;        // 1 × 1 × C × (heads·head_dim), no bias
  LinearLayer out;   // heads·head_dim → C
  PiMode pi_mode = PiMode::constant;

  static TssaParams init(std::size_t channels, std::size_t heads, std::size_t head_dim, Rng& rng);
  static TssaParams zeros(std::size_t channels, std::size_t heads, std::size_t head_dim);
  std::size_t channels() const { return qkv.height(); }
  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// Intermediate statistics of one tssa call, for inspection.
struct TssaTrace {
  Tensor pi;    // B × heads × N × 1, softmax over heads
  Tensor dots;  // B × heads × 1 × D
  Tensor attn;  // B × heads × 1 × D
};

/// A B×C×H×W map is read as B sequences of H·W tokens (row-major) with C
/// features; the result is restored to the same layout.
Tensor tssa(const Tensor& f, const TssaParams& p, TssaTrace* trace = nullptr);
Tensor tssa_backward(const Tensor& f, const TssaParams& p, const Tensor& grad_out,
                     TssaParams& grad);

// ---------------------------------------------------------------------------
// Mona adapter

struct MonaParams {
  ConvLayer down;        // 1×1, C → C_r
  ConvLayer dw3;         // depthwise at C_r
  ConvLayer dw5;
  ConvLayer dw7;
  ConvLayer mix;         // 1×1, C_r → C_r
  ConvLayer up;          // 1×1, C_r → C
  ConvLayer xmona_proj;  // 1×1, C → C
  double xmona_scale = 1e-6;

  static MonaParams init(std::size_t channels, std::size_t reduced, Rng& rng);
  static MonaParams zeros(std::size_t channels, std::size_t reduced);
  std::size_t channels() const { return down.spec.in_channels; }
  std::size_t reduced() const { return down.spec.out_channels; }
  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// z + mix((dw3(z) + dw5(z) + dw7(z)) / 3 + z), with z at the reduced width.
Tensor mona_op(const Tensor& z, const MonaParams& p);
Tensor mona_op_backward(const Tensor& z, const MonaParams& p, const Tensor& grad_out,
                        MonaParams& grad);

/// Learnable-scale linear skip: scale · proj(x).
Tensor xmona(const Tensor& x, const MonaParams& p);
Tensor xmona_backward(const Tensor& x, const MonaParams& p, const Tensor& grad_out,
                      MonaParams& grad);

/// xmona(x) + up(GELU(mona_op(down(x)))).
Tensor mona(const Tensor& x, const MonaParams& p);
Tensor mona_backward(const Tensor& x, const MonaParams& p, const Tensor& grad_out,
                     MonaParams& grad);

// ---------------------------------------------------------------------------
// Spectral enhanced feed-forward

struct SeffParams {
  ConvLayer split;    // 1×1, C → 2C
  ConvLayer branch1;  // depthwise 3×3
  ConvLayer branch2;  // depthwise 3×3, dilation 2
  ConvLayer merge;    // 1×1, C → C
  ComplexTensor w1;   // 1 × C × base × base frequency weights
  ComplexTensor w2;
  std::vector<double> b1;  // per-channel, added to the real part of every bin
  std::vector<double> b2;

  static SeffParams init(std::size_t channels, std::size_t base, Rng& rng);
  static SeffParams zeros(std::size_t channels, std::size_t base);
  std::size_t channels() const { return merge.spec.out_channels; }
  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// Re(ifft2(W↑ ⊙ fft2(x) + b)), with W↑ the base weights bilinearly resampled
/// (real and imaginary parts separately) to x's spatial size.
Tensor spectral_filter(const Tensor& x, const ComplexTensor& weights, std::span<const double> bias);
Tensor spectral_filter_backward(const Tensor& x, const ComplexTensor& weights,
                                const Tensor& grad_out, ComplexTensor& grad_weights,
                                std::vector<double>& grad_bias);

Tensor seff(const Tensor& fs, const SeffParams& p);
Tensor seff_backward(const Tensor& fs, const SeffParams& p, const Tensor& grad_out,
                     SeffParams& grad);

// ---------------------------------------------------------------------------
// FTSSA = SERR ∘ DAFF

/// mona(x + tssa(dyt(x)))
Tensor daff(const Tensor& x, const DytParams& dyt_p, const TssaParams& tssa_p,
            const MonaParams& mona_p);
Tensor daff_backward(const Tensor& x, const DytParams& dyt_p, const TssaParams& tssa_p,
                     const MonaParams& mona_p, const Tensor& grad_out, DytParams& dyt_g,
                     TssaParams& tssa_g, MonaParams& mona_g);

/// mona(d + seff(dyt(d)))
Tensor serr(const Tensor& daff_out, const DytParams& dyt_p, const SeffParams& seff_p,
            const MonaParams& mona_p);
Tensor serr_backward(const Tensor& daff_out, const DytParams& dyt_p, const SeffParams& seff_p,
                     const MonaParams& mona_p, const Tensor& grad_out, DytParams& dyt_g,
                     SeffParams& seff_g, MonaParams& mona_g);

struct FtssaShape {
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  std::size_t mona_ratio = 4;
  std::size_t seff_base = 8;
  PiMode pi_mode = PiMode::constant;

  std::size_t reduced(std::size_t channels) const {
    return std::max<std::size_t>(channels / mona_ratio, 1);
  }
};

/// Two independent DyT/Mona sets, one per stage.
struct FtssaParams {
  DytParams dyt1;
  TssaParams tssa;
  MonaParams mona1;
  DytParams dyt2;
  SeffParams seff;
  MonaParams mona2;

  static FtssaParams init(std::size_t channels, const FtssaShape& shape, Rng& rng);
  static FtssaParams zeros(std::size_t channels, const FtssaShape& shape);
  void visit(std::string_view prefix, const ParamVisitor& f);
};

Tensor ftssa(const Tensor& x, const FtssaParams& p);
Tensor ftssa_backward(const Tensor& x, const FtssaParams& p, const Tensor& grad_out,
                      FtssaParams& grad);

}  // namespace mgdfis
