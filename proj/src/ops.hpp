#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace mgdfis {

/// 2-D convolution geometry. Weights are laid out (out, in/groups, kh, kw).
struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_top = 0;
  std::size_t pad_bottom = 0;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
  std::size_t dilation_h = 1;
  std::size_t dilation_w = 1;
  std::size_t groups = 1;

  /// Stride-1 convolution whose output keeps the input's spatial size. Even
  /// extents put the extra row/column of padding at the bottom/right.
  static ConvSpec same(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw,
                       std::size_t dilation = 1, std::size_t groups = 1);
  static ConvSpec pointwise(std::size_t in, std::size_t out) { return same(in, out, 1, 1); }
  static ConvSpec depthwise(std::size_t channels, std::size_t k, std::size_t dilation = 1) {
    return same(channels, channels, k, k, dilation, channels);
  }

  /// Throws ConfigError on zero extents or groups that do not divide the channels.
  void validate() const;
  Dims weight_dims() const;
  std::size_t fan_in() const { return (in_channels / groups) * kernel_h * kernel_w; }
  std::size_t out_height(std::size_t h) const;
  std::size_t out_width(std::size_t w) const;
  Dims output_dims(const Dims& input) const;
};

/// Direct-loop reference convolution. `bias` may be empty.
Tensor conv2d(const Tensor& x, const Tensor& weights, std::span<const double> bias,
              const ConvSpec& spec);

/// Same contract as conv2d, lowered to im2col + matrix multiply.
Tensor conv2d_im2col(const Tensor& x, const Tensor& weights, std::span<const double> bias,
                     const ConvSpec& spec);

struct ConvGrads {
  Tensor input;
  Tensor weights;
  std::vector<double> bias;
};

ConvGrads conv2d_backward(const Tensor& x, const Tensor& weights, const ConvSpec& spec,
                          const Tensor& grad_out);

/// Row-wise x·W + b over the width axis: x is (N, C, H, in), W is (1, 1, in, out).
Tensor linear(const Tensor& x, const Tensor& weights, std::span<const double> bias);

struct LinearGrads {
  Tensor input;
  Tensor weights;
  std::vector<double> bias;
};

LinearGrads linear_backward(const Tensor& x, const Tensor& weights, const Tensor& grad_out);

/// Max-subtracted softmax along `axis` (0..3).
Tensor softmax(const Tensor& x, std::size_t axis);
/// Takes the softmax output `y`, not its input.
Tensor softmax_backward(const Tensor& y, std::size_t axis, const Tensor& grad_out);

enum class Activation { tanh, gelu, silu, sigmoid };

double activate(Activation kind, double x);
double activate_derivative(Activation kind, double x);
Tensor activation(Activation kind, const Tensor& x);
Tensor activation_backward(Activation kind, const Tensor& x, const Tensor& grad_out);

/// Mean over H×W per (batch, channel); result is N×C×1×1.
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Dims& input_dims, const Tensor& grad_out);

/// Half-pixel bilinear resampling of every plane to out_h × out_w.
Tensor resize_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w);
Tensor resize_bilinear_backward(const Dims& input_dims, const Tensor& grad_out);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits off the first `first` channels.
std::pair<Tensor, Tensor> split_channels(const Tensor& x, std::size_t first);

/// Broadcast product of x (N,C,H,W) with a per-channel gate (N,C,1,1).
Tensor scale_channels(const Tensor& x, const Tensor& gate);

}  // namespace mgdfis
