#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ops.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace mgdfis {

/// A named, mutable window onto one learnable parameter.
struct ParamView {
  std::string name;
  std::span<double> values;     // interleaved (re, im) when `complex`
  std::vector<std::size_t> shape;
  bool complex = false;
};

using ParamVisitor = std::function<void(const ParamView&)>;

std::string join_name(std::string_view prefix, std::string_view name);

/// Returns a copy of `params` with every learnable value set to zero. Works for
/// any parameter record with a `visit(prefix, visitor)` member.
template <class P>
P zeros_like_params(const P& params) {
  P out = params;
  out.visit("", [](const ParamView& v) {
    for (double& x : v.values) x = 0.0;
  });
  return out;
}

/// Fills a tensor with U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void fill_uniform_fan_in(std::span<double> values, std::size_t fan_in, Rng& rng);

struct ConvLayer {
  ConvSpec spec;
  Tensor weight;
  std::vector<double> bias;

  static ConvLayer init(const ConvSpec& spec, Rng& rng);
  static ConvLayer zeros(const ConvSpec& spec);
  /// 1×1 layer with W[o][i] = (o == i) and zero bias.
  static ConvLayer identity(std::size_t in, std::size_t out);

  Tensor forward(const Tensor& x) const { return conv2d(x, weight, bias, spec); }
  /// Accumulates parameter gradients into `grad`; returns the input gradient.
  Tensor backward(const Tensor& x, const Tensor& grad_out, ConvLayer& grad) const;
  void visit(std::string_view prefix, const ParamVisitor& f);
};

struct LinearLayer {
  Tensor weight;  // 1 × 1 × in × out
  std::vector<double> bias;

  static LinearLayer init(std::size_t in, std::size_t out, Rng& rng);
  static LinearLayer zeros(std::size_t in, std::size_t out);

  std::size_t in_features() const { return weight.height(); }
  std::size_t out_features() const { return weight.width(); }
  Tensor forward(const Tensor& x) const { return linear(x, weight, bias); }
  Tensor backward(const Tensor& x, const Tensor& grad_out, LinearLayer& grad) const;
  void visit(std::string_view prefix, const ParamVisitor& f);
};

void visit_scalar(std::string_view prefix, std::string_view name, double& value,
                  const ParamVisitor& f);
void visit_vector(std::string_view prefix, std::string_view name, std::vector<double>& values,
                  const ParamVisitor& f);
void visit_tensor(std::string_view prefix, std::string_view name, Tensor& t,
                  const ParamVisitor& f);
void visit_complex(std::string_view prefix, std::string_view name, ComplexTensor& t,
                   const ParamVisitor& f);

void add_into(std::vector<double>& acc, const std::vector<double>& v);

}  // namespace mgdfis
