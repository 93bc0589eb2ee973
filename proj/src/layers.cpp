#include "layers.hpp"

#include <cmath>

namespace mgdfis {

std::string join_name(std::string_view prefix, std::string_view name) {
  if (prefix.empty()) return std::string(name);
  std::string out(prefix);
  out += '.';
  out += name;
  return out;
}

void fill_uniform_fan_in(std::span<double> values, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : values) v = rng.symmetric(bound);
}

void add_into(std::vector<double>& acc, const std::vector<double>& v) {
  for (std::size_t i = 0; i < acc.size() && i < v.size(); ++i) acc[i] += v[i];
}

ConvLayer ConvLayer::init(const ConvSpec& spec, Rng& rng) {
  ConvLayer l = zeros(spec);
  fill_uniform_fan_in(l.weight.data(), spec.fan_in(), rng);
  return l;
}

ConvLayer ConvLayer::zeros(const ConvSpec& spec) {
  spec.validate();
  return {spec, Tensor(spec.weight_dims()), std::vector<double>(spec.out_channels, 0.0)};
}

ConvLayer ConvLayer::identity(std::size_t in, std::size_t out) {
  ConvLayer l = zeros(ConvSpec::pointwise(in, out));
  for (std::size_t i = 0; i < std::min(in, out); ++i) l.weight(i, i, 0, 0) = 1.0;
  return l;
}

Tensor ConvLayer::backward(const Tensor& x, const Tensor& grad_out, ConvLayer& grad) const {
  ConvGrads g = conv2d_backward(x, weight, spec, grad_out);
  grad.weight += g.weights;
  add_into(grad.bias, g.bias);
  return std::move(g.input);
}

void ConvLayer::visit(std::string_view prefix, const ParamVisitor& f) {
  visit_tensor(prefix, "weight", weight, f);
  visit_vector(prefix, "bias", bias, f);
}

LinearLayer LinearLayer::init(std::size_t in, std::size_t out, Rng& rng) {
  LinearLayer l = zeros(in, out);
  fill_uniform_fan_in(l.weight.data(), in, rng);
  return l;
}

LinearLayer LinearLayer::zeros(std::size_t in, std::size_t out) {
  return {Tensor({1, 1, in, out}), std::vector<double>(out, 0.0)};
}

Tensor LinearLayer::backward(const Tensor& x, const Tensor& grad_out, LinearLayer& grad) const {
  LinearGrads g = linear_backward(x, weight, grad_out);
  grad.weight += g.weights;
  add_into(grad.bias, g.bias);
  return std::move(g.input);
}

void LinearLayer::visit(std::string_view prefix, const ParamVisitor& f) {
  // Stored as 1×1×in×out; reported as the in×out matrix it is.
  f({join_name(prefix, "weight"), weight.data(), {weight.height(), weight.width()}, false});
  visit_vector(prefix, "bias", bias, f);
}

void visit_scalar(std::string_view prefix, std::string_view name, double& value,
                  const ParamVisitor& f) {
  f({join_name(prefix, name), std::span<double>(&value, 1), {}, false});
}

void visit_vector(std::string_view prefix, std::string_view name, std::vector<double>& values,
                  const ParamVisitor& f) {
  f({join_name(prefix, name), values, {values.size()}, false});
}

void visit_tensor(std::string_view prefix, std::string_view name, Tensor& t,
                  const ParamVisitor& f) {
  const Dims& d = t.dims();
  f({join_name(prefix, name), t.data(), {d[0], d[1], d[2], d[3]}, false});
}

void visit_complex(std::string_view prefix, std::string_view name, ComplexTensor& t,
                   const ParamVisitor& f) {
  const Dims& d = t.dims();
  f({join_name(prefix, name), t.interleaved(), {d[0], d[1], d[2], d[3]}, true});
}

}  // namespace mgdfis
