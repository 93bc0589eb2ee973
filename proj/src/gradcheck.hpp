#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layers.hpp"
#include "tensor.hpp"

namespace mgdfis {

/// One differentiable quantity: its live values (perturbed in place) and the
/// analytic gradient of sum(forward()) with respect to them.
struct GradTarget {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

enum class GradMetric {
  /// max_i |a_i − n_i| / max(|a_i|, |n_i|, 1e-8)
  elementwise,
  /// max_i |a_i − n_i| / max(max_i |a_i|, max_i |n_i|, 1e-8), per parameter tensor
  tensor,
};

struct GradCheckOptions {
  double eps = 1e-4;
  double tol = 1e-4;
  GradMetric metric = GradMetric::tensor;
};

struct GradCheckEntry {
  std::string name;
  double error = 0.0;  // under the selected metric; decides `passed`
  double max_rel_error = 0.0;  // elementwise, always reported
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool finite = true;
  bool passed = true;
};

struct GradCheckResult {
  std::string op;
  std::vector<GradCheckEntry> entries;
  bool passed = true;

  /// Largest `error` over entries.
  double max_error() const;
  /// Largest elementwise relative error over entries.
  double max_rel_error() const;
  /// First failing entry's description, or empty.
  std::string failure() const;
};

/// |a − n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// Central differences of sum(forward()) for every element of every target.
GradCheckResult grad_check(std::string op, const std::function<Tensor()>& forward,
                           const std::vector<GradTarget>& targets,
                           const GradCheckOptions& options = {});

/// Pairs every learnable value of `params` with the matching slot of `grads`.
/// Both records must share one layout (e.g. grads = zeros_like_params(params)).
template <class P>
std::vector<GradTarget> param_targets(std::string_view prefix, P& params, P& grads) {
  std::vector<GradTarget> out;
  params.visit(prefix, [&](const ParamView& v) { out.push_back({v.name, v.values, {}}); });
  std::size_t i = 0;
  grads.visit(prefix, [&](const ParamView& v) { out.at(i++).analytic = v.values; });
  return out;
}

}  // namespace mgdfis
