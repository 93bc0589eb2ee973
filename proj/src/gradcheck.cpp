#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mgdfis {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

double GradCheckResult::max_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.error);
  return m;
}

double GradCheckResult::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

std::string GradCheckResult::failure() const {
  for (const auto& e : entries) {
    if (e.passed) continue;
    std::ostringstream os;
    os << op << ": parameter '" << e.name << "'";
    if (!e.finite) {
      os << " has a non-finite gradient";
    } else {
      os << " error " << e.error << " (elementwise " << e.max_rel_error << ") worst at element "
         << e.worst_index
         << " (analytic " << e.worst_analytic << ", numeric " << e.worst_numeric << ")";
    }
    return os.str();
  }
  return {};
}

GradCheckResult grad_check(std::string op, const std::function<Tensor()>& forward,
                           const std::vector<GradTarget>& targets,
                           const GradCheckOptions& options) {
  GradCheckResult result;
  result.op = std::move(op);
  for (const auto& t : targets) {
    GradCheckEntry e;
    e.name = t.name;
    if (t.analytic.size() != t.values.size()) {
      throw ShapeError("values", "grad_check: analytic gradient for '" + t.name +
                                     "' has the wrong length");
    }
    double peak = 0.0;
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      const double saved = t.values[i];
      t.values[i] = saved + options.eps;
      const Tensor up = forward();
      t.values[i] = saved - options.eps;
      const Tensor down = forward();
      t.values[i] = saved;
      // Differencing per element before summing keeps cancellation error at
      // the scale of each output, not of the whole loss.
      double diff = 0.0;
      for (std::size_t k = 0; k < up.size(); ++k) diff += up[k] - down[k];
      const double numeric = diff / (2.0 * options.eps);
      const double analytic = t.analytic[i];
      if (!std::isfinite(numeric) || !std::isfinite(analytic)) {
        e.finite = false;
        e.passed = false;
        e.worst_index = i;
        e.worst_analytic = analytic;
        e.worst_numeric = numeric;
        break;
      }
      peak = std::max({peak, std::abs(analytic), std::abs(numeric)});
      e.max_abs_error = std::max(e.max_abs_error, std::abs(analytic - numeric));
      const double err = relative_error(analytic, numeric);
      if (err > e.max_rel_error) {
        e.max_rel_error = err;
        e.worst_index = i;
        e.worst_analytic = analytic;
        e.worst_numeric = numeric;
      }
    }
    if (e.finite) {
      e.error = options.metric == GradMetric::elementwise
                    ? e.max_rel_error
                    : e.max_abs_error / std::max(peak, 1e-8);
      e.passed = e.error <= options.tol;
    } else {
      e.error = std::numeric_limits<double>::infinity();
    }
    result.passed = result.passed && e.passed;
    result.entries.push_back(std::move(e));
  }
  return result;
}

}  // namespace mgdfis
