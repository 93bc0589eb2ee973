#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace mgdfis {

/// One differentiable op, checked on a tiny random instance drawn from `seed`
/// (spatial dims ≤ 6, channels ≤ 4).
struct GradCase {
  std::string name;
  std::function<GradCheckResult(std::uint64_t seed, const GradCheckOptions&)> run;
};

const std::vector<GradCase>& gradient_cases();

/// Linear layer whose analytic weight gradient is deliberately scaled wrong.
GradCheckResult corrupted_linear_check(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace mgdfis
