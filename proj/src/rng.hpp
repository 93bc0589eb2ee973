#pragma once

#include <cstdint>

namespace mgdfis {

/// SplitMix64. State advances by 0x9E3779B97F4A7C15; output mixes with the
/// (30, 27, 31) xor-shift / multiply finalizer. Doubles take the top 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in [-bound, bound).
  double symmetric(double bound) { return bound * (2.0 * uniform() - 1.0); }

 private:
  std::uint64_t state_;
};

}  // namespace mgdfis
