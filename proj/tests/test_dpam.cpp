#include <doctest.h>

#include "dpam.hpp"
#include "oracles.hpp"

using namespace mgdfis;

namespace {

DpamParams rigged(std::size_t c, double bias) {
  DpamParams p = DpamParams::zeros(c);
  p.conv.bias.assign(c, bias);
  return p;
}

}  // namespace

TEST_CASE("dpam with zero weights is a uniform half map") {
  Rng rng(1);
  const Tensor a = oracle::random_tensor({1, 3, 4, 5}, rng), b = oracle::random_tensor({1, 3, 4, 5}, rng);
  const Tensor m = dpam(a, b, DpamParams::zeros(3));
  CHECK(m.dims() == a.dims());
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == 0.5);
}

TEST_CASE("dpam matches the naive convolution oracle") {
  Rng rng(2);
  for (std::size_t trial = 0; trial < 10; ++trial) {
    DpamParams p = DpamParams::init(2, rng);
    oracle::randomize(p, rng, 0.3);
    const Tensor a = oracle::random_tensor({1, 2, 5, 5}, rng), b = oracle::random_tensor({1, 2, 5, 5}, rng);
    CHECK(max_abs_diff(dpam(a, b, p), oracle::dpam(a, b, p)) < 1e-14);
  }
  CHECK_THROWS_AS(dpam(Tensor({1, 2, 5, 5}), Tensor({1, 2, 4, 5}), DpamParams::zeros(2)), ShapeError);
}

TEST_CASE("dpam map lies in the closed unit interval at input magnitude 1e3") {
  Rng rng(3);
  const DpamParams p = DpamParams::init(2, rng);
  const Tensor m = dpam(oracle::random_tensor({1, 2, 6, 6}, rng, 1e3),
                        oracle::random_tensor({1, 2, 6, 6}, rng, 1e3), p);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(std::isfinite(m[i]));
    CHECK(m[i] >= 0.0);
    CHECK(m[i] <= 1.0);
  }
}

// Float64 rounds σ(z) to exactly 1 once z exceeds about 36.7, so a strictly open
// interval cannot hold for pre-activations in the hundreds.
TEST_CASE("dpam map is strictly inside (0,1) at input magnitude 1e3" * doctest::should_fail()) {
  Rng rng(3);
  const DpamParams p = DpamParams::init(2, rng);
  const Tensor m = dpam(oracle::random_tensor({1, 2, 6, 6}, rng, 1e3),
                        oracle::random_tensor({1, 2, 6, 6}, rng, 1e3), p);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < m.size(); ++i) outside += !(m[i] > 0.0 && m[i] < 1.0);
  CHECK(outside == 0);
}

TEST_CASE("dpam map is strictly inside (0,1) at unit input scale") {
  Rng rng(4);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const DpamParams p = DpamParams::init(3, rng);
    const Tensor m = dpam(oracle::random_tensor({1, 3, 5, 5}, rng), oracle::random_tensor({1, 3, 5, 5}, rng), p);
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(m[i] > 0.0);
      CHECK(m[i] < 1.0);
    }
  }
}

TEST_CASE("fuse endpoints") {
  Rng rng(5);
  const Dims d{1, 2, 4, 4};
  const Tensor agg = oracle::random_tensor(d, rng), hat = oracle::random_tensor(d, rng);
  const Tensor x1 = oracle::random_tensor(d, rng), x2 = oracle::random_tensor(d, rng);
  const AggregateParams none = AggregateParams::init(d, d, rng);
  const FusionWeights w;

  const Tensor one = dpam(agg, hat, rigged(2, 40.0));
  for (std::size_t i = 0; i < one.size(); ++i) REQUIRE(one[i] == 1.0);
  CHECK(mgdfis_fuse(one, hat, x1, x2, w, none) == hat);

  const Tensor zero = dpam(agg, hat, rigged(2, -800.0));
  for (std::size_t i = 0; i < zero.size(); ++i) REQUIRE(zero[i] == 0.0);
  FusionWeights w2{1.5, 0.25, 2.0};
  const Tensor bg = mgdfis_fuse(zero, hat, x1, x2, w2, none);
  for (std::size_t i = 0; i < bg.size(); ++i)
    CHECK(bg[i] == doctest::Approx(1.5 * (0.25 * x1[i] + 2.0 * x2[i])).epsilon(1e-15));

  const Tensor half = dpam(agg, hat, DpamParams::zeros(2));
  CHECK(mgdfis_fuse(half, hat, hat, hat, w, none) == hat);
}

TEST_CASE("fuse reconciles the base features and matches the elementwise oracle") {
  Rng rng(6);
  const Dims d{1, 4, 6, 6};
  const Tensor x1 = oracle::random_tensor(d, rng), x2 = oracle::random_tensor({1, 8, 3, 3}, rng);
  AggregateParams agg = AggregateParams::init(d, x2.dims(), rng);
  oracle::randomize(agg, rng);
  const Tensor hat = oracle::random_tensor(d, rng);
  Tensor amap(d);
  for (double& v : amap.data()) v = rng.uniform();
  const FusionWeights w{0.8, -0.3, 1.7};
  CHECK(max_abs_diff(mgdfis_fuse(amap, hat, x1, x2, w, agg), oracle::fuse(amap, hat, x1, x2, w, agg)) < 1e-13);
}

TEST_CASE("fuse is monotone in the map when the refined map dominates") {
  Rng rng(7);
  const Dims d{1, 2, 3, 3};
  const AggregateParams none = AggregateParams::init(d, d, rng);
  const Tensor x1 = oracle::random_tensor(d, rng), x2 = oracle::random_tensor(d, rng);
  const FusionWeights w;
  Tensor hat(d);
  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] = 0.5 * (x1[i] + x2[i]) + rng.uniform();
  Tensor prev;
  for (int step = 0; step <= 10; ++step) {
    const Tensor amap(d, step / 10.0);
    const Tensor y = mgdfis_fuse(amap, hat, x1, x2, w, none);
    if (step > 0)
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] >= prev[i]);
    prev = y;
  }
}

TEST_CASE("pipeline matches the composed oracle") {
  Rng rng(8);
  MgdfisShape shape;
  shape.f1 = {1, 4, 4, 4};
  shape.f2 = {1, 8, 2, 2};
  shape.ftssa = {2, 2, 4, 4, PiMode::constant};
  for (std::size_t trial = 0; trial < 3; ++trial) {
    MgdfisParams p = MgdfisParams::init(shape, rng);
    oracle::randomize(p, rng, 0.5);
    const Tensor f1 = oracle::random_tensor(shape.f1, rng), f2 = oracle::random_tensor(shape.f2, rng);
    MgdfisTrace trace;
    const Tensor y = mgdfis::mgdfis(f1, f2, p, {}, &trace);
    CHECK(y.dims() == shape.f1);
    CHECK(max_abs_diff(y, oracle::pipeline(f1, f2, p)) < 1e-11);
    CHECK(max_abs_diff(trace.amap, oracle::dpam(trace.f_agg, trace.f_hat, p.dpam)) < 1e-14);
  }
}
