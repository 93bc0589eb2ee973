#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ftssa.hpp"
#include "oracles.hpp"

using namespace mgdfis;

namespace {

MonaParams scaled_identity_mona(std::size_t c) {
  MonaParams m = MonaParams::zeros(c, std::max<std::size_t>(c / 4, 1));
  m.xmona_proj = ConvLayer::identity(c, c);
  m.xmona_scale = 1e-6;
  return m;
}

FtssaParams random_ftssa(std::size_t c, const FtssaShape& shape, Rng& rng) {
  FtssaParams p = FtssaParams::init(c, shape, rng);
  oracle::randomize(p, rng, 0.6);
  return p;
}

}  // namespace

TEST_CASE("dyt") {
  DytParams p = DytParams::init(1);
  p.alpha = 1.0;
  CHECK(dyt(Tensor({1, 1, 1, 1}), p)[0] == 0.0);

  p.alpha = 50.0;
  p.gamma = {1.5};
  p.beta = {-0.25};
  const Tensor sat = dyt(Tensor({1, 1, 1, 2}, std::vector<double>{1.0, -3.0}), p);
  CHECK(std::abs(sat[0] - 1.25) < 1e-8);
  CHECK(std::abs(sat[1] + 1.75) < 1e-8);

  p.alpha = 0.5;
  p.gamma = {2.0};
  p.beta = {1.0};
  // 40-digit reference evaluation of 2·tanh(1) + 1
  CHECK(std::abs(dyt(Tensor({1, 1, 1, 1}, 2.0), p)[0] - 2.5231883119115297762) < 1e-15);

  p.gamma = {1.0, 2.0};
  CHECK_THROWS_AS(dyt(Tensor({1, 1, 1, 1}), p), ShapeError);
}

TEST_CASE("tssa on a single token reduces to closed form") {
  Rng rng(12);
  const std::size_t C = 3, Hh = 2, D = 2;
  TssaParams p = TssaParams::init(C, Hh, D, rng);
  const Tensor f = oracle::random_tensor({1, C, 1, 1}, rng);
  // One token: every head's statistic is |u|²/(|u|+eps)² ≈ 1, so Π is uniform
  // and the per-head token mass is Π itself. Dots = Π/(Π+eps)·u².
  std::vector<double> o(Hh * D);
  for (std::size_t h = 0; h < Hh; ++h) {
    std::vector<double> u(D);
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t c = 0; c < C; ++c) u[d] += f[c] * p.qkv(0, 0, c, h * D + d);
    const double pi_h = 1.0 / Hh;
    for (std::size_t d = 0; d < D; ++d) {
      const double dots = pi_h / (pi_h + 1e-8) * u[d] * u[d];
      o[h * D + d] = -u[d] * std::numbers::pi / (1.0 + dots);
    }
  }
  const Tensor y = tssa(f, p);
  for (std::size_t c = 0; c < C; ++c) {
    double want = p.out.bias[c];
    for (std::size_t j = 0; j < Hh * D; ++j) want += o[j] * p.out.weight(0, 0, j, c);
    CHECK(std::abs(y[c] - want) < 1e-12);
  }
}

TEST_CASE("tssa with zero weights is zero") {
  Rng rng(1);
  const Tensor f = oracle::random_tensor({2, 4, 3, 3}, rng);
  const Tensor y = tssa(f, TssaParams::zeros(4, 2, 3));
  CHECK(max_abs_diff(y, Tensor(f.dims())) == 0.0);
}

TEST_CASE("tssa with two tokens and hand-set weights") {
  TssaParams p = TssaParams::zeros(2, 1, 2);
  p.qkv = Tensor({1, 1, 2, 2}, std::vector<double>{1.0, 0.5, -0.25, 2.0});
  p.out.weight = Tensor({1, 1, 2, 2}, std::vector<double>{0.75, -1.0, 0.3, 0.6});
  p.out.bias = {0.1, -0.2};
  const Tensor f({1, 2, 1, 2}, std::vector<double>{0.4, -1.2, 0.9, 0.35});
  for (PiMode mode : {PiMode::constant, PiMode::distribution}) {
    p.pi_mode = mode;
    CHECK(max_abs_diff(tssa(f, p), oracle::tssa(f, p)) < 1e-13);
  }
}

TEST_CASE("tssa matches the oracle on random cases") {
  Rng rng(77);
  for (std::size_t trial = 0; trial < 40; ++trial) {
    const std::size_t C = 1 + rng.next_u64() % 4, Hh = 1 + rng.next_u64() % 2, D = 1 + rng.next_u64() % 3;
    TssaParams p = TssaParams::init(C, Hh, D, rng);
    oracle::randomize(p, rng);
    p.pi_mode = trial % 2 ? PiMode::distribution : PiMode::constant;
    const Tensor f = oracle::random_tensor({1 + rng.next_u64() % 2, C, 1 + rng.next_u64() % 3, 1 + rng.next_u64() % 3}, rng);
    CHECK(max_abs_diff(tssa(f, p), oracle::tssa(f, p)) < 1e-12);
  }
}

TEST_CASE("tssa statistics stay normalized") {
  Rng rng(31);
  TssaParams p = TssaParams::init(4, 3, 2, rng);
  oracle::randomize(p, rng, 2.0);
  const Tensor f = oracle::random_tensor({2, 4, 3, 5}, rng, 10.0);
  TssaTrace t;
  tssa(f, p, &t);
  CHECK(t.pi.dims() == Dims{2, 3, 15, 1});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t n = 0; n < 15; ++n) {
      double s = 0.0;
      for (std::size_t h = 0; h < 3; ++h) s += t.pi(b, h, n, 0);
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  for (std::size_t i = 0; i < t.attn.size(); ++i) {
    CHECK(t.dots[i] >= 0.0);
    CHECK(t.attn[i] > 0.0);
    CHECK(t.attn[i] <= 1.0);
  }
}

TEST_CASE("mona_op") {
  Rng rng(3);
  MonaParams m = MonaParams::zeros(4, 2);
  const Tensor z = oracle::random_tensor({1, 2, 5, 5}, rng);
  CHECK(mona_op(z, m) == z);
  CHECK(max_abs_diff(mona_op(Tensor(z.dims()), m), Tensor(z.dims())) == 0.0);
  m = MonaParams::init(4, 2, rng);
  oracle::randomize(m, rng);
  CHECK(max_abs_diff(mona_op(z, m), oracle::mona_op(z, m)) < 1e-12);
}

TEST_CASE("xmona") {
  Rng rng(4);
  MonaParams m = MonaParams::init(3, 1, rng);
  const Tensor x = oracle::random_tensor({1, 3, 4, 4}, rng);
  CHECK(m.xmona_scale == 1e-6);
  m.xmona_scale = 0.0;
  CHECK(max_abs_diff(xmona(x, m), Tensor(x.dims())) == 0.0);

  const MonaParams id = scaled_identity_mona(3);
  const Tensor y = xmona(Tensor({1, 3, 2, 2}, 1.0), id);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == 1e-6);

  m.xmona_scale = 0.37;
  CHECK(max_abs_diff(xmona(x, m), oracle::xmona(x, m)) < 1e-13);
}

TEST_CASE("mona") {
  Rng rng(5);
  const Tensor x = oracle::random_tensor({2, 4, 3, 3}, rng);
  CHECK(max_abs_diff(mona(x, MonaParams::zeros(4, 1)), Tensor(x.dims())) == 0.0);
  CHECK(max_abs_diff(mona(x, scaled_identity_mona(4)), x * 1e-6) < 1e-20);
  MonaParams m = MonaParams::init(4, 1, rng);
  oracle::randomize(m, rng);
  CHECK(max_abs_diff(mona(x, m), oracle::mona(x, m)) < 1e-12);
}

TEST_CASE("spectral filter with unit weights is a round trip") {
  Rng rng(6);
  const Tensor x = oracle::random_tensor({1, 2, 5, 7}, rng);
  const ComplexTensor w({1, 2, 8, 8}, {1.0, 0.0});
  CHECK(max_abs_diff(spectral_filter(x, w, std::vector<double>{0.0, 0.0}), x) < 1e-13);
}

TEST_CASE("seff") {
  Rng rng(7);
  const std::size_t C = 2;
  SeffParams p = SeffParams::zeros(C, 8);
  const Tensor x = oracle::random_tensor({1, C, 4, 4}, rng);
  CHECK(max_abs_diff(seff(x, p), Tensor(x.dims())) == 0.0);

  // Unit spectra, centre-tap branches and an identity merge leave SiLU(f2)⊙f1.
  p.split = ConvLayer::init(ConvSpec::pointwise(C, 2 * C), rng);
  for (ComplexTensor* w : {&p.w1, &p.w2})
    for (auto& v : w->data()) v = 1.0;
  p.branch1.weight = Tensor(p.branch1.spec.weight_dims());
  p.branch2.weight = Tensor(p.branch2.spec.weight_dims());
  for (std::size_t c = 0; c < C; ++c) p.branch1.weight(c, 0, 1, 1) = p.branch2.weight(c, 0, 1, 1) = 1.0;
  p.merge = ConvLayer::identity(C, C);
  const Tensor s = p.split.forward(x);
  Tensor want(x.dims());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < 16; ++i) {
      const double f1 = s(0, c, i / 4, i % 4), f2 = s(0, C + c, i / 4, i % 4);
      want(0, c, i / 4, i % 4) = oracle::silu(f2) * f1;
    }
  CHECK(max_abs_diff(seff(x, p), want) < 1e-13);

  for (std::size_t trial = 0; trial < 10; ++trial) {
    SeffParams r = SeffParams::init(C, 3 + trial % 6, rng);
    oracle::randomize(r, rng);
    const Tensor xr = oracle::random_tensor({1, C, 4 + trial % 3, 4 + trial % 2}, rng);
    CHECK(max_abs_diff(seff(xr, r), oracle::seff(xr, r)) < 1e-12);
  }
}

TEST_CASE("daff and serr") {
  Rng rng(8);
  const std::size_t C = 4;
  const FtssaShape shape{2, 2, 4, 4, PiMode::constant};
  const Tensor x = oracle::random_tensor({1, C, 3, 3}, rng);
  FtssaParams z = FtssaParams::zeros(C, shape);
  z.dyt1.alpha = 3.0;
  CHECK(max_abs_diff(daff(x, z.dyt1, z.tssa, z.mona1), Tensor(x.dims())) == 0.0);
  CHECK(max_abs_diff(serr(x, z.dyt2, z.seff, z.mona2), Tensor(x.dims())) == 0.0);

  const MonaParams id = scaled_identity_mona(C);
  CHECK(max_abs_diff(daff(x, DytParams::init(C), z.tssa, id), x * 1e-6) < 1e-20);
  CHECK(max_abs_diff(serr(x, DytParams::init(C), z.seff, id), x * 1e-6) < 1e-20);

  const FtssaParams p = random_ftssa(C, shape, rng);
  const Tensor d = oracle::mona(oracle::add(x, oracle::tssa(oracle::dyt(x, p.dyt1), p.tssa)), p.mona1);
  CHECK(max_abs_diff(daff(x, p.dyt1, p.tssa, p.mona1), d) < 1e-12);
  const Tensor s = oracle::mona(oracle::add(d, oracle::seff(oracle::dyt(d, p.dyt2), p.seff)), p.mona2);
  CHECK(max_abs_diff(serr(d, p.dyt2, p.seff, p.mona2), s) < 1e-12);
}

TEST_CASE("ftssa") {
  Rng rng(9);
  const FtssaShape shape{2, 3, 4, 8, PiMode::constant};
  CHECK(max_abs_diff(ftssa(oracle::random_tensor({1, 4, 3, 3}, rng), FtssaParams::zeros(4, shape)),
                     Tensor({1, 4, 3, 3})) == 0.0);
  const Tensor big = oracle::random_tensor({2, 8, 6, 6}, rng);
  CHECK(ftssa(big, FtssaParams::init(8, shape, rng)).dims() == big.dims());

  for (std::size_t trial = 0; trial < 6; ++trial) {
    FtssaShape s = shape;
    s.pi_mode = trial % 2 ? PiMode::distribution : PiMode::constant;
    const FtssaParams p = random_ftssa(4, s, rng);
    const Tensor x = oracle::random_tensor({1 + trial % 2, 4, 2 + trial % 3, 3}, rng);
    CHECK(max_abs_diff(ftssa(x, p), oracle::ftssa(x, p)) < 1e-11);
  }
}

TEST_CASE("ftssa init is seeded and shaped") {
  Rng a(10), b(10);
  const FtssaShape shape{};
  FtssaParams pa = FtssaParams::init(16, shape, a), pb = FtssaParams::init(16, shape, b);
  CHECK(pa.tssa.qkv == pb.tssa.qkv);
  CHECK(pa.seff.w1.data()[0] == pb.seff.w1.data()[0]);
  CHECK(pa.mona1.xmona_scale == 1e-6);
  CHECK(pa.mona1.reduced() == 4);
  CHECK(pa.dyt1.alpha == 0.5);
  CHECK(pa.dyt2.gamma == std::vector<double>(16, 1.0));
  CHECK(pa.tssa.qkv.dims() == Dims{1, 1, 16, 64});
}
