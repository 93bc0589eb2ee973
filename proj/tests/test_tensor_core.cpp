#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "fft.hpp"
#include "gradcheck.hpp"
#include "gradsuite.hpp"
#include "io.hpp"
#include "oracles.hpp"

using namespace mgdfis;

namespace {

Tensor ramp(const Dims& d) {
  Tensor t(d);
  std::iota(t.data().begin(), t.data().end(), 0.0);
  return t;
}

}  // namespace

TEST_CASE("conv2d identity kernel leaves input unchanged") {
  Rng rng(3);
  const Tensor x = oracle::random_tensor({2, 1, 5, 4}, rng);
  const ConvSpec s = ConvSpec::pointwise(1, 1);
  Tensor w(s.weight_dims(), 1.0);
  CHECK(conv2d(x, w, std::vector<double>{0.0}, s) == x);
}

TEST_CASE("conv2d all-ones 3x3 on a constant field sums nine neighbours") {
  const ConvSpec s = ConvSpec::same(1, 1, 3, 3);
  const Tensor x({1, 1, 5, 5}, 1.75);
  const Tensor y = conv2d(x, Tensor(s.weight_dims(), 1.0), {}, s);
  CHECK(y(0, 0, 2, 2) == doctest::Approx(9 * 1.75).epsilon(1e-15));
  CHECK(y(0, 0, 0, 0) == doctest::Approx(4 * 1.75).epsilon(1e-15));
}

TEST_CASE("dilated depthwise conv on a ramp matches the nested-loop oracle") {
  Rng rng(11);
  const ConvSpec s = ConvSpec::depthwise(1, 3, 2);
  const Tensor w = oracle::random_tensor(s.weight_dims(), rng);
  const Tensor x = ramp({1, 1, 5, 5});
  const std::vector<double> b{0.25};
  CHECK(max_abs_diff(conv2d(x, w, b, s), oracle::conv(x, w, b, s)) < 1e-12);
}

TEST_CASE("conv2d and im2col agree with the oracle on random geometry") {
  Rng rng(5);
  for (std::size_t trial = 0; trial < 60; ++trial) {
    ConvSpec s;
    s.groups = 1 + rng.next_u64() % 2;
    s.in_channels = s.groups * (1 + rng.next_u64() % 3);
    s.out_channels = s.groups * (1 + rng.next_u64() % 3);
    s.kernel_h = 1 + rng.next_u64() % 4;
    s.kernel_w = 1 + rng.next_u64() % 4;
    s.stride_h = 1 + rng.next_u64() % 2;
    s.stride_w = 1 + rng.next_u64() % 2;
    s.dilation_h = 1 + rng.next_u64() % 2;
    s.dilation_w = 1 + rng.next_u64() % 2;
    s.pad_top = rng.next_u64() % 3;
    s.pad_bottom = rng.next_u64() % 3;
    s.pad_left = rng.next_u64() % 3;
    s.pad_right = rng.next_u64() % 3;
    const Dims d{1 + rng.next_u64() % 2, s.in_channels, 6 + rng.next_u64() % 3, 6 + rng.next_u64() % 3};
    const Tensor x = oracle::random_tensor(d, rng);
    const Tensor w = oracle::random_tensor(s.weight_dims(), rng);
    std::vector<double> b(s.out_channels);
    for (double& v : b) v = rng.symmetric(1.0);
    const Tensor want = oracle::conv(x, w, b, s);
    CHECK(max_abs_diff(conv2d(x, w, b, s), want) < 1e-12);
    CHECK(max_abs_diff(conv2d_im2col(x, w, b, s), want) < 1e-12);
  }
}

TEST_CASE("same padding keeps spatial dims for even kernels") {
  const ConvSpec s = ConvSpec::same(2, 2, 4, 6);
  CHECK(s.pad_top == 1);
  CHECK(s.pad_bottom == 2);
  CHECK(s.pad_left == 2);
  CHECK(s.pad_right == 3);
  CHECK(s.output_dims({1, 2, 7, 9}) == Dims{1, 2, 7, 9});
}

TEST_CASE("conv2d errors") {
  const ConvSpec s = ConvSpec::pointwise(3, 2);
  const Tensor w(s.weight_dims());
  CHECK_THROWS_AS(conv2d(Tensor({1, 4, 3, 3}), w, {}, s), ShapeError);
  ConvSpec bad = ConvSpec::pointwise(3, 2);
  bad.groups = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  try {
    conv2d(Tensor({1, 4, 3, 3}), w, {}, s);
  } catch (const ShapeError& e) {
    CHECK(e.axis() == "channels");
  }
}

TEST_CASE("linear") {
  Rng rng(8);
  const Tensor x = oracle::random_tensor({1, 1, 3, 4}, rng);
  Tensor eye({1, 1, 4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye(0, 0, i, i) = 1.0;
  CHECK(linear(x, eye, std::vector<double>(4, 0.0)) == x);

  const Tensor w = oracle::random_tensor({1, 1, 4, 2}, rng);
  const std::vector<double> b{0.5, -1.5};
  const Tensor z = linear(Tensor({1, 1, 3, 4}), w, b);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(z(0, 0, r, 0) == 0.5);
    CHECK(z(0, 0, r, 1) == -1.5);
  }
  const Tensor y = linear(x, w, {});
  const auto want = oracle::matmul({x.data().begin(), x.data().end()},
                                   {w.data().begin(), w.data().end()}, 3, 4, 2);
  for (std::size_t i = 0; i < 6; ++i) CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-14));
}

TEST_CASE("softmax") {
  const Tensor u = softmax(Tensor({1, 1, 1, 3}, std::vector<double>{1, 1, 1}), 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(u[i] == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const Tensor big = softmax(Tensor({1, 1, 1, 2}, std::vector<double>{1000, 0}), 3);
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] < 1e-300);

  // 40-digit reference evaluation
  const Tensor r = softmax(Tensor({1, 1, 1, 3}, std::vector<double>{0.5, 1.5, -1.0}), 3);
  CHECK(std::abs(r[0] - 0.25371618163502519551) < 1e-15);
  CHECK(std::abs(r[1] - 0.68967208612450352158) < 1e-15);
  CHECK(std::abs(r[2] - 0.056611732240471282915) < 1e-15);

  Rng rng(21);
  const Tensor x = oracle::random_tensor({2, 3, 4, 5}, rng, 5.0);
  for (std::size_t axis = 0; axis < 4; ++axis) {
    const Tensor y = softmax(x, axis);
    const Tensor shifted = softmax(x + Tensor(x.dims(), 7.5), axis);
    CHECK(max_abs_diff(y, shifted) < 1e-12);
  }
  const Tensor y = softmax(x, 1);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t h = 0; h < 4; ++h)
      for (std::size_t w = 0; w < 5; ++w) {
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) s += y(n, c, h, w);
        CHECK(std::abs(s - 1.0) < 1e-6);
      }
}

TEST_CASE("activations") {
  CHECK(activate(Activation::sigmoid, 0.0) == 0.5);
  CHECK(activate(Activation::silu, 0.0) == 0.0);
  CHECK(activate(Activation::tanh, 0.0) == 0.0);
  CHECK(activate(Activation::gelu, 0.0) == 0.0);
  CHECK(std::abs(activate(Activation::gelu, 1.0) - 0.84134474606854294859) < 1e-15);
  CHECK(std::abs(activate(Activation::silu, 1.0) - 0.73105857863000487925) < 1e-15);
  CHECK(std::abs(activate(Activation::tanh, 1.0) - 0.76159415595576488812) < 1e-15);
}

TEST_CASE("global average pool") {
  const Tensor c = global_avg_pool(Tensor({1, 2, 3, 3}, -0.75));
  CHECK(c.dims() == Dims{1, 2, 1, 1});
  CHECK(c[0] == doctest::Approx(-0.75));
  CHECK(global_avg_pool(Tensor({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4}))[0] == 2.5);

  Rng rng(2);
  const Tensor x = oracle::random_tensor({2, 3, 4, 4}, rng);
  const Tensor g = global_avg_pool(x);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double s = 0.0;
      for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t w = 0; w < 4; ++w) s += x(n, ch, h, w);
      CHECK(g(n, ch, 0, 0) == doctest::Approx(s / 16).epsilon(1e-14));
    }
}

TEST_CASE("bilinear resize matches the oracle, including identity size") {
  Rng rng(4);
  const Tensor x = oracle::random_tensor({1, 2, 5, 3}, rng);
  CHECK(max_abs_diff(resize_bilinear(x, 5, 3), x) == 0.0);
  for (auto [h, w] : {std::pair{10, 6}, {2, 7}, {1, 1}, {8, 2}})
    CHECK(max_abs_diff(resize_bilinear(x, h, w), oracle::resize(x, h, w)) < 1e-14);
}

TEST_CASE("fft2 basics") {
  const ComplexTensor dc = fft2(Tensor({1, 1, 3, 5}, 2.0));
  CHECK(std::abs(dc[0] - std::complex<double>(30.0, 0.0)) < 1e-12);
  for (std::size_t i = 1; i < dc.size(); ++i) CHECK(std::abs(dc[i]) < 1e-12);

  Tensor delta({1, 1, 4, 6});
  delta[0] = 1.0;
  const ComplexTensor flat = fft2(delta);
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(std::abs(flat[i] - 1.0) < 1e-14);

  Rng rng(6);
  const Tensor x = oracle::random_tensor({1, 1, 6, 5}, rng);
  const ComplexTensor got = fft2(x);
  const auto want = oracle::dft2(oracle::plane_of(x, 0, 0), 6, 5, -1);
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
  CHECK(max_abs_diff(ifft2(got), x) < 1e-13);
}

TEST_CASE("grad_check on primitives") {
  const auto& cases = gradient_cases();
  for (const char* name : {"linear", "conv2d_depthwise_dilated", "conv2d", "softmax", "gelu",
                           "global_avg_pool"}) {
    const auto it = std::find_if(cases.begin(), cases.end(), [&](const GradCase& c) { return c.name == name; });
    REQUIRE(it != cases.end());
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const GradCheckResult r = it->run(seed, {});
      CHECK_MESSAGE(r.passed, r.failure());
    }
  }
}

TEST_CASE("grad_check on a constant function sees zero on both sides") {
  std::vector<double> v{0.3, -1.0, 2.0};
  const std::vector<double> zero(3, 0.0);
  const GradCheckResult r = grad_check(
      "constant", [] { return Tensor({1, 1, 1, 2}, 4.0); }, {{"v", v, zero}});
  CHECK(r.passed);
  CHECK(r.entries.at(0).max_abs_error == 0.0);
  CHECK(r.entries.at(0).worst_numeric == 0.0);
}

TEST_CASE("grad_check reports non-finite gradients by name") {
  std::vector<double> v{1.0};
  const std::vector<double> bad{std::nan("")};
  const GradCheckResult r = grad_check(
      "broken", [&] { return Tensor({1, 1, 1, 1}, v[0]); }, {{"layer.weight", v, bad}});
  CHECK_FALSE(r.passed);
  CHECK(r.failure().find("layer.weight") != std::string::npos);
}

TEST_CASE("grad_check catches a corrupted backward") {
  const GradCheckResult r = corrupted_linear_check(1);
  CHECK_FALSE(r.passed);
}

TEST_CASE("relative error denominator floor") {
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-9, 0.0) == doctest::Approx(0.1));
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("MGDT round trip") {
  Rng rng(9);
  const Tensor x = oracle::random_tensor({2, 3, 4, 5}, rng);
  const auto bytes = encode_tensor(x);
  REQUIRE(bytes.size() == 7 + 4 * 8 + x.size() * 8);
  CHECK(std::memcmp(bytes.data(), "MGDT", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 4);
  CHECK(bytes[7] == 2);  // first dim, little-endian low byte
  CHECK(decode_tensor(bytes) == x);

  MgdtBlob c;
  c.dtype = MgdtDtype::complex128;
  c.shape = {2, 3};
  c.values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const MgdtBlob back = decode_mgdt(encode_mgdt(c));
  CHECK(back.dtype == MgdtDtype::complex128);
  CHECK(back.shape == c.shape);
  CHECK(back.values == c.values);

  MgdtBlob low;
  low.shape = {3, 2};
  low.values = {1, 2, 3, 4, 5, 6};
  CHECK(decode_tensor(encode_mgdt(low)).dims() == Dims{1, 1, 3, 2});
}

TEST_CASE("MGDT errors carry byte offsets") {
  const auto good = encode_tensor(Tensor({1, 1, 2, 2}, 1.0));
  auto offset_of = [](std::vector<std::uint8_t> b) -> std::size_t {
    try {
      decode_mgdt(b);
    } catch (const FormatError& e) {
      return e.offset();
    }
    return SIZE_MAX;
  };
  auto bad = good;
  bad[2] = 'X';
  CHECK(offset_of(bad) == 2);
  bad = good;
  bad[4] = 7;
  CHECK(offset_of(bad) == 4);
  bad = good;
  bad[5] = 9;
  CHECK(offset_of(bad) == 5);
  bad = good;
  bad[6] = 12;
  CHECK(offset_of(bad) == 6);
  bad = good;
  bad.resize(bad.size() - 3);
  CHECK(offset_of(bad) != SIZE_MAX);
  bad = good;
  bad.push_back(0);
  CHECK(offset_of(bad) == good.size());
  CHECK(offset_of({'M', 'G'}) == 2);
  CHECK(offset_of({'M', 'X'}) == 1);
}

TEST_CASE("rng is reproducible and bounded") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(0);
  CHECK(c.next_u64() == 0xE220A8397B1DCDAFULL);
  Rng d(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = d.symmetric(0.25);
    CHECK(v >= -0.25);
    CHECK(v < 0.25);
  }
}
