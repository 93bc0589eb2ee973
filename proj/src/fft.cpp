#include "fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace mgdfis {

namespace {

using cd = std::complex<double>;

bool is_pow2(std::size_t n) { return std::has_single_bit(n); }

cd unit_root(std::size_t k, std::size_t m) {
  const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

Fft1d::Fft1d(std::size_t n) : n_(n) {
  if (n == 0) throw ShapeError("length", "FFT length must be >= 1");
  m_ = is_pow2(n) ? n : std::bit_ceil(2 * n - 1);

  twiddles_.resize(m_ / 2);
  for (std::size_t k = 0; k < m_ / 2; ++k) twiddles_[k] = unit_root(k, m_);
  const int bits = std::countr_zero(m_);
  bitrev_.resize(m_);
  for (std::size_t i = 0; i < m_; ++i) {
    std::size_t r = 0;
    for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
    bitrev_[i] = r;
  }

  if (!is_pow2(n)) {
    chirp_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      // k² mod 2n keeps the phase argument small and exact.
      const std::size_t k2 = (k * k) % (2 * n);
      const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
      chirp_[k] = {std::cos(angle), std::sin(angle)};
    }
    chirp_spectrum_.assign(m_, cd{});
    chirp_spectrum_[0] = std::conj(chirp_[0]);
    for (std::size_t k = 1; k < n; ++k) {
      chirp_spectrum_[k] = std::conj(chirp_[k]);
      chirp_spectrum_[m_ - k] = std::conj(chirp_[k]);
    }
    radix2(chirp_spectrum_, false);
  }
}

void Fft1d::radix2(std::span<cd> a, bool invert) const {
  const std::size_t m = a.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= m; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = m / len;
    for (std::size_t start = 0; start < m; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        cd w = twiddles_[j * step];
        if (invert) w = std::conj(w);
        const cd u = a[start + j];
        const cd v = a[start + j + half] * w;
        a[start + j] = u + v;
        a[start + j + half] = u - v;
      }
    }
  }
}

void Fft1d::bluestein(std::span<cd> data) const {
  std::vector<cd> work(m_, cd{});
  for (std::size_t k = 0; k < n_; ++k) work[k] = data[k] * chirp_[k];
  radix2(work, false);
  for (std::size_t k = 0; k < m_; ++k) work[k] *= chirp_spectrum_[k];
  radix2(work, true);
  const double inv_m = 1.0 / static_cast<double>(m_);
  for (std::size_t k = 0; k < n_; ++k) data[k] = work[k] * inv_m * chirp_[k];
}

void Fft1d::forward(std::span<cd> data) const {
  if (data.size() != n_) throw ShapeError("length", "FFT plan/data length mismatch");
  if (n_ == 1) return;
  if (is_pow2(n_)) {
    radix2(data, false);
  } else {
    bluestein(data);
  }
}

void Fft1d::inverse(std::span<cd> data) const {
  if (data.size() != n_) throw ShapeError("length", "FFT plan/data length mismatch");
  // conj ∘ forward ∘ conj, then 1/n.
  for (cd& v : data) v = std::conj(v);
  forward(data);
  const double inv = 1.0 / static_cast<double>(n_);
  for (cd& v : data) v = std::conj(v) * inv;
}

namespace {

void transform_planes(ComplexTensor& t, bool inverse) {
  const Dims& d = t.dims();
  const std::size_t h = d[2], w = d[3];
  const Fft1d row_plan(w);
  const Fft1d col_plan(h);
  std::vector<cd> column(h);
  for (std::size_t n = 0; n < d[0]; ++n) {
    for (std::size_t c = 0; c < d[1]; ++c) {
      cd* plane = t.data().data() + t.offset(n, c, 0, 0);
      for (std::size_t r = 0; r < h; ++r) {
        std::span<cd> row(plane + r * w, w);
        inverse ? row_plan.inverse(row) : row_plan.forward(row);
      }
      for (std::size_t col = 0; col < w; ++col) {
        for (std::size_t r = 0; r < h; ++r) column[r] = plane[r * w + col];
        inverse ? col_plan.inverse(column) : col_plan.forward(column);
        for (std::size_t r = 0; r < h; ++r) plane[r * w + col] = column[r];
      }
    }
  }
}

}  // namespace

ComplexTensor fft2(const Tensor& x) { return fft2(ComplexTensor(x)); }

ComplexTensor fft2(const ComplexTensor& x) {
  ComplexTensor out = x;
  transform_planes(out, false);
  return out;
}

ComplexTensor ifft2_complex(const ComplexTensor& x) {
  ComplexTensor out = x;
  transform_planes(out, true);
  return out;
}

Tensor ifft2(const ComplexTensor& x) { return ifft2_complex(x).real(); }

}  // namespace mgdfis
