#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace mgdfis {

/// Plan for a length-n complex DFT. Powers of two run iterative radix-2;
/// every other length goes through Bluestein's chirp-z on a power-of-two grid.
class Fft1d {
 public:
  explicit Fft1d(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  /// Unnormalized forward transform, exponent sign -1.
  void forward(std::span<std::complex<double>> data) const;
  /// Inverse transform including the 1/n factor.
  void inverse(std::span<std::complex<double>> data) const;

 private:
  void radix2(std::span<std::complex<double>> data, bool invert) const;
  void bluestein(std::span<std::complex<double>> data) const;

  std::size_t n_;
  std::size_t m_;  // radix-2 length (n_ itself, or the Bluestein padding)
  std::vector<std::complex<double>> twiddles_;  // e^{-2πik/m}, k < m/2
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> chirp_;          // e^{-iπk²/n}
  std::vector<std::complex<double>> chirp_spectrum_;  // FFT of the conjugate chirp filter
};

/// Per-plane 2-D DFT; forward is unnormalized, the inverse divides by H·W.
ComplexTensor fft2(const Tensor& x);
ComplexTensor fft2(const ComplexTensor& x);
ComplexTensor ifft2_complex(const ComplexTensor& x);
/// Inverse transform keeping the real part.
Tensor ifft2(const ComplexTensor& x);

}  // namespace mgdfis
