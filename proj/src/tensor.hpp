#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgdfis {

/// Batch, channel, height, width.
using Dims = std::array<std::size_t, 4>;

std::size_t numel(const Dims& dims);
std::string to_string(const Dims& dims);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tensor did not satisfy a shape contract. `axis()` names the offending axis.
class ShapeError : public Error {
 public:
  ShapeError(std::string axis, const std::string& what)
      : Error(what + " [axis: " + axis + "]"), axis_(std::move(axis)) {}
  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

/// Invalid hyperparameters or layer configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable file. `offset()` is the byte position of the fault.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  const std::size_t& offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Throws ShapeError if `actual[i] != expected[i]` on any axis.
void expect_dims(const Dims& actual, const Dims& expected, const std::string& context);

/// Dense NCHW array of doubles, row-major with width fastest.
class Tensor {
 public:
  Tensor() : Tensor(Dims{1, 1, 1, 1}) {}
  explicit Tensor(Dims dims, double fill = 0.0);
  Tensor(Dims dims, std::vector<double> data);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.dims()); }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t batch() const noexcept { return dims_[0]; }
  std::size_t channels() const noexcept { return dims_[1]; }
  std::size_t height() const noexcept { return dims_[2]; }
  std::size_t width() const noexcept { return dims_[3]; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* raw() noexcept { return data_.data(); }
  const double* raw() const noexcept { return data_.data(); }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return ((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w;
  }
  double& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[offset(n, c, h, w)];
  }
  double operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[offset(n, c, h, w)];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  /// One H×W plane.
  std::span<double> plane(std::size_t n, std::size_t c) noexcept {
    return {data_.data() + offset(n, c, 0, 0), dims_[2] * dims_[3]};
  }
  std::span<const double> plane(std::size_t n, std::size_t c) const noexcept {
    return {data_.data() + offset(n, c, 0, 0), dims_[2] * dims_[3]};
  }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  bool operator==(const Tensor& other) const = default;

 private:
  Dims dims_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);

double sum(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);
bool all_finite(std::span<const double> values);

/// Complex counterpart of Tensor; carries frequency-domain features.
class ComplexTensor {
 public:
  using value_type = std::complex<double>;

  ComplexTensor() : ComplexTensor(Dims{1, 1, 1, 1}) {}
  explicit ComplexTensor(Dims dims, value_type fill = {});
  explicit ComplexTensor(const Tensor& real);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<value_type> data() noexcept { return data_; }
  std::span<const value_type> data() const noexcept { return data_; }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return ((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w;
  }
  value_type& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[offset(n, c, h, w)];
  }
  const value_type& operator()(std::size_t n, std::size_t c, std::size_t h,
                               std::size_t w) const noexcept {
    return data_[offset(n, c, h, w)];
  }
  value_type& operator[](std::size_t i) noexcept { return data_[i]; }
  const value_type& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Interleaved (re, im) view, valid for std::complex by the array-access guarantee.
  std::span<double> interleaved() noexcept {
    return {reinterpret_cast<double*>(data_.data()), 2 * data_.size()};
  }

  Tensor real() const;
  Tensor imag() const;
  static ComplexTensor from_parts(const Tensor& re, const Tensor& im);

 private:
  Dims dims_;
  std::vector<value_type> data_;
};

}  // namespace mgdfis
