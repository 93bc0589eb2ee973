#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace mgdfis {

namespace {

constexpr const char* kAxisNames[4] = {"batch", "channels", "height", "width"};

void check_dims(const Dims& dims) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (dims[i] == 0) {
      throw ShapeError(kAxisNames[i], "tensor dimension must be >= 1, got " + to_string(dims));
    }
  }
}

}  // namespace

std::size_t numel(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Dims& dims) {
  std::ostringstream os;
  os << dims[0] << 'x' << dims[1] << 'x' << dims[2] << 'x' << dims[3];
  return os.str();
}

void expect_dims(const Dims& actual, const Dims& expected, const std::string& context) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (actual[i] != expected[i]) {
      throw ShapeError(kAxisNames[i], context + ": expected " + to_string(expected) + ", got " +
                                          to_string(actual));
    }
  }
}

Tensor::Tensor(Dims dims, double fill) : dims_(dims) {
  check_dims(dims_);
  data_.assign(numel(dims_), fill);
}

Tensor::Tensor(Dims dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
  check_dims(dims_);
  if (data_.size() != numel(dims_)) {
    throw ShapeError("data", "payload length " + std::to_string(data_.size()) +
                                 " does not match dims " + to_string(dims_));
  }
}

Tensor& Tensor::operator+=(const Tensor& other) {
  expect_dims(other.dims_, dims_, "tensor add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  expect_dims(other.dims_, dims_, "tensor subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  expect_dims(b.dims(), a.dims(), "hadamard product");
  Tensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  expect_dims(b.dims(), a.dims(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

ComplexTensor::ComplexTensor(Dims dims, value_type fill) : dims_(dims) {
  check_dims(dims_);
  data_.assign(numel(dims_), fill);
}

ComplexTensor::ComplexTensor(const Tensor& real) : dims_(real.dims()) {
  data_.resize(real.size());
  for (std::size_t i = 0; i < real.size(); ++i) data_[i] = {real[i], 0.0};
}

Tensor ComplexTensor::real() const {
  Tensor out(dims_);
  for (std::size_t i = 0; i < data_.size(); ++i) out[i] = data_[i].real();
  return out;
}

Tensor ComplexTensor::imag() const {
  Tensor out(dims_);
  for (std::size_t i = 0; i < data_.size(); ++i) out[i] = data_[i].imag();
  return out;
}

ComplexTensor ComplexTensor::from_parts(const Tensor& re, const Tensor& im) {
  expect_dims(im.dims(), re.dims(), "complex from parts");
  ComplexTensor out(re.dims());
  for (std::size_t i = 0; i < re.size(); ++i) out[i] = {re[i], im[i]};
  return out;
}

}  // namespace mgdfis
