#include "dsf/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "dsf/errors.hpp"

namespace dsf {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.shape_ != shape_) {
    throw ShapeError("tensor add: shape " + other.shape_.str() + " vs " + shape_.str());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor Tensor::slice_batch(std::size_t first, std::size_t count) const {
  if (first + count > shape_.n) throw ShapeError("slice_batch: range exceeds batch " + shape_.str());
  Shape s = shape_;
  s.n = count;
  const std::size_t item = shape_.c * shape_.h * shape_.w;
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(first * item),
                          data_.begin() + static_cast<std::ptrdiff_t>((first + count) * item));
  return Tensor(s, std::move(out));
}

Tensor stack_batch(std::span<const Tensor> items) {
  if (items.empty()) throw ShapeError("stack_batch: no items");
  Shape s = items.front().shape();
  std::size_t total = 0;
  for (const Tensor& t : items) {
    Shape ts = t.shape();
    if (ts.c != s.c || ts.h != s.h || ts.w != s.w) {
      throw ShapeError("stack_batch: item shape " + ts.str() + " vs " + s.str());
    }
    total += ts.n;
  }
  s.n = total;
  std::vector<double> data;
  data.reserve(s.numel());
  for (const Tensor& t : items) data.insert(data.end(), t.values().begin(), t.values().end());
  return Tensor(s, std::move(data));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff: " + a.shape().str() + " vs " + b.shape().str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dsf
