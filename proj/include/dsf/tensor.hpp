#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dsf {

/// (batch, channels, rows, cols)
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t numel() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense rank-4 tensor of doubles, row-major NCHW.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t n() const { return shape_.n; }
  std::size_t c() const { return shape_.c; }
  std::size_t h() const { return shape_.h; }
  std::size_t w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const {
    return ((b * shape_.c + ch) * shape_.h + y) * shape_.w + x;
  }
  double& at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) {
    return data_[offset(b, ch, y, x)];
  }
  double at(std::size_t b, std::size_t ch, std::size_t y, std::size_t x) const {
    return data_[offset(b, ch, y, x)];
  }

  /// Pointer to the (b, ch) spatial plane.
  double* plane(std::size_t b, std::size_t ch) { return data_.data() + offset(b, ch, 0, 0); }
  const double* plane(std::size_t b, std::size_t ch) const {
    return data_.data() + offset(b, ch, 0, 0);
  }

  void fill(double v);
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

  /// Copy of batch items [first, first + count).
  Tensor slice_batch(std::size_t first, std::size_t count) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Stack single-item tensors along the batch axis.
Tensor stack_batch(std::span<const Tensor> items);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace dsf
