#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace jncf {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Row-major matrix of doubles. Vectors are stored as rows x 1.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix column(std::vector<double> values);

  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * shape_.cols, shape_.cols}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * shape_.cols, shape_.cols};
  }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_.cols + c]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  void fill(double v);
  bool all_finite() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

}  // namespace jncf
