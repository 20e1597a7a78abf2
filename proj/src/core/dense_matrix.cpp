#include "jncf/core/dense_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "jncf/core/errors.hpp"
#include "jncf/core/parameter.hpp"

namespace jncf {

std::string Shape::str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : shape_{rows, cols}, values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("DenseMatrix: " + std::to_string(values_.size()) +
                     " values for shape " + shape_.str());
  }
}

DenseMatrix DenseMatrix::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return DenseMatrix(n, 1, std::move(values));
}

void DenseMatrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool DenseMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

Parameter::Parameter(std::string name_, std::size_t rows, std::size_t cols)
    : name(std::move(name_)),
      value(rows, cols),
      grad(rows, cols),
      adam_m(rows, cols),
      adam_v(rows, cols) {}

}  // namespace jncf
