#pragma once

#include <cstdint>
#include <string>

#include "jncf/core/dense_matrix.hpp"

namespace jncf {

// A trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::size_t rows, std::size_t cols);

  std::string name;
  DenseMatrix value;
  DenseMatrix grad;
  DenseMatrix adam_m;
  DenseMatrix adam_v;
  std::uint64_t step_count = 0;

  Shape shape() const { return value.shape(); }
  std::size_t size() const { return value.size(); }
  void zero_grad() { grad.fill(0.0); }
};

}  // namespace jncf
