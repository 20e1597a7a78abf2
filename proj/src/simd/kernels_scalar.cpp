#include "jncf/simd/kernels.hpp"

#include <cmath>

namespace jncf::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void gemv_scalar(const double* w, const double* x, const double* b, double* y,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_scalar(w + r * cols, x, cols) + (b ? b[r] : 0.0);
  }
}

void gemv_t_acc_scalar(const double* w, const double* g, double* out,
                       std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_scalar(g[r], w + r * cols, out, cols);
  }
}

void ger_acc_scalar(const double* g, const double* x, double* grad,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_scalar(g[r], x, grad + r * cols, cols);
  }
}

void adam_scalar(double* value, double* grad, double* m, double* v,
                 std::size_t n, const AdamCoefficients& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t k = 0; k < n; ++k) {
    const double g = grad[k] * c.grad_scale;
    const double mk = c.beta1 * m[k] + one_minus_b1 * g;
    const double vk = c.beta2 * v[k] + one_minus_b2 * (g * g);
    m[k] = mk;
    v[k] = vk;
    const double m_hat = mk * c.bias_correction1;
    const double v_hat = vk * c.bias_correction2;
    value[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    grad[k] = 0.0;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar,       dot_scalar,     axpy_scalar,
                                 gemv_scalar,       gemv_t_acc_scalar,
                                 ger_acc_scalar,    adam_scalar};
  return table;
}

}  // namespace jncf::simd::detail
