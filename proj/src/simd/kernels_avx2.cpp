#include "jncf/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

// Compiled with -mavx2 -mfma -ffp-contract=off. Elementwise kernels use
// separate multiply and add so they round exactly like the scalar reference;
// only the reductions use FMA.

namespace jncf::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 16 <= n; k += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 8), _mm256_loadu_pd(b + k + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 12), _mm256_loadu_pd(b + k + 12), acc3);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    const __m256d p0 = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
    const __m256d p1 = _mm256_mul_pd(va, _mm256_loadu_pd(x + k + 4));
    _mm256_storeu_pd(y + k, _mm256_add_pd(_mm256_loadu_pd(y + k), p0));
    _mm256_storeu_pd(y + k + 4, _mm256_add_pd(_mm256_loadu_pd(y + k + 4), p1));
  }
  for (; k + 4 <= n; k += 4) {
    const __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
    _mm256_storeu_pd(y + k, _mm256_add_pd(_mm256_loadu_pd(y + k), p));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

// Four output rows per pass so each load of x feeds four FMAs.
void gemv_avx2(const double* w, const double* x, const double* b, double* y,
               std::size_t rows, std::size_t cols) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w + r * cols;
    const double* w1 = w0 + cols;
    const double* w2 = w1 + cols;
    const double* w3 = w2 + cols;
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= cols; k += 4) {
      const __m256d vx = _mm256_loadu_pd(x + k);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + k), vx, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + k), vx, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + k), vx, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + k), vx, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; k < cols; ++k) {
      s0 += w0[k] * x[k];
      s1 += w1[k] * x[k];
      s2 += w2[k] * x[k];
      s3 += w3[k] * x[k];
    }
    y[r] = s0 + (b ? b[r] : 0.0);
    y[r + 1] = s1 + (b ? b[r + 1] : 0.0);
    y[r + 2] = s2 + (b ? b[r + 2] : 0.0);
    y[r + 3] = s3 + (b ? b[r + 3] : 0.0);
  }
  for (; r < rows; ++r) {
    y[r] = dot_avx2(w + r * cols, x, cols) + (b ? b[r] : 0.0);
  }
}

void gemv_t_acc_avx2(const double* w, const double* g, double* out,
                     std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_avx2(g[r], w + r * cols, out, cols);
  }
}

void ger_acc_avx2(const double* g, const double* x, double* grad,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] != 0.0) axpy_avx2(g[r], x, grad + r * cols, cols);
  }
}

void adam_avx2(double* value, double* grad, double* m, double* v, std::size_t n,
               const AdamCoefficients& c) {
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.learning_rate);
  const __m256d eps = _mm256_set1_pd(c.epsilon);
  const __m256d scale = _mm256_set1_pd(c.grad_scale);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d g = _mm256_mul_pd(_mm256_loadu_pd(grad + k), scale);
    const __m256d mk = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + k)),
                                     _mm256_mul_pd(omb1, g));
    const __m256d vk = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + k)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + k, mk);
    _mm256_storeu_pd(v + k, vk);
    const __m256d m_hat = _mm256_mul_pd(mk, bc1);
    const __m256d v_hat = _mm256_mul_pd(vk, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(value + k, _mm256_sub_pd(_mm256_loadu_pd(value + k), step));
    _mm256_storeu_pd(grad + k, zero);
  }
  for (; k < n; ++k) {
    const double g = grad[k] * c.grad_scale;
    const double mk = c.beta1 * m[k] + (1.0 - c.beta1) * g;
    const double vk = c.beta2 * v[k] + (1.0 - c.beta2) * (g * g);
    m[k] = mk;
    v[k] = vk;
    value[k] -= c.learning_rate * (mk * c.bias_correction1) /
                (std::sqrt(vk * c.bias_correction2) + c.epsilon);
    grad[k] = 0.0;
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::avx2,     dot_avx2,        axpy_avx2,
                                 gemv_avx2,     gemv_t_acc_avx2, ger_acc_avx2,
                                 adam_avx2};
  return &table;
}

}  // namespace jncf::simd::detail
