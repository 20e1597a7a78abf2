#pragma once

// Dense double-precision inner loops used by every layer and optimizer.
//
// Each kernel has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant. The variant is picked once at startup from CPUID and can be
// forced with the JNCF_SIMD environment variable ("scalar" or "avx2") or
// with set_active_isa(). Reductions (dot, gemv) may differ from the scalar
// reference by summation order; elementwise kernels (axpy, ger, adam) are
// bit-identical across variants.

#include <cstddef>
#include <span>
#include <string_view>

namespace jncf::simd {

enum class Isa { scalar, avx2 };

struct AdamCoefficients {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 / (1 - beta1^t)
  double bias_correction2;  // 1 / (1 - beta2^t)
  double grad_scale;        // applied to the raw gradient before the moments
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x + b, W row-major rows x cols; b may be null
  void (*gemv)(const double* w, const double* x, const double* b, double* y,
               std::size_t rows, std::size_t cols);
  // out += W^T g
  void (*gemv_t_acc)(const double* w, const double* g, double* out,
                     std::size_t rows, std::size_t cols);
  // G += g x^T
  void (*ger_acc)(const double* g, const double* x, double* grad,
                  std::size_t rows, std::size_t cols);
  // Adam update of n coordinates; grad is zeroed on return.
  void (*adam)(double* value, double* grad, double* m, double* v, std::size_t n,
               const AdamCoefficients& c);
};

bool isa_supported(Isa isa);
Isa active_isa();
// Throws std::invalid_argument if the ISA is not available on this CPU/build.
void set_active_isa(Isa isa);
const KernelTable& kernels();
const KernelTable& kernels_for(Isa isa);
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // null when not compiled in
}  // namespace detail

}  // namespace jncf::simd
