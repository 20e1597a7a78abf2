#include "jncf/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace jncf::simd {
namespace {

#if defined(JNCF_HAVE_AVX2)
bool cpu_has_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

const KernelTable* initial_table() {
  const char* env = std::getenv("JNCF_SIMD");
  const std::string forced = env ? env : "";
  if (forced == "scalar") return &detail::scalar_table();
  if (isa_supported(Isa::avx2)) return detail::avx2_table();
  return &detail::scalar_table();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

#if !defined(JNCF_HAVE_AVX2)
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(JNCF_HAVE_AVX2)
      return cpu_has_avx2();
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return active().load()->isa; }

void set_active_isa(Isa isa) { active().store(&kernels_for(isa)); }

const KernelTable& kernels() { return *active().load(std::memory_order_relaxed); }

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("SIMD variant '" + std::string(isa_name(isa)) +
                                "' is not available on this machine");
  }
  return isa == Isa::avx2 ? *detail::avx2_table() : detail::scalar_table();
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

}  // namespace jncf::simd
