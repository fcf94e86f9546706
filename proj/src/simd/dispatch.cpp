#include "synthvol/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace synthvol::simd {
namespace {

constexpr KernelTable kScalar{Isa::Scalar, &detail::rollback_scalar, &detail::euler_batch_scalar};
constexpr KernelTable kAvx2{Isa::Avx2, &detail::rollback_avx2, &detail::euler_batch_avx2};

Isa detect() {
  if (const char* env = std::getenv("SYNTHVOL_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<const KernelTable*>& selected() {
  static std::atomic<const KernelTable*> table{detect() == Isa::Avx2 ? &kAvx2 : &kScalar};
  return table;
}

}  // namespace

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(__i386__)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::Avx2 ? "avx2" : "scalar";
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) throw std::runtime_error("ISA not supported on this CPU: " + std::string(isa_name(isa)));
  return isa == Isa::Avx2 ? kAvx2 : kScalar;
}

const KernelTable& active_kernels() { return *selected().load(std::memory_order_relaxed); }

void force_isa(Isa isa) { selected().store(&kernels_for(isa), std::memory_order_relaxed); }

}  // namespace synthvol::simd
