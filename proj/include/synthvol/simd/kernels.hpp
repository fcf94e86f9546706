#pragma once

// Data-parallel inner loops shared by the lattice and variance modules.
//
// Every kernel has a scalar reference implementation and an AVX2 variant.
// Both perform the same IEEE operations in the same order (no FMA), so the
// variants are required to agree bit-for-bit; tests/test_simd_kernels.cpp
// enforces that. The active variant is picked once at startup from CPUID and
// can be forced with SYNTHVOL_SIMD=scalar|avx2.

#include <cstddef>
#include <span>
#include <string_view>

namespace synthvol::simd {

enum class Isa { Scalar, Avx2 };

/// One backward-induction layer of a recombining binomial tree.
struct RollbackParams {
  double disc_down = 0.0;  // e^{-r dt} * (1 - p)
  double disc_up = 0.0;    // e^{-r dt} * p
  double spot_step = 1.0;  // S_layer[i] = S_{layer+1}[i] * spot_step, i.e. 1/d
  double strike = 0.0;
  double parity = 1.0;     // +1 call, -1 put
  bool early_exercise = false;
};

/// Reduces `values` from `nodes + 1` entries to `nodes` entries in place and
/// advances `spots` (length >= nodes) to the same layer.
using RollbackFn = void (*)(double* values, double* spots, std::size_t nodes,
                            const RollbackParams& params);

struct EulerParams {
  double kappa = 0.0;
  double sigma_v = 0.0;
  double dt = 0.0;
  double sqrt_dt = 0.0;
};

/// v[i] <- |v + kappa (theta - v) dt + sigma_v sqrt(max(v, 0)) sqrt(dt) z|
using EulerBatchFn = void (*)(double* v, const double* theta, const double* z,
                              std::size_t n, const EulerParams& params);

struct KernelTable {
  Isa isa;
  RollbackFn rollback;
  EulerBatchFn euler_batch;
};

bool isa_available(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

/// Kernel table for a specific ISA; throws if the CPU lacks it.
const KernelTable& kernels_for(Isa isa);

/// Kernel table chosen at first use (CPUID, overridable via SYNTHVOL_SIMD).
const KernelTable& active_kernels();

/// Test hook: pin the process-wide selection.
void force_isa(Isa isa);

// Reference scalar bodies, exposed so single-value callers share the exact
// arithmetic of the batched kernels.
inline double euler_update(double v, double theta, double z, const EulerParams& p) noexcept {
  const double drift = v + p.kappa * (theta - v) * p.dt;
  const double floor_v = v > 0.0 ? v : 0.0;
  const double shock = p.sigma_v * __builtin_sqrt(floor_v) * p.sqrt_dt * z;
  const double next = drift + shock;
  return __builtin_fabs(next);
}

namespace detail {
void rollback_scalar(double* values, double* spots, std::size_t nodes, const RollbackParams& params);
void euler_batch_scalar(double* v, const double* theta, const double* z, std::size_t n,
                        const EulerParams& params);
void rollback_avx2(double* values, double* spots, std::size_t nodes, const RollbackParams& params);
void euler_batch_avx2(double* v, const double* theta, const double* z, std::size_t n,
                      const EulerParams& params);
}  // namespace detail

}  // namespace synthvol::simd
