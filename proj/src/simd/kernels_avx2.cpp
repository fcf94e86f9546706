#include "synthvol/simd/kernels.hpp"

#include <immintrin.h>

namespace synthvol::simd::detail {

void rollback_avx2(double* values, double* spots, std::size_t nodes, const RollbackParams& params) {
  const __m256d dd = _mm256_set1_pd(params.disc_down);
  const __m256d du = _mm256_set1_pd(params.disc_up);
  const __m256d step = _mm256_set1_pd(params.spot_step);
  const __m256d strike = _mm256_set1_pd(params.strike);
  const __m256d parity = _mm256_set1_pd(params.parity);

  // In-place is safe walking upward: block i reads values[i..i+4] before it
  // writes values[i..i+3], and values[i+4] is rewritten only by the next block.
  std::size_t i = 0;
  for (; i + 4 <= nodes; i += 4) {
    const __m256d lo = _mm256_loadu_pd(values + i);
    const __m256d hi = _mm256_loadu_pd(values + i + 1);
    __m256d cont = _mm256_add_pd(_mm256_mul_pd(dd, lo), _mm256_mul_pd(du, hi));
    const __m256d s = _mm256_mul_pd(_mm256_loadu_pd(spots + i), step);
    if (params.early_exercise) {
      const __m256d exercise = _mm256_mul_pd(parity, _mm256_sub_pd(s, strike));
      cont = _mm256_max_pd(cont, exercise);
    }
    _mm256_storeu_pd(values + i, cont);
    _mm256_storeu_pd(spots + i, s);
  }
  if (i < nodes) {
    RollbackParams tail = params;
    rollback_scalar(values + i, spots + i, nodes - i, tail);
  }
}

void euler_batch_avx2(double* v, const double* theta, const double* z, std::size_t n,
                      const EulerParams& params) {
  const __m256d kappa = _mm256_set1_pd(params.kappa);
  const __m256d sigma_v = _mm256_set1_pd(params.sigma_v);
  const __m256d dt = _mm256_set1_pd(params.dt);
  const __m256d sqrt_dt = _mm256_set1_pd(params.sqrt_dt);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign = _mm256_set1_pd(-0.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vi = _mm256_loadu_pd(v + i);
    const __m256d th = _mm256_loadu_pd(theta + i);
    const __m256d zi = _mm256_loadu_pd(z + i);
    const __m256d drift =
        _mm256_add_pd(vi, _mm256_mul_pd(_mm256_mul_pd(kappa, _mm256_sub_pd(th, vi)), dt));
    const __m256d floor_v = _mm256_max_pd(vi, zero);
    const __m256d shock = _mm256_mul_pd(
        _mm256_mul_pd(_mm256_mul_pd(sigma_v, _mm256_sqrt_pd(floor_v)), sqrt_dt), zi);
    const __m256d next = _mm256_add_pd(drift, shock);
    _mm256_storeu_pd(v + i, _mm256_andnot_pd(sign, next));
  }
  for (; i < n; ++i) v[i] = euler_update(v[i], theta[i], z[i], params);
}

}  // namespace synthvol::simd::detail
