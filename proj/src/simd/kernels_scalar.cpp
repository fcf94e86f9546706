#include "synthvol/simd/kernels.hpp"

namespace synthvol::simd::detail {

void rollback_scalar(double* values, double* spots, std::size_t nodes, const RollbackParams& params) {
  const double dd = params.disc_down;
  const double du = params.disc_up;
  const double step = params.spot_step;
  if (!params.early_exercise) {
    for (std::size_t i = 0; i < nodes; ++i) {
      values[i] = dd * values[i] + du * values[i + 1];
      spots[i] = spots[i] * step;
    }
    return;
  }
  const double strike = params.strike;
  const double parity = params.parity;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double cont = dd * values[i] + du * values[i + 1];
    const double s = spots[i] * step;
    const double exercise = parity * (s - strike);
    // Same selection rule as MAXPD: first operand wins only if strictly greater.
    values[i] = cont > exercise ? cont : exercise;
    spots[i] = s;
  }
}

void euler_batch_scalar(double* v, const double* theta, const double* z, std::size_t n,
                        const EulerParams& params) {
  for (std::size_t i = 0; i < n; ++i) v[i] = euler_update(v[i], theta[i], z[i], params);
}

}  // namespace synthvol::simd::detail
