#include "synthvol/variance.hpp"

#include <cmath>

#include "synthvol/simd/kernels.hpp"

namespace synthvol::variance {
namespace {

simd::EulerParams kernel_params(const HestonParams& p) {
  return {p.kappa, p.sigma_v, p.dt, std::sqrt(p.dt)};
}

}  // namespace

void HestonParams::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw VarianceError("kappa must be positive");
  if (!(sigma_v >= 0.0) || !std::isfinite(sigma_v)) throw VarianceError("sigma_v must be non-negative");
  if (!(std::fabs(rho) <= 1.0)) throw VarianceError("rho must lie in [-1, 1]");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw VarianceError("dt must be positive");
  if (!(kappa * dt < 1.0)) throw VarianceError("kappa * dt must be below 1 for a stable Euler step");
}

double TickerLevel::at(int state) const {
  if (!per_state()) return theta;
  if (state < 1 || state > static_cast<int>(state_multipliers.size())) {
    throw VarianceError("state " + std::to_string(state) + " outside the per-state level vector");
  }
  return theta * state_multipliers[state - 1];
}

std::vector<double> tail_multipliers(int n_states, int n_tail, double tail_multiplier) {
  if (n_states < 1 || n_tail < 0 || 2 * n_tail > n_states) throw VarianceError("invalid state layout");
  if (!(tail_multiplier > 0.0)) throw VarianceError("tail multiplier must be positive");
  std::vector<double> m(n_states, 1.0);
  for (int k = 0; k < n_tail; ++k) {
    m[k] = tail_multiplier;
    m[n_states - 1 - k] = tail_multiplier;
  }
  return m;
}

void ThetaSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw VarianceError("gamma must be non-negative");
  for (const auto& [ticker, lv] : levels) {
    if (!(lv.theta > 0.0) || !std::isfinite(lv.theta)) throw VarianceError("level for '" + ticker + "' must be positive");
    for (double m : lv.state_multipliers) {
      if (!(m > 0.0) || !std::isfinite(m)) throw VarianceError("state multipliers for '" + ticker + "' must be positive");
    }
  }
}

const TickerLevel& ThetaSpec::level(const std::string& ticker) const {
  const auto it = levels.find(ticker);
  if (it == levels.end()) throw VarianceError("no variance level for ticker '" + ticker + "'");
  return it->second;
}

ThetaSpec ThetaSpec::from_surface(const surface::SurfaceModel& model, double gamma) {
  ThetaSpec spec;
  spec.gamma = gamma;
  spec.shape = model.shape;
  for (const auto& [ticker, theta] : model.theta) spec.levels[ticker] = TickerLevel{theta, {}};
  spec.validate();
  return spec;
}

double market_mood(std::span<const int> states, int n_states, int n_tail) {
  if (states.empty()) throw VarianceError("market mood of an empty ticker set");
  int tail = 0;
  for (int s : states) {
    if (s < 1 || s > n_states) throw VarianceError("state out of range");
    if (s <= n_tail || s > n_states - n_tail) ++tail;
  }
  return static_cast<double>(tail) / static_cast<double>(states.size());
}

double theta_full(const std::string& ticker, int state, double mood, const surface::SurfacePoint& point,
                  const ThetaSpec& spec) {
  if (!(mood >= 0.0 && mood <= 1.0)) throw VarianceError("market mood must lie in [0, 1]");
  return spec.level(ticker).at(state) * (1.0 + spec.gamma * mood) * spec.shape.psi(point);
}

double theta_cal(const std::string& ticker, const surface::SurfacePoint& point, const ThetaSpec& spec) {
  return spec.level(ticker).theta * spec.shape.psi(point);
}

double equilibrium_init(const std::string& ticker, const surface::SurfacePoint& point, int state, double mood,
                        const ThetaSpec& spec) {
  return theta_full(ticker, state, mood, point, spec);
}

double equilibrium_init(const std::string& ticker, const surface::SurfacePoint& point, const ThetaSpec& spec) {
  return theta_cal(ticker, point, spec);
}

double euler_step(double v, double theta, const HestonParams& p, double z) {
  return simd::euler_update(v, theta, z, kernel_params(p));
}

void euler_step_batch(std::span<double> v, std::span<const double> theta, std::span<const double> z,
                      const HestonParams& p) {
  if (theta.size() != v.size() || z.size() != v.size()) throw VarianceError("batch lengths differ");
  simd::active_kernels().euler_batch(v.data(), theta.data(), z.data(), v.size(), kernel_params(p));
}

std::vector<double> simulate_variance_path(double v0, std::span<const double> theta_path, const HestonParams& p,
                                           std::span<const double> z_path) {
  p.validate();
  if (theta_path.size() != z_path.size()) throw VarianceError("target and shock paths differ in length");
  if (!(v0 >= 0.0)) throw VarianceError("initial variance must be non-negative");
  std::vector<double> v(theta_path.size() + 1);
  v[0] = v0;
  const auto kp = kernel_params(p);
  for (std::size_t t = 0; t < theta_path.size(); ++t) v[t + 1] = simd::euler_update(v[t], theta_path[t], z_path[t], kp);
  return v;
}

double leverage_draw(double rho, double z_s, double z_perp) {
  return rho * z_s + std::sqrt(1.0 - rho * rho) * z_perp;
}

LeveragedPath simulate_variance_path(double v0, std::span<const double> theta_path, const HestonParams& p,
                                     std::span<const double> z_s, std::span<const double> z_perp) {
  if (z_s.size() != theta_path.size() || z_perp.size() != theta_path.size()) {
    throw VarianceError("target and shock paths differ in length");
  }
  LeveragedPath out;
  out.z_v.resize(theta_path.size());
  for (std::size_t t = 0; t < theta_path.size(); ++t) out.z_v[t] = leverage_draw(p.rho, z_s[t], z_perp[t]);
  out.v = simulate_variance_path(v0, theta_path, p, out.z_v);
  return out;
}

}  // namespace synthvol::variance
