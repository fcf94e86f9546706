#pragma once

// Mean-reverting variance with a time-varying target:
//   theta(i, t) = theta_{i, s_t} * (1 + gamma * M_t) * psi(tau, m, e, e_peer)
// stepped by explicit Euler with reflection at zero.

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthvol/surface.hpp"

namespace synthvol::variance {

class VarianceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct HestonParams {
  double kappa = 2.0;
  double sigma_v = 0.5;
  double rho = -0.6;
  double dt = 1.0 / 252.0;

  /// Also requires kappa * dt < 1.
  void validate() const;
};

/// Level for one ticker: a scalar theta_i, optionally scaled per HMM state.
struct TickerLevel {
  double theta = 0.0;
  std::vector<double> state_multipliers;  // empty = scalar level

  bool per_state() const { return !state_multipliers.empty(); }
  /// state is 1-based; ignored for a scalar level.
  double at(int state) const;
};

/// 1.0 on interior states, `tail_multiplier` on the n_tail states at each end.
std::vector<double> tail_multipliers(int n_states, int n_tail, double tail_multiplier);

struct ThetaSpec {
  std::map<std::string, TickerLevel> levels;
  double gamma = 0.0;
  surface::ShapeModel shape;

  void validate() const;
  const TickerLevel& level(const std::string& ticker) const;

  /// Scalar levels taken from a fitted surface model.
  static ThetaSpec from_surface(const surface::SurfaceModel& model, double gamma = 0.0);
};

/// Fraction of tickers sitting in a tail state.
double market_mood(std::span<const int> states, int n_states, int n_tail);

double theta_full(const std::string& ticker, int state, double mood, const surface::SurfacePoint& point,
                  const ThetaSpec& spec);
/// gamma = 0 and the scalar level: theta_i * psi.
double theta_cal(const std::string& ticker, const surface::SurfacePoint& point, const ThetaSpec& spec);

/// v0 is the target itself; there is no other way to set it.
double equilibrium_init(const std::string& ticker, const surface::SurfacePoint& point, int state, double mood,
                        const ThetaSpec& spec);
double equilibrium_init(const std::string& ticker, const surface::SurfacePoint& point, const ThetaSpec& spec);

double euler_step(double v, double theta, const HestonParams& p, double z);

/// One step for a batch of independent variances, in place (runtime-dispatched kernel).
void euler_step_batch(std::span<double> v, std::span<const double> theta, std::span<const double> z,
                      const HestonParams& p);

/// v[0] = v0, v[t+1] = euler_step(v[t], theta[t], z[t]).
std::vector<double> simulate_variance_path(double v0, std::span<const double> theta_path, const HestonParams& p,
                                           std::span<const double> z_path);

struct LeveragedPath {
  std::vector<double> v;    // steps + 1
  std::vector<double> z_v;  // steps
};

/// Z_v = rho Z_S + sqrt(1 - rho^2) Z_perp per step.
double leverage_draw(double rho, double z_s, double z_perp);

LeveragedPath simulate_variance_path(double v0, std::span<const double> theta_path, const HestonParams& p,
                                     std::span<const double> z_s, std::span<const double> z_perp);

}  // namespace synthvol::variance
