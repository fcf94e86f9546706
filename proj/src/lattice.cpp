#include "synthvol/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "synthvol/simd/kernels.hpp"

namespace synthvol::lattice {
namespace {

constexpr double kSaturation = 1e-9;

bool finite(double x) { return std::isfinite(x); }

double effective_sigma(double sigma) { return std::max(sigma, kMinSigma); }

// Backward induction over a tree described by `geom`. Work buffers are
// per-thread so concurrent pricing never shares state.
double roll_back(const TreeGeometry& geom, const ContractSpec& contract) {
  thread_local std::vector<double> values;
  thread_local std::vector<double> spots;
  const int n = geom.steps;
  values.resize(static_cast<std::size_t>(n) + 1);
  spots.resize(static_cast<std::size_t>(n) + 1);

  const double phi = parity_sign(contract.parity);
  const double log_up = std::log(geom.up);
  const double log_down = std::log(geom.down);
  for (int i = 0; i <= n; ++i) {
    spots[i] = geom.spot * std::exp(i * log_up + (n - i) * log_down);
    values[i] = std::max(phi * (spots[i] - contract.strike), 0.0);
  }

  const double disc = std::exp(-contract.rate * geom.dt);
  simd::RollbackParams params;
  params.disc_up = disc * geom.prob_up;
  params.disc_down = disc * (1.0 - geom.prob_up);
  params.spot_step = 1.0 / geom.down;
  params.strike = contract.strike;
  params.parity = phi;
  params.early_exercise = contract.style == Style::American;

  const auto rollback = simd::active_kernels().rollback;
  for (int layer = n - 1; layer >= 0; --layer) {
    rollback(values.data(), spots.data(), static_cast<std::size_t>(layer) + 1, params);
  }
  return values[0];
}

// Limit of a tree whose branching probability is 0 or 1: the spot follows
// its forward deterministically and the holder exercises at the best step.
double deterministic_path_price(double spot, const ContractSpec& contract, int steps) {
  const double dt = contract.tau / steps;
  const double growth = std::exp((contract.rate - contract.dividend) * dt);
  const double disc = std::exp(-contract.rate * dt);
  if (contract.style == Style::European) {
    const double terminal = spot * std::pow(growth, steps);
    return std::pow(disc, steps) * intrinsic(terminal, contract.strike, contract.parity);
  }
  double best = 0.0;
  double s = spot;
  double d = 1.0;
  for (int k = 0; k <= steps; ++k) {
    best = std::max(best, d * intrinsic(s, contract.strike, contract.parity));
    s *= growth;
    d *= disc;
  }
  return best;
}

}  // namespace

double TreeGeometry::terminal_node(int i) const {
  return spot * std::exp(i * std::log(up) + (steps - i) * std::log(down));
}

double intrinsic(double spot, double strike, Parity parity) noexcept {
  return std::max(parity_sign(parity) * (spot - strike), 0.0);
}

void validate_inputs(double spot, const ContractSpec& contract, double sigma, int steps) {
  if (!finite(spot) || spot <= 0.0) throw LatticeError("spot must be finite and positive");
  if (!finite(contract.strike) || contract.strike <= 0.0) throw LatticeError("strike must be finite and positive");
  if (!finite(contract.tau)) throw LatticeError("tau must be finite");
  if (contract.tau < 0.0) throw LatticeError("tau must be non-negative");
  if (!finite(contract.rate) || !finite(contract.dividend)) throw LatticeError("rate and dividend must be finite");
  if (!finite(sigma) || sigma < 0.0) throw LatticeError("sigma must be finite and non-negative");
  if (steps < 2) throw LatticeError("lattice needs at least 2 steps");
}

TreeGeometry crr_geometry(double spot, const ContractSpec& contract, double sigma, int steps) {
  validate_inputs(spot, contract, sigma, steps);
  TreeGeometry g;
  g.spot = spot;
  g.steps = steps;
  g.dt = contract.tau / steps;
  const double vol = effective_sigma(sigma);
  g.up = std::exp(vol * std::sqrt(g.dt));
  g.down = 1.0 / g.up;
  const double growth = std::exp((contract.rate - contract.dividend) * g.dt);
  g.prob_up = (growth - g.down) / (g.up - g.down);
  if (!(g.prob_up >= 0.0 && g.prob_up <= 1.0)) {
    throw LatticeError("CRR risk-neutral probability " + std::to_string(g.prob_up) +
                       " outside [0, 1]; sigma*sqrt(dt) too small for the carry");
  }
  return g;
}

double peizer_pratt_inverse(double z, int steps) {
  // h(z; n) = 1/2 + sign(z)/2 * sqrt(1 - exp(-(z / (n + 1/3 + 0.1/(n+1)))^2 * (n + 1/6)))
  const double n = static_cast<double>(steps);
  const double denom = n + 1.0 / 3.0 + 0.1 / (n + 1.0);
  const double ratio = z / denom;
  const double root = std::sqrt(std::max(0.0, 1.0 - std::exp(-ratio * ratio * (n + 1.0 / 6.0))));
  return 0.5 + std::copysign(0.5 * root, z);
}

TreeGeometry lr_geometry(double spot, const ContractSpec& contract, double sigma, int steps) {
  validate_inputs(spot, contract, sigma, steps);
  if (steps % 2 == 0) throw LatticeError("Leisen-Reimer needs an odd step count, got " + std::to_string(steps));
  TreeGeometry g;
  g.spot = spot;
  g.steps = steps;
  g.dt = contract.tau / steps;
  const double vol = effective_sigma(sigma);
  const double carry = contract.rate - contract.dividend;
  const double vol_t = vol * std::sqrt(contract.tau);
  const double d1 = (std::log(spot / contract.strike) + (carry + 0.5 * vol * vol) * contract.tau) / vol_t;
  const double d2 = d1 - vol_t;
  const double growth = std::exp(carry * g.dt);

  // p = h(d2), p' = h(d1); u = e^{(r-q)dt} p'/p, d = (e^{(r-q)dt} - p u) / (1 - p).
  const double p = peizer_pratt_inverse(d2, steps);
  const double p_tilde = peizer_pratt_inverse(d1, steps);
  if (p < kSaturation || p > 1.0 - kSaturation || p_tilde < kSaturation || p_tilde > 1.0 - kSaturation) {
    g.degenerate = true;
    g.prob_up = p >= 0.5 ? 1.0 : 0.0;
    g.up = growth;
    g.down = growth;
    return g;
  }
  g.prob_up = p;
  g.up = growth * p_tilde / p;
  g.down = (growth - p * g.up) / (1.0 - p);
  return g;
}

double crr_price(double spot, const ContractSpec& contract, double sigma, int steps) {
  validate_inputs(spot, contract, sigma, steps);
  if (contract.tau == 0.0) return intrinsic(spot, contract.strike, contract.parity);
  return roll_back(crr_geometry(spot, contract, sigma, steps), contract);
}

double lr_price(double spot, const ContractSpec& contract, double sigma, int steps) {
  validate_inputs(spot, contract, sigma, steps);
  if (steps % 2 == 0) throw LatticeError("Leisen-Reimer needs an odd step count, got " + std::to_string(steps));
  if (contract.tau == 0.0) return intrinsic(spot, contract.strike, contract.parity);
  const TreeGeometry g = lr_geometry(spot, contract, sigma, steps);
  if (g.degenerate) return deterministic_path_price(spot, contract, steps);
  return roll_back(g, contract);
}

double price(double spot, const ContractSpec& contract, double sigma, const LatticeSpec& lattice) {
  return lattice.kind == LatticeKind::CRR ? crr_price(spot, contract, sigma, lattice.steps)
                                          : lr_price(spot, contract, sigma, lattice.steps);
}

GreeksResult fd_greeks(double spot, const ContractSpec& contract, double sigma, const LatticeSpec& lattice,
                       double h_spot, double h_sigma) {
  if (!(h_spot > 0.0) || !(h_sigma > 0.0)) throw LatticeError("finite-difference bumps must be positive");
  if (!(spot * (1.0 - h_spot) > 0.0)) throw LatticeError("spot bump drives the spot non-positive");
  if (!(sigma - h_sigma > 0.0)) throw LatticeError("IV bump drives sigma non-positive");

  const double up_s = price(spot * (1.0 + h_spot), contract, sigma, lattice);
  const double down_s = price(spot * (1.0 - h_spot), contract, sigma, lattice);
  const double mid = price(spot, contract, sigma, lattice);
  const double up_v = price(spot, contract, sigma + h_sigma, lattice);
  const double down_v = price(spot, contract, sigma - h_sigma, lattice);

  const double step = h_spot * spot;
  GreeksResult out;
  out.delta = (up_s - down_s) / (2.0 * step);
  out.gamma = (up_s - 2.0 * mid + down_s) / (step * step);
  out.vega = (up_v - down_v) / (2.0 * h_sigma);
  out.vega_per_pct = out.vega * 0.01;
  out.gamma_aliasing = out.gamma < -1e-6;
  return out;
}

std::string to_string(Parity parity) { return parity == Parity::Call ? "call" : "put"; }

Parity parse_parity(const std::string& text) {
  if (text == "call" || text == "C" || text == "c" || text == "Call") return Parity::Call;
  if (text == "put" || text == "P" || text == "p" || text == "Put") return Parity::Put;
  throw std::invalid_argument("unknown parity '" + text + "'");
}

std::string to_string(LatticeKind kind) { return kind == LatticeKind::CRR ? "CRR" : "LR"; }

LatticeKind parse_lattice_kind(const std::string& text) {
  if (text == "CRR" || text == "crr") return LatticeKind::CRR;
  if (text == "LR" || text == "lr") return LatticeKind::LR;
  throw std::invalid_argument("unknown lattice kind '" + text + "'");
}

}  // namespace synthvol::lattice
