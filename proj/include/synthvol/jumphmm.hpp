#pragma once

// Jump hidden Markov model for daily excess growth rates.
//
// States are 1-based and ordered by growth-rate quantile: state 1 is the
// extreme left tail, state N the extreme right tail. Each state emits
// mu_k + drift_anchor + sigma_k * t_nu. At every step, with probability eps a
// Poisson(lambda) jump depth j (clamped to [1, n_tail]) forces the chain into
// tail state j (bottom, probability p_neg) or N + 1 - j (top).

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace synthvol::jumphmm {

using Rng = std::mt19937_64;

/// Independent stream for (base_seed, stream) pairs; used per path.
Rng stream_rng(std::uint64_t base_seed, std::uint64_t stream);

struct HMMParams {
  int n_states = 0;
  int n_tail = 0;
  std::vector<double> bin_edges;  // n_states - 1 ascending thresholds
  std::vector<double> mu;         // per state
  std::vector<double> sigma;      // per state, Student-t scale
  double nu = 5.0;
  std::vector<double> trans;      // row-major n_states x n_states, row-stochastic
  double eps = 0.02;
  double lambda = 1.0;
  double drift_anchor = 0.0002;
  double p_neg = 0.52;

  void validate() const;
  double transition(int from, int to) const { return trans[(from - 1) * n_states + (to - 1)]; }
  bool is_tail(int state) const { return state <= n_tail || state > n_states - n_tail; }
  /// Probability that a forced jump lands in `state`.
  double jump_probability(int state) const;
  /// One-step predictive state distribution given `previous` (0 = no history).
  std::vector<double> predictive(int previous) const;
};

struct CopulaSpec {
  std::vector<double> corr;  // row-major d x d
  double nu = 5.0;           // +inf selects the Gaussian limit
  int dim() const;
  void validate() const;
};

struct PathSet {
  int assets = 0;
  int steps = 0;
  std::vector<double> prices;  // assets x (steps + 1)
  std::vector<int> states;     // assets x steps
  std::vector<double> growth;  // assets x steps

  double price(int asset, int t) const { return prices[asset * (steps + 1) + t]; }
  int state(int asset, int t) const { return states[asset * steps + t]; }
  double growth_at(int asset, int t) const { return growth[asset * steps + t]; }
};

class HMMError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LaplaceFit {
  double location = 0.0;
  double scale = 1.0;
};

struct FitOptions {
  int n_states = 9;
  int n_tail = 2;
  double eps = 0.02;
  double lambda = 1.0;
  double drift_anchor = 0.0002;
  double p_neg = 0.52;
};

/// Maximum-likelihood Laplace fit: sample median and mean absolute deviation.
LaplaceFit fit_laplace(std::span<const double> returns);
double laplace_quantile(const LaplaceFit& fit, double p);
/// The k/N quantiles of the fitted Laplace, k = 1..N-1.
std::vector<double> laplace_bin_edges(const LaplaceFit& fit, int n_states);
/// State k holds values in (edge[k-2], edge[k-1]].
std::vector<int> assign_states(std::span<const double> returns, std::span<const double> edges);
/// Transition counts with +1 smoothing, normalised per row.
std::vector<double> estimate_transitions(std::span<const int> states, int n_states);
/// Maximum-likelihood degrees of freedom of a unit-variance Student-t, floored at 2.1.
double fit_unit_t_dof(std::span<const double> standardized);

HMMParams fit_jumphmm(std::span<const double> returns, const FitOptions& options = {});

/// initial_state = 0 draws the first state uniformly (equal-probability bins).
std::vector<int> simulate_states(const HMMParams& params, int steps, Rng& rng, int initial_state = 0);

struct EmissionDraws {
  std::vector<double> growth;
  std::vector<double> innovation;  // the t_nu draw rescaled to unit variance
};

EmissionDraws simulate_returns(const HMMParams& params, std::span<const int> states, Rng& rng);

std::vector<double> prices_from_growth(double spot, std::span<const double> growth);

PathSet simulate_joint(std::span<const HMMParams> assets, const CopulaSpec& copula, int steps,
                       std::span<const double> spots, Rng& rng);

/// Nine-state parameter set with the three stylised facts of daily equity
/// returns: heavy tails, no linear autocorrelation, volatility clustering.
HMMParams reference_params();

}  // namespace synthvol::jumphmm
