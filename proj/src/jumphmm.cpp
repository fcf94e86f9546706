#include "synthvol/jumphmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>

namespace synthvol::jumphmm {
namespace {

constexpr double kNuFloor = 2.1;
constexpr double kNuCeiling = 500.0;

double unit_t_scale(double nu) { return std::sqrt(nu / (nu - 2.0)); }

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

// Per-row CDFs for inverse-transform sampling of the Markov step.
std::vector<double> cumulative_rows(const HMMParams& p) {
  std::vector<double> cdf(p.trans.size());
  for (int r = 0; r < p.n_states; ++r) {
    double acc = 0.0;
    for (int c = 0; c < p.n_states; ++c) {
      acc += p.trans[r * p.n_states + c];
      cdf[r * p.n_states + c] = acc;
    }
    cdf[r * p.n_states + p.n_states - 1] = 1.0;
  }
  return cdf;
}

int draw_from_cdf(const double* cdf, int n, double u) {
  for (int k = 0; k < n; ++k) {
    if (u < cdf[k]) return k + 1;
  }
  return n;
}

}  // namespace

Rng stream_rng(std::uint64_t base_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

void HMMParams::validate() const {
  if (n_states < 2) throw HMMError("HMM needs at least two states");
  if (n_tail < 1 || 2 * n_tail >= n_states) throw HMMError("need 1 <= n_tail and 2*n_tail < n_states");
  const auto n = static_cast<std::size_t>(n_states);
  if (mu.size() != n || sigma.size() != n) throw HMMError("mu/sigma length must equal n_states");
  if (!bin_edges.empty() && bin_edges.size() != n - 1) throw HMMError("bin_edges must hold n_states - 1 values");
  if (trans.size() != n * n) throw HMMError("transition matrix must be n_states x n_states");
  for (double s : sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw HMMError("emission scales must be finite and non-negative");
  }
  if (!(nu > 2.0)) throw HMMError("nu must exceed 2");
  for (int r = 0; r < n_states; ++r) {
    double sum = 0.0;
    for (int c = 0; c < n_states; ++c) {
      const double v = trans[r * n_states + c];
      if (!(v >= 0.0)) throw HMMError("transition probabilities must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw HMMError("transition row " + std::to_string(r + 1) + " does not sum to 1");
  }
  if (!(eps >= 0.0 && eps <= 1.0)) throw HMMError("eps must lie in [0, 1]");
  if (!(lambda > 0.0)) throw HMMError("lambda must be positive");
  if (!(p_neg >= 0.0 && p_neg <= 1.0)) throw HMMError("p_neg must lie in [0, 1]");
  if (!std::isfinite(drift_anchor)) throw HMMError("drift_anchor must be finite");
}

double HMMParams::jump_probability(int state) const {
  if (!is_tail(state)) return 0.0;
  const bool bottom = state <= n_tail;
  const int depth = bottom ? state : n_states + 1 - state;
  const double side = bottom ? p_neg : 1.0 - p_neg;
  // Depth ~ Poisson(lambda) clamped to [1, n_tail].
  std::vector<double> pmf(static_cast<std::size_t>(n_tail) + 1);
  pmf[0] = std::exp(-lambda);
  for (int j = 1; j <= n_tail; ++j) pmf[j] = pmf[j - 1] * lambda / j;
  double mass = 0.0;
  if (depth == n_tail) {
    double below = 0.0;
    for (int j = 0; j < n_tail; ++j) below += pmf[j];
    mass = n_tail == 1 ? 1.0 : 1.0 - below;
  } else if (depth == 1) {
    mass = pmf[0] + pmf[1];
  } else {
    mass = pmf[depth];
  }
  return side * mass;
}

std::vector<double> HMMParams::predictive(int previous) const {
  std::vector<double> w(static_cast<std::size_t>(n_states));
  if (previous == 0) {
    std::fill(w.begin(), w.end(), 1.0 / n_states);
    return w;
  }
  for (int k = 1; k <= n_states; ++k) {
    w[k - 1] = (1.0 - eps) * transition(previous, k) + eps * jump_probability(k);
  }
  return w;
}

int CopulaSpec::dim() const {
  const auto d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(corr.size()))));
  return d;
}

void CopulaSpec::validate() const {
  const int d = dim();
  if (d < 1 || static_cast<std::size_t>(d * d) != corr.size()) throw HMMError("correlation matrix must be square");
  if (!(nu > 2.0)) throw HMMError("copula degrees of freedom must exceed 2");
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = corr[i * d + j];
  }
  for (int i = 0; i < d; ++i) {
    if (std::abs(m(i, i) - 1.0) > 1e-12) throw HMMError("correlation matrix needs a unit diagonal");
    for (int j = 0; j < i; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-12) throw HMMError("correlation matrix must be symmetric");
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw HMMError("correlation matrix is not positive definite");
  }
}

LaplaceFit fit_laplace(std::span<const double> returns) {
  if (returns.empty()) throw HMMError("cannot fit a Laplace distribution to an empty series");
  LaplaceFit fit;
  fit.location = median_of({returns.begin(), returns.end()});
  double total = 0.0;
  for (double r : returns) total += std::abs(r - fit.location);
  fit.scale = total / static_cast<double>(returns.size());
  if (!(fit.scale > 0.0)) throw HMMError("Laplace scale is zero: the series is constant");
  return fit;
}

double laplace_quantile(const LaplaceFit& fit, double p) {
  if (p < 0.5) return fit.location + fit.scale * std::log(2.0 * p);
  return fit.location - fit.scale * std::log(2.0 * (1.0 - p));
}

std::vector<double> laplace_bin_edges(const LaplaceFit& fit, int n_states) {
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(n_states) - 1);
  for (int k = 1; k < n_states; ++k) edges.push_back(laplace_quantile(fit, static_cast<double>(k) / n_states));
  return edges;
}

std::vector<int> assign_states(std::span<const double> returns, std::span<const double> edges) {
  std::vector<int> states;
  states.reserve(returns.size());
  for (double r : returns) {
    const auto above = std::lower_bound(edges.begin(), edges.end(), r) - edges.begin();
    states.push_back(static_cast<int>(above) + 1);
  }
  return states;
}

std::vector<double> estimate_transitions(std::span<const int> states, int n_states) {
  std::vector<double> counts(static_cast<std::size_t>(n_states * n_states), 1.0);
  for (std::size_t t = 1; t < states.size(); ++t) {
    counts[(states[t - 1] - 1) * n_states + (states[t] - 1)] += 1.0;
  }
  for (int r = 0; r < n_states; ++r) {
    double sum = 0.0;
    for (int c = 0; c < n_states; ++c) sum += counts[r * n_states + c];
    for (int c = 0; c < n_states; ++c) counts[r * n_states + c] /= sum;
  }
  return counts;
}

double fit_unit_t_dof(std::span<const double> standardized) {
  if (standardized.empty()) throw HMMError("no residuals to fit degrees of freedom");
  auto negative_loglik = [&](double log_nu) {
    const double nu = std::exp(log_nu);
    const double scale = 1.0 / unit_t_scale(nu);  // x = scale * t
    const double norm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
                        std::log(scale);
    double ll = 0.0;
    for (double x : standardized) {
      const double t = x / scale;
      ll += norm - 0.5 * (nu + 1.0) * std::log1p(t * t / nu);
    }
    return -ll;
  };
  const auto best = boost::math::tools::brent_find_minima(negative_loglik, std::log(kNuFloor), std::log(kNuCeiling), 40);
  return std::max(kNuFloor, std::exp(best.first));
}

HMMParams fit_jumphmm(std::span<const double> returns, const FitOptions& options) {
  const int n = options.n_states;
  if (n < 3) throw HMMError("fit needs at least 3 states");
  if (options.n_tail < 1 || 2 * options.n_tail >= n) throw HMMError("need 1 <= n_tail and 2*n_tail < n_states");
  if (returns.size() < static_cast<std::size_t>(10 * n)) {
    throw HMMError("series too short: need at least " + std::to_string(10 * n) + " observations");
  }

  std::vector<double> centered(returns.begin(), returns.end());
  for (double& r : centered) r -= options.drift_anchor;

  const LaplaceFit laplace = fit_laplace(centered);
  const std::vector<double> edges = laplace_bin_edges(laplace, n);
  const std::vector<int> states = assign_states(centered, edges);

  HMMParams p;
  p.n_states = n;
  p.n_tail = options.n_tail;
  p.eps = options.eps;
  p.lambda = options.lambda;
  p.drift_anchor = options.drift_anchor;
  p.p_neg = options.p_neg;
  p.trans = estimate_transitions(states, n);
  p.bin_edges = edges;
  for (double& e : p.bin_edges) e += options.drift_anchor;

  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < centered.size(); ++i) {
    const int k = states[i] - 1;
    sum[k] += centered[i];
    count[k] += 1;
  }
  p.mu.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    if (count[k] < 2) {
      throw HMMError("state " + std::to_string(k + 1) + " has fewer than two observations; duplicated values dominate");
    }
    p.mu[k] = sum[k] / static_cast<double>(count[k]);
  }
  for (std::size_t i = 0; i < centered.size(); ++i) {
    const int k = states[i] - 1;
    const double d = centered[i] - p.mu[k];
    sum_sq[k] += d * d;
  }
  std::vector<double> sd(n);
  for (int k = 0; k < n; ++k) {
    sd[k] = std::sqrt(sum_sq[k] / static_cast<double>(count[k] - 1));
    if (!(sd[k] > 0.0)) throw HMMError("state " + std::to_string(k + 1) + " has zero dispersion");
  }

  std::vector<double> residuals(centered.size());
  for (std::size_t i = 0; i < centered.size(); ++i) {
    const int k = states[i] - 1;
    residuals[i] = (centered[i] - p.mu[k]) / sd[k];
  }
  p.nu = fit_unit_t_dof(residuals);
  p.sigma.resize(n);
  for (int k = 0; k < n; ++k) p.sigma[k] = sd[k] / unit_t_scale(p.nu);
  p.validate();
  return p;
}

std::vector<int> simulate_states(const HMMParams& params, int steps, Rng& rng, int initial_state) {
  params.validate();
  if (steps < 1) throw HMMError("need at least one step");
  if (initial_state < 0 || initial_state > params.n_states) throw HMMError("initial state out of range");
  const auto cdf = cumulative_rows(params);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::bernoulli_distribution jump(params.eps);
  std::bernoulli_distribution bottom(params.p_neg);
  std::poisson_distribution<int> depth(params.lambda);

  std::vector<int> path;
  path.reserve(static_cast<std::size_t>(steps));
  int state = initial_state;
  if (state == 0) state = std::uniform_int_distribution<int>(1, params.n_states)(rng);
  path.push_back(state);
  for (int t = 1; t < steps; ++t) {
    if (jump(rng)) {
      const int j = std::clamp(depth(rng), 1, params.n_tail);
      state = bottom(rng) ? j : params.n_states + 1 - j;
    } else {
      state = draw_from_cdf(cdf.data() + (state - 1) * params.n_states, params.n_states, uniform(rng));
    }
    path.push_back(state);
  }
  return path;
}

EmissionDraws simulate_returns(const HMMParams& params, std::span<const int> states, Rng& rng) {
  params.validate();
  std::student_t_distribution<double> t(params.nu);
  const double unit = unit_t_scale(params.nu);
  EmissionDraws out;
  out.growth.reserve(states.size());
  out.innovation.reserve(states.size());
  for (int s : states) {
    if (s < 1 || s > params.n_states) throw HMMError("state outside 1..N");
    const double draw = t(rng);
    out.growth.push_back(params.mu[s - 1] + params.drift_anchor + params.sigma[s - 1] * draw);
    out.innovation.push_back(draw / unit);
  }
  return out;
}

std::vector<double> prices_from_growth(double spot, std::span<const double> growth) {
  if (!(spot > 0.0)) throw HMMError("initial spot must be positive");
  std::vector<double> prices;
  prices.reserve(growth.size() + 1);
  prices.push_back(spot);
  double s = spot;
  for (double g : growth) {
    s *= std::exp(g);
    prices.push_back(s);
  }
  return prices;
}

PathSet simulate_joint(std::span<const HMMParams> assets, const CopulaSpec& copula, int steps,
                       std::span<const double> spots, Rng& rng) {
  copula.validate();
  const int d = copula.dim();
  if (static_cast<std::size_t>(d) != assets.size()) throw HMMError("copula dimension must match the asset count");
  if (spots.size() != assets.size()) throw HMMError("need one initial spot per asset");
  if (steps < 1) throw HMMError("need at least one step");
  for (const auto& a : assets) a.validate();

  Eigen::MatrixXd corr(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) corr(i, j) = copula.corr[i * d + j];
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) throw HMMError("correlation matrix is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();

  const bool gaussian = !std::isfinite(copula.nu);
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi2(gaussian ? 1.0 : copula.nu);
  const boost::math::normal_distribution<double> std_normal;
  const boost::math::students_t_distribution<double> copula_t(gaussian ? 3.0 : copula.nu);

  std::vector<boost::math::students_t_distribution<double>> emission;
  for (const auto& a : assets) emission.emplace_back(a.nu);

  PathSet out;
  out.assets = d;
  out.steps = steps;
  out.prices.assign(static_cast<std::size_t>(d) * (steps + 1), 0.0);
  out.states.assign(static_cast<std::size_t>(d) * steps, 0);
  out.growth.assign(static_cast<std::size_t>(d) * steps, 0.0);

  std::vector<int> previous(d, 0);
  Eigen::VectorXd z(d);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < d; ++i) z(i) = normal(rng);
    const Eigen::VectorXd x = chol * z;
    const double mix = gaussian ? 1.0 : std::sqrt(chi2(rng) / copula.nu);
    for (int i = 0; i < d; ++i) {
      double u = gaussian ? boost::math::cdf(std_normal, x(i)) : boost::math::cdf(copula_t, x(i) / mix);
      u = std::clamp(u, 1e-15, 1.0 - 1e-15);

      // Stack the predictive (state, emission) distribution along [0, 1]:
      // states in quantile order, each followed by its own emission quantiles.
      const HMMParams& a = assets[i];
      const auto w = a.predictive(previous[i]);
      double lo = 0.0;
      int state = a.n_states;
      for (int k = 0; k < a.n_states; ++k) {
        if (u < lo + w[k] || k == a.n_states - 1) {
          state = k + 1;
          break;
        }
        lo += w[k];
      }
      const double width = w[state - 1];
      const double within = width > 0.0 ? std::clamp((u - lo) / width, 1e-12, 1.0 - 1e-12) : 0.5;
      double g = a.mu[state - 1] + a.drift_anchor;
      if (a.sigma[state - 1] > 0.0) g += a.sigma[state - 1] * boost::math::quantile(emission[i], within);
      out.states[i * steps + t] = state;
      out.growth[i * steps + t] = g;
      previous[i] = state;
    }
  }
  for (int i = 0; i < d; ++i) {
    const auto prices =
        prices_from_growth(spots[i], std::span<const double>(out.growth).subspan(static_cast<std::size_t>(i) * steps, steps));
    std::copy(prices.begin(), prices.end(), out.prices.begin() + static_cast<std::ptrdiff_t>(i) * (steps + 1));
  }
  return out;
}

HMMParams reference_params() {
  HMMParams p;
  p.n_states = 9;
  p.n_tail = 2;
  p.nu = 5.0;
  p.eps = 0.02;
  p.lambda = 1.0;
  p.drift_anchor = 0.0002;
  p.p_neg = 0.52;
  const LaplaceFit daily{0.0, 0.01};
  p.bin_edges = laplace_bin_edges(daily, p.n_states);
  for (int k = 1; k <= p.n_states; ++k) {
    const double centre = laplace_quantile(daily, (k - 0.5) / p.n_states);
    p.mu.push_back(centre);
    p.sigma.push_back(0.003 + 0.4 * std::abs(centre));
  }
  // Two regimes: tail states mostly hand over to tail states, interior states
  // rarely leave the interior. Signs stay symmetric so the signed series has
  // no memory while |returns| cluster.
  p.trans.assign(81, 0.0);
  for (int r = 1; r <= 9; ++r) {
    for (int c = 1; c <= 9; ++c) {
      double v = p.is_tail(c) ? 0.03 : 0.176;
      if (p.is_tail(r)) v = p.is_tail(c) ? 0.2 : 0.04;
      p.trans[(r - 1) * 9 + (c - 1)] = v;
    }
  }
  p.validate();
  return p;
}

}  // namespace synthvol::jumphmm
