#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "synthvol/jumphmm.hpp"
#include "synthvol/stats.hpp"

using namespace synthvol::jumphmm;

namespace {

HMMParams small_chain(std::vector<double> trans, double eps) {
  HMMParams p;
  p.n_states = 3;
  p.n_tail = 1;
  p.mu = {-0.02, 0.0, 0.02};
  p.sigma = {0.01, 0.005, 0.01};
  p.trans = std::move(trans);
  p.eps = eps;
  return p;
}

HMMParams single_state(double mu, double sigma, double nu) {
  HMMParams p;
  p.n_states = 3;  // three copies of one state keep the tail bookkeeping valid
  p.n_tail = 1;
  p.mu = {mu, mu, mu};
  p.sigma = {sigma, sigma, sigma};
  p.nu = nu;
  p.trans.assign(9, 1.0 / 3.0);
  p.eps = 0.0;
  p.drift_anchor = 0.0;
  return p;
}

// Reference transitions with emissions narrow enough that bins identify states.
HMMParams separated_params() {
  HMMParams p = reference_params();
  for (int k = 0; k < p.n_states; ++k) p.sigma[k] = 0.0001 + 0.01 * std::fabs(p.mu[k]);
  return p;
}

std::vector<double> series(const HMMParams& p, int steps, std::uint64_t seed) {
  auto rng = stream_rng(seed, 0);
  const auto states = simulate_states(p, steps, rng);
  return simulate_returns(p, states, rng).growth;
}

}  // namespace

TEST(Fit, DirectTransitionCounting) {
  const std::vector<double> returns{-1, -1, 1, 1};
  const std::vector<double> edges{0.0};
  const auto states = assign_states(returns, edges);
  EXPECT_EQ(states, (std::vector<int>{1, 1, 2, 2}));
  const auto t = estimate_transitions(states, 2);
  EXPECT_DOUBLE_EQ(t[0], 0.5);
  EXPECT_DOUBLE_EQ(t[1], 0.5);
  EXPECT_DOUBLE_EQ(t[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t[3], 2.0 / 3.0);
}

TEST(Fit, LaplaceIsMedianAndMeanAbsoluteDeviation) {
  const std::vector<double> x{-3, -1, 0, 2, 7};
  const auto f = fit_laplace(x);
  EXPECT_DOUBLE_EQ(f.location, 0.0);
  EXPECT_DOUBLE_EQ(f.scale, (3 + 1 + 0 + 2 + 7) / 5.0);
  const auto edges = laplace_bin_edges({0.0, 1.0}, 9);
  ASSERT_EQ(edges.size(), 8u);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double p = (k + 1) / 9.0;
    const double expect = p < 0.5 ? std::log(2 * p) : -std::log(2 * (1 - p));
    EXPECT_NEAR(edges[k], expect, 1e-12);
  }
}

TEST(Fit, RejectsShortSeries) {
  const std::vector<double> x(50, 0.01);
  EXPECT_THROW(fit_jumphmm(x), HMMError);
}

TEST(Fit, SimulateThenRefitRecoversTransitionsAndLocations) {
  const auto p = separated_params();
  const auto r = series(p, 50000, 21);
  const auto f = fit_jumphmm(r);
  for (int a = 1; a <= 9; ++a) {
    const auto expect = p.predictive(a);
    for (int b = 1; b <= 9; ++b) EXPECT_NEAR(f.transition(a, b), expect[b - 1], 0.03) << a << "->" << b;
  }
  for (int k = 0; k < 9; ++k) EXPECT_NEAR(f.mu[k], p.mu[k], 0.1 * p.sigma[k]) << k + 1;
}

TEST(FitProperty, FittedRowsAreStochastic) {
  const auto f = fit_jumphmm(series(reference_params(), 5000, 4));
  for (int a = 1; a <= f.n_states; ++a) {
    double sum = 0.0;
    for (int b = 1; b <= f.n_states; ++b) sum += f.transition(a, b);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_GE(f.nu, 2.1);
}

TEST(States, PureMarkovChainMatchesTransitionFrequencies) {
  const auto p = small_chain({0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.25, 0.25, 0.5}, 0.0);
  auto rng = stream_rng(8, 0);
  const auto s = simulate_states(p, 100000, rng);
  std::vector<double> count(9, 0.0), row(3, 0.0);
  for (std::size_t t = 1; t < s.size(); ++t) {
    count[(s[t - 1] - 1) * 3 + (s[t] - 1)] += 1;
    row[s[t - 1] - 1] += 1;
  }
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(count[i] / row[i / 3], p.trans[i], 0.02);
}

TEST(States, AlwaysJumpingLandsOnlyInTails) {
  HMMParams p = reference_params();
  p.eps = 1.0;
  p.lambda = 1e-9;
  auto rng = stream_rng(1, 0);
  const auto s = simulate_states(p, 2000, rng, 5);
  for (std::size_t t = 1; t < s.size(); ++t) EXPECT_TRUE(p.is_tail(s[t]));
}

TEST(States, IdentityChainIsAbsorbing) {
  const auto p = small_chain({1, 0, 0, 0, 1, 0, 0, 0, 1}, 0.0);
  auto rng = stream_rng(2, 0);
  for (int s : simulate_states(p, 500, rng, 2)) EXPECT_EQ(s, 2);
}

TEST(StatesProperty, PathsStayInRange) {
  const auto p = reference_params();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto rng = stream_rng(seed, 3);
    for (int s : simulate_states(p, 3000, rng)) {
      EXPECT_GE(s, 1);
      EXPECT_LE(s, 9);
    }
  }
}

TEST(States, JumpProbabilitiesFormADistribution) {
  const auto p = reference_params();
  double total = 0.0;
  for (int k = 1; k <= 9; ++k) total += p.jump_probability(k);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(p.jump_probability(1) + p.jump_probability(2), 0.52, 1e-12);
  EXPECT_DOUBLE_EQ(p.jump_probability(5), 0.0);
}

TEST(Emissions, ZeroScaleIsDeterministic) {
  HMMParams p = reference_params();
  std::fill(p.sigma.begin(), p.sigma.end(), 0.0);
  auto rng = stream_rng(4, 0);
  const auto s = simulate_states(p, 200, rng);
  const auto g = simulate_returns(p, s, rng).growth;
  for (std::size_t t = 0; t < s.size(); ++t) EXPECT_EQ(g[t], p.mu[s[t] - 1] + p.drift_anchor);
}

TEST(Emissions, StudentTKurtosis) {
  const auto p = single_state(0.0, 1.0, 5.0);
  auto rng = stream_rng(6, 0);
  const std::vector<int> s(100000, 1);
  const auto g = simulate_returns(p, s, rng).growth;
  EXPECT_NEAR(oracle::excess_kurtosis(g), 6.0, 1.0);
}

TEST(Emissions, LocationShift) {
  HMMParams p = reference_params();
  p.mu[3] = 0.01;
  auto rng = stream_rng(7, 0);
  const std::vector<int> s(20000, 4);
  const auto g = simulate_returns(p, s, rng).growth;
  const double se = synthvol::stats::stddev(g) / std::sqrt(20000.0);
  EXPECT_NEAR(synthvol::stats::mean(g), 0.01 + p.drift_anchor, 3 * se);
}

TEST(Emissions, StylizedFactsAtReference) {
  const auto r = series(reference_params(), 50000, 42);
  std::vector<double> a(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) a[i] = std::fabs(r[i]);
  EXPECT_GT(oracle::excess_kurtosis(r), 1.0);
  EXPECT_LT(std::fabs(oracle::acf(r, 1)), 0.05);
  EXPECT_GT(oracle::acf(a, 1), 0.05);
}

TEST(Stats, MatchIndependentOracle) {
  const auto r = series(reference_params(), 3000, 1);
  EXPECT_NEAR(synthvol::stats::excess_kurtosis(r), oracle::excess_kurtosis(r), 1e-9);
  EXPECT_NEAR(synthvol::stats::autocorrelation(r, 1), oracle::acf(r, 1), 1e-12);
}

TEST(Prices, FromGrowth) {
  const std::vector<double> zero(5, 0.0);
  for (double s : prices_from_growth(50.0, zero)) EXPECT_EQ(s, 50.0);
  const std::vector<double> doubling{std::log(2.0)};
  EXPECT_NEAR(prices_from_growth(50.0, doubling)[1], 100.0, 1e-12);
  const auto g = series(reference_params(), 500, 9);
  const auto s = prices_from_growth(100.0, g);
  for (std::size_t t = 0; t < g.size(); ++t) EXPECT_NEAR(std::log(s[t + 1] / s[t]), g[t], 1e-12);
  EXPECT_THROW(prices_from_growth(0.0, g), HMMError);
}

TEST(Copula, IndependenceLimitTailCoOccurrence) {
  const auto p = reference_params();
  const std::vector<HMMParams> assets{p, p};
  CopulaSpec c{{1, 0, 0, 1}, std::numeric_limits<double>::infinity()};
  const std::vector<double> spots{100, 100};
  auto rng = stream_rng(12, 0);
  const auto paths = simulate_joint(assets, c, 20000, spots, rng);
  double a = 0, b = 0, both = 0;
  for (int t = 0; t < paths.steps; ++t) {
    const bool ta = p.is_tail(paths.state(0, t)), tb = p.is_tail(paths.state(1, t));
    a += ta;
    b += tb;
    both += ta && tb;
  }
  const double n = paths.steps;
  const double expect = (a / n) * (b / n);
  EXPECT_NEAR(both / n, expect, 4 * std::sqrt(expect * (1 - expect) / n));
}

TEST(Copula, NearComonotoneAgreesOnTails) {
  const auto p = reference_params();
  const std::vector<HMMParams> assets{p, p};
  CopulaSpec c{{1, 0.99, 0.99, 1}, 5.0};
  const std::vector<double> spots{100, 100};
  auto rng = stream_rng(13, 0);
  const auto paths = simulate_joint(assets, c, 10000, spots, rng);
  int agree = 0;
  for (int t = 0; t < paths.steps; ++t) agree += p.is_tail(paths.state(0, t)) == p.is_tail(paths.state(1, t));
  EXPECT_GT(agree, 8000);
}

TEST(Copula, PreservesMarginals) {
  const auto p = reference_params();
  HMMParams q = reference_params();
  q.mu[0] *= 1.5;
  const std::vector<HMMParams> assets{p, q};
  CopulaSpec c{{1, 0.7, 0.7, 1}, 4.0};
  const std::vector<double> spots{100, 100};
  auto rng = stream_rng(14, 0);
  const auto joint = simulate_joint(assets, c, 20000, spots, rng);
  const std::vector<double> coupled(joint.growth.begin(), joint.growth.begin() + joint.steps);
  const auto alone = series(p, 20000, 15);
  EXPECT_GT(oracle::ks_two_sample(coupled, alone).p_value, 0.01);
}

TEST(Copula, Validation) {
  EXPECT_THROW((CopulaSpec{{1, 0.5, 0.4, 1}, 5.0}.validate()), HMMError);
  EXPECT_THROW((CopulaSpec{{1, 2, 2, 1}, 5.0}.validate()), HMMError);
  EXPECT_THROW((CopulaSpec{{1, 0, 0, 1}, 1.0}.validate()), HMMError);
  const auto p = reference_params();
  const std::vector<HMMParams> one{p};
  const std::vector<double> spot{100};
  auto rng = stream_rng(0, 0);
  EXPECT_THROW(simulate_joint(one, CopulaSpec{{1, 0, 0, 1}, 5.0}, 10, spot, rng), HMMError);
}

TEST(Rng, StreamsAreIndependentAndReproducible) {
  auto a = stream_rng(5, 0), b = stream_rng(5, 0), c = stream_rng(5, 1);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
}

TEST(Params, ValidationRejectsBadRows) {
  HMMParams p = reference_params();
  p.trans[0] += 0.1;
  EXPECT_THROW(p.validate(), HMMError);
  p = reference_params();
  p.nu = 2.0;
  EXPECT_THROW(p.validate(), HMMError);
  p = reference_params();
  p.n_tail = 5;
  EXPECT_THROW(p.validate(), HMMError);
}
