#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "synthvol/lattice.hpp"

using namespace synthvol::lattice;

namespace {

ContractSpec contract(double strike, double tau, Parity parity, Style style, double rate) {
  ContractSpec c;
  c.strike = strike;
  c.tau = tau;
  c.parity = parity;
  c.style = style;
  c.rate = rate;
  return c;
}

oracle::BsInputs bs(double spot, const ContractSpec& c, double sigma) {
  return {spot, c.strike, c.tau, sigma, c.rate, c.parity == Parity::Call};
}

double total_variation(const std::vector<double>& x) {
  double tv = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) tv += std::fabs(x[i] - x[i - 1]);
  return tv;
}

}  // namespace

TEST(Crr, ZeroVolForwardCollapsesToIntrinsic) {
  const auto c = contract(90, 1.0, Parity::Call, Style::European, 0.0);
  EXPECT_NEAR(crr_price(100, c, 1e-8, 200), 10.0, 1e-4);
}

TEST(Crr, AtmCallNearBlackScholes) {
  const auto c = contract(100, 1.0, Parity::Call, Style::European, 0.05);
  EXPECT_NEAR(oracle::bs_price(bs(100, c, 0.2)), 10.4506, 1e-4);
  EXPECT_NEAR(crr_price(100, c, 0.2, 200), 10.4506, 0.05);
}

TEST(Crr, DeepItmAmericanPutExercisesImmediately) {
  const auto c = contract(1000, 0.1, Parity::Put, Style::American, 0.05);
  EXPECT_DOUBLE_EQ(crr_price(10, c, 0.2, 50), 990.0);
}

TEST(Crr, RejectsProbabilityOutsideUnitInterval) {
  // sigma sqrt(dt) far below r dt pushes p above 1.
  const auto c = contract(100, 1.0, Parity::Call, Style::European, 0.5);
  EXPECT_THROW(crr_price(100, c, 0.01, 10), LatticeError);
}

TEST(Crr, ZeroSigmaIsClampedNotRejected) {
  const auto c = contract(90, 1.0, Parity::Call, Style::European, 0.0);
  EXPECT_NEAR(crr_price(100, c, 0.0, 200), 10.0, 1e-4);
}

TEST(Lattice, RejectsBadInputs) {
  const auto c = contract(100, 1.0, Parity::Call, Style::European, 0.0);
  EXPECT_THROW(crr_price(-1, c, 0.2, 100), LatticeError);
  EXPECT_THROW(crr_price(100, c, 0.2, 0), LatticeError);
  EXPECT_THROW(lr_price(100, c, 0.2, 200), LatticeError);  // even steps
  auto bad = c;
  bad.strike = 0.0;
  EXPECT_THROW(crr_price(100, bad, 0.2, 100), LatticeError);
}

TEST(Lr, AtmCallWithinHalfCent) {
  const auto c = contract(100, 1.0, Parity::Call, Style::European, 0.05);
  EXPECT_NEAR(lr_price(100, c, 0.2, 201), 10.4506, 5e-3);
}

TEST(Lr, ErrorShrinksWithSteps) {
  const auto c = contract(100, 1.0, Parity::Call, Style::European, 0.05);
  const double ref = oracle::bs_price(bs(100, c, 0.2));
  double previous = std::fabs(lr_price(100, c, 0.2, 51) - ref);
  for (int n : {101, 201, 401}) {
    const double err = std::fabs(lr_price(100, c, 0.2, n) - ref);
    EXPECT_LE(err, previous) << n;
    previous = err;
  }
}

TEST(Lr, OtmPutAtZeroVolIsWorthless) {
  const auto c = contract(90, 1.0, Parity::Put, Style::American, 0.0);
  EXPECT_NEAR(lr_price(100, c, 1e-8, 201), 0.0, 1e-4);
}

TEST(Lr, StrikeSitsBetweenTheCentralTerminalNodes) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> s(50, 500), m(0.8, 1.2), sig(0.1, 0.6), t(5.0 / 252, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double spot = s(rng);
    const auto c = contract(spot * m(rng), t(rng), Parity::Call, Style::European, 0.03);
    const auto g = lr_geometry(spot, c, sig(rng), 201);
    EXPECT_LE(g.terminal_node(100), c.strike);
    EXPECT_GE(g.terminal_node(101), c.strike);
  }
}

TEST(Lr, PeizerPrattIsAProbability) {
  for (double z : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    const double p = peizer_pratt_inverse(z, 201);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  EXPECT_NEAR(peizer_pratt_inverse(0.0, 201), 0.5, 1e-12);
  EXPECT_LT(peizer_pratt_inverse(-1.0, 201), peizer_pratt_inverse(1.0, 201));
}

TEST(LatticeProperty, ConvergesToBlackScholesOnReferenceClass) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> m(0.95, 1.05), sig(0.1, 0.6), t(5.0 / 252, 1.0);
  for (int i = 0; i < 10; ++i) {
    const auto c = contract(100 * m(rng), t(rng), i % 2 ? Parity::Call : Parity::Put, Style::European, 0.04);
    const double sigma = sig(rng);
    const double ref = oracle::bs_price(bs(100, c, sigma));
    double worst = 0.0;
    for (int n = 150; n <= 250; n += 10) worst = std::max(worst, std::fabs(crr_price(100, c, sigma, n) - ref));
    EXPECT_LT(worst, 0.05);
  }
}

TEST(LatticeProperty, AmericanDominatesEuropeanAndPutFloor) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> s(50, 150), sig(0.05, 0.8), t(1.0 / 252, 2.0), r(0.0, 0.08);
  for (int i = 0; i < 60; ++i) {
    const double spot = s(rng), sigma = sig(rng), tau = t(rng), rate = r(rng);
    for (Parity parity : {Parity::Call, Parity::Put}) {
      const auto am = contract(100, tau, parity, Style::American, rate);
      auto eu = am;
      eu.style = Style::European;
      for (LatticeKind kind : {LatticeKind::CRR, LatticeKind::LR}) {
        const LatticeSpec spec{kind, kind == LatticeKind::CRR ? 200 : 201};
        const double a = price(spot, am, sigma, spec);
        EXPECT_GE(a, price(spot, eu, sigma, spec));
        if (parity == Parity::Put) EXPECT_GE(a, std::max(100.0 - spot, 0.0) - 1e-10);
      }
    }
  }
}

TEST(Greeks, DeepItmCallDeltaSaturates) {
  const auto c = contract(100, 0.1, Parity::Call, Style::American, 0.0);
  EXPECT_NEAR(fd_greeks(200, c, 0.2, {LatticeKind::LR, 201}).delta, 1.0, 0.01);
}

TEST(Greeks, AtmEuropeanDeltaMatchesClosedForm) {
  const auto c = contract(100, 1.0, Parity::Call, Style::European, 0.05);
  const auto g = fd_greeks(100, c, 0.2, {LatticeKind::LR, 201});
  EXPECT_NEAR(g.delta, oracle::bs_delta(bs(100, c, 0.2)), 0.01);
  EXPECT_NEAR(g.vega, oracle::bs_vega(bs(100, c, 0.2)), 0.01 * oracle::bs_vega(bs(100, c, 0.2)));
  EXPECT_DOUBLE_EQ(g.vega_per_pct, g.vega * 0.01);
}

TEST(Greeks, VegaVanishesAtExpiry) {
  const auto c = contract(105, 1e-6, Parity::Call, Style::American, 0.04);
  EXPECT_NEAR(fd_greeks(100, c, 0.3, {LatticeKind::LR, 201}).vega, 0.0, 1e-6);
}

TEST(GreeksProperty, LrDeltaMonotoneAndCrrErrorOscillates) {
  const auto c = contract(100, 0.25, Parity::Call, Style::European, 0.04);
  std::vector<double> lr, crr, lr_err, crr_err;
  for (double s = 90.0; s <= 110.0; s += 0.05) {
    const double exact = oracle::bs_delta(bs(s, c, 0.25));
    lr.push_back(fd_greeks(s, c, 0.25, {LatticeKind::LR, 201}).delta);
    crr.push_back(fd_greeks(s, c, 0.25, {LatticeKind::CRR, 200}).delta);
    lr_err.push_back(lr.back() - exact);
    crr_err.push_back(crr.back() - exact);
  }
  // A fixed CRR tree prices convexly in S, so its delta is monotone too; the
  // staircase shows up as an oscillating error around the closed form.
  for (std::size_t i = 1; i < lr.size(); ++i) {
    EXPECT_GE(lr[i], lr[i - 1] - 1e-12);
    EXPECT_GE(crr[i], crr[i - 1] - 1e-12);
  }
  EXPECT_GT(total_variation(crr_err), 10.0 * total_variation(lr_err));
}

TEST(Parity, RoundTripsText) {
  EXPECT_EQ(parse_parity(to_string(Parity::Put)), Parity::Put);
  EXPECT_EQ(parse_lattice_kind(to_string(LatticeKind::CRR)), LatticeKind::CRR);
  EXPECT_THROW(parse_parity("straddle"), std::invalid_argument);
}
