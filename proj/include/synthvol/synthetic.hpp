#pragma once

// Synthetic option ladders drawn from a known surface, for fixtures and
// recovery tests. IV = sqrt(theta * psi) + event bump + Gaussian noise; quotes
// are the 200-step CRR American price at that IV, rounded to cents, with a
// half-spread that widens into the wings.

#include <cstdint>
#include <string>
#include <vector>

#include "synthvol/calibration.hpp"
#include "synthvol/surface.hpp"

namespace synthvol::synthetic {

struct SyntheticTicker {
  std::string ticker;
  double theta = 0.09;
  double spot = 100.0;
};

struct LadderSpec {
  std::vector<SyntheticTicker> tickers;
  surface::SectorMap sectors;
  surface::EarningsCalendar calendar;
  surface::PsiBeta beta{};
  std::vector<dates::Date> obs_dates;
  std::vector<int> expiry_days;    // calendar-day offsets from each obs date
  std::vector<double> moneyness;   // K / S grid; puts below 1, calls at or above
  double iv_noise = 0.005;
  // IV added to rows within event_window days of an own or peer print.
  double event_bump = 0.0;
  double event_window = 3.0;
  std::uint64_t seed = 1;
};

std::vector<calibration::LadderObservation> generate_ladder(const LadderSpec& spec);

/// Ten tickers in two sectors (10 x 5 x 5 x 20 = 5,000 rows) with known
/// theta and beta and 0.5% IV noise.
LadderSpec recovery_fixture();

/// Eight capture dates, six train then two test, with prints clustered in
/// the test window and a handful in the training window.
LadderSpec event_fixture();

/// The true sqrt(theta) by ticker.
std::vector<std::pair<std::string, double>> true_vol(const LadderSpec& spec);

}  // namespace synthvol::synthetic
