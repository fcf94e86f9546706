#include "synthvol/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "synthvol/lattice.hpp"

namespace synthvol::synthetic {
namespace {

double cents(double x) { return std::round(x * 100.0) / 100.0; }

dates::Date day(const char* iso) { return dates::parse_iso(iso); }

std::vector<double> strike_grid(double lo, double step, int n) {
  std::vector<double> m;
  for (int i = 0; i < n; ++i) m.push_back(std::round((lo + step * i) * 1000.0) / 1000.0);
  return m;
}

}  // namespace

std::vector<calibration::LadderObservation> generate_ladder(const LadderSpec& spec) {
  std::vector<calibration::LadderObservation> rows;
  for (const auto& t : spec.tickers) {
    const auto s = spec.sectors.find(t.ticker);
    for (const auto obs : spec.obs_dates) {
      for (const int offset : spec.expiry_days) {
        for (const double m : spec.moneyness) {
          calibration::LadderObservation r;
          r.ticker = t.ticker;
          r.obs_date = obs;
          r.expiry = obs + std::chrono::days(offset);
          r.dte = dates::weekdays_between(obs, r.expiry);
          r.spot = t.spot;
          r.strike = std::round(t.spot * m * 100.0) / 100.0;
          r.parity = m < 1.0 ? lattice::Parity::Put : lattice::Parity::Call;
          if (s != spec.sectors.end()) {
            r.sector = s->second.sector;
            r.is_etf = s->second.is_etf;
          }
          rows.push_back(r);
        }
      }
    }
  }
  calibration::attach_earnings(rows, spec.calendar, spec.sectors);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto& r : rows) {
    const auto t = std::find_if(spec.tickers.begin(), spec.tickers.end(),
                                [&](const SyntheticTicker& x) { return x.ticker == r.ticker; });
    double iv = std::sqrt(t->theta * surface::psi_param(r.dte, r.moneyness(), spec.beta));
    if (spec.event_bump != 0.0 && calibration::near_earnings(r, spec.event_window)) {
      // Own prints move IV the full amount, a sector peer's a third of it.
      iv += r.earnings.own_distance <= spec.event_window ? spec.event_bump : spec.event_bump / 3.0;
    }
    iv += spec.iv_noise * noise(rng);
    r.iv = std::round(iv * 1e6) / 1e6;

    lattice::ContractSpec c;
    c.strike = r.strike;
    c.tau = std::max(r.dte, 1) / lattice::kTradingDaysPerYear;
    c.parity = r.parity;
    c.style = lattice::Style::American;
    const double price = lattice::crr_price(r.spot, c, r.iv, 200);
    const double half = 0.005 + 0.02 * price + 0.0005 * r.spot * std::fabs(r.moneyness() - 1.0);
    r.bid = std::max(cents(price - half), 0.01);
    r.ask = std::max(cents(price + half), r.bid + 0.01);
    r.ask = cents(r.ask);
    r.mid = (r.bid + r.ask) / 2.0;
  }
  return rows;
}

LadderSpec recovery_fixture() {
  LadderSpec spec;
  const char* names[] = {"AAPL", "MSFT", "NVDA", "AMD", "META", "JNJ", "PFE", "LLY", "UNH", "ABBV"};
  const double vols[] = {0.26, 0.24, 0.45, 0.48, 0.33, 0.17, 0.22, 0.30, 0.21, 0.25};
  const double spots[] = {190, 410, 120, 160, 500, 150, 28, 780, 520, 170};
  for (int i = 0; i < 10; ++i) {
    spec.tickers.push_back({names[i], vols[i] * vols[i], spots[i]});
    spec.sectors[names[i]] = {i < 5 ? "Technology" : "Healthcare", false};
  }
  spec.beta.beta = {-0.08, -0.9, 0.08, 1.5, 0.02};
  for (const char* d : {"2025-03-03", "2025-03-04", "2025-03-05", "2025-03-06", "2025-03-10"}) {
    spec.obs_dates.push_back(day(d));
  }
  // Prints far enough out that every row carries the clipped e = 30.
  for (int i = 0; i < 10; ++i) spec.calendar[names[i]] = {day("2025-04-21") + std::chrono::days(2 * i)};
  spec.expiry_days = {1, 7, 21, 45, 90};
  spec.moneyness = strike_grid(0.81, 0.02, 20);
  spec.iv_noise = 0.005;
  spec.seed = 20250303;
  return spec;
}

LadderSpec event_fixture() {
  LadderSpec spec;
  const char* tech[] = {"AAPL", "MSFT", "NVDA", "AMD"};
  const char* fin[] = {"JPM", "GS", "BAC", "WFC"};
  const char* hc[] = {"JNJ", "PFE", "LLY", "UNH"};
  const double vols[] = {0.27, 0.25, 0.44, 0.47, 0.22, 0.26, 0.24, 0.23, 0.17, 0.23, 0.31, 0.21};
  const double spots[] = {190, 410, 120, 160, 240, 560, 44, 70, 150, 28, 780, 520};
  int k = 0;
  for (const auto* group : {tech, fin, hc}) {
    const char* sector = group == tech ? "Technology" : group == fin ? "Financials" : "Healthcare";
    for (int i = 0; i < 4; ++i, ++k) {
      spec.tickers.push_back({group[i], vols[k] * vols[k], spots[k]});
      spec.sectors[group[i]] = {sector, false};
    }
  }
  spec.beta.beta = {-0.06, -0.8, 0.06, 1.2, 0.015};
  for (const char* d : {"2025-03-03", "2025-03-04", "2025-03-05", "2025-03-06", "2025-03-07", "2025-03-10",
                        "2025-03-11", "2025-03-12"}) {
    spec.obs_dates.push_back(day(d));
  }
  // One print per event sector inside the training block, the rest landing on
  // the final test date; healthcare reports well outside the window.
  spec.calendar = {
      {"AAPL", {day("2025-03-03")}}, {"MSFT", {day("2025-03-12")}}, {"NVDA", {day("2025-03-12")}},
      {"AMD", {day("2025-03-12")}},  {"JPM", {day("2025-03-03")}},  {"GS", {day("2025-03-12")}},
      {"BAC", {day("2025-03-12")}},  {"WFC", {day("2025-03-12")}},  {"JNJ", {day("2025-04-15")}},
      {"PFE", {day("2025-04-29")}},  {"LLY", {day("2025-05-01")}},  {"UNH", {day("2025-04-17")}},
  };
  spec.expiry_days = {7, 21, 45, 90};
  spec.moneyness = strike_grid(0.81, 0.02, 20);
  spec.iv_noise = 0.005;
  spec.event_bump = 0.09;
  spec.seed = 20250311;
  return spec;
}

std::vector<std::pair<std::string, double>> true_vol(const LadderSpec& spec) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& t : spec.tickers) out.emplace_back(t.ticker, std::sqrt(t.theta));
  return out;
}

}  // namespace synthvol::synthetic
