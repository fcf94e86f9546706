#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "synthvol/calibration.hpp"
#include "synthvol/stats.hpp"

namespace synthvol::calibration {

std::vector<double> bid_ask_ribbon(std::span<const double> moneyness, std::span<const double> half_spread) {
  if (moneyness.size() != half_spread.size()) throw CalibrationError("ribbon inputs differ in length");
  if (moneyness.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(moneyness.begin(), moneyness.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / kRibbonBins;

  std::vector<std::vector<double>> bins(kRibbonBins);
  for (std::size_t i = 0; i < moneyness.size(); ++i) {
    int b = width > 0.0 ? static_cast<int>((moneyness[i] - lo) / width) : 0;
    b = std::clamp(b, 0, kRibbonBins - 1);
    bins[b].push_back(half_spread[i]);
  }
  std::vector<double> centre;
  std::vector<double> level;
  for (int b = 0; b < kRibbonBins; ++b) {
    if (bins[b].empty()) continue;
    centre.push_back(lo + (b + 0.5) * width);
    level.push_back(stats::median(bins[b]));
  }

  std::vector<double> out(moneyness.size());
  for (std::size_t i = 0; i < moneyness.size(); ++i) {
    const double m = moneyness[i];
    if (centre.size() == 1 || m <= centre.front()) {
      out[i] = level.front();
    } else if (m >= centre.back()) {
      out[i] = level.back();
    } else {
      const auto k = static_cast<std::size_t>(std::upper_bound(centre.begin(), centre.end(), m) - centre.begin());
      const double w = (m - centre[k - 1]) / (centre[k] - centre[k - 1]);
      out[i] = level[k - 1] + w * (level[k] - level[k - 1]);
    }
  }
  return out;
}

std::vector<PriceErrorRow> price_error_report(const TieredModel& model, std::span<const LadderObservation> rows,
                                              const lattice::LatticeSpec& lattice, double rate) {
  std::vector<PriceErrorRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    PriceErrorRow p;
    p.ticker = r.ticker;
    p.expiry = r.expiry;
    p.parity = r.parity;
    p.strike = r.strike;
    p.moneyness = r.moneyness();
    p.dte = r.dte;
    p.mid = r.mid;
    p.market_iv = r.iv;
    p.model_iv = model.iv(r);
    lattice::ContractSpec c;
    c.strike = r.strike;
    c.tau = r.dte / lattice::kTradingDaysPerYear;
    c.parity = r.parity;
    c.style = lattice::Style::American;
    c.rate = rate;
    p.model_price = lattice::price(r.spot, c, p.model_iv, lattice);
    p.market_iv_price = lattice::price(r.spot, c, p.market_iv, lattice);
    p.error = p.model_price - p.mid;
    p.market_iv_error = p.market_iv_price - p.mid;
    out.push_back(p);
  }

  // Panels are (ticker, observation date, expiry).
  std::map<std::tuple<std::string, dates::Date, dates::Date>, std::vector<std::size_t>> panels;
  for (std::size_t i = 0; i < rows.size(); ++i) panels[{rows[i].ticker, rows[i].obs_date, rows[i].expiry}].push_back(i);
  for (const auto& [key, idx] : panels) {
    std::vector<double> m;
    std::vector<double> hs;
    for (auto i : idx) {
      m.push_back(rows[i].moneyness());
      hs.push_back(0.5 * (rows[i].ask - rows[i].bid));
    }
    const auto ribbon = bid_ask_ribbon(m, hs);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto& p = out[idx[k]];
      p.ribbon = ribbon[k];
      p.inside_ribbon = std::fabs(p.error) <= p.ribbon;
    }
  }
  return out;
}

}  // namespace synthvol::calibration
