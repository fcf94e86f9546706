#pragma once

// Forward simulation of path-conditional option premia: JumpHMM price paths,
// a leverage-coupled variance level reverting to theta_i, per-day
// Leisen-Reimer repricing at sigma_t^2 = v_t * psi(K / S_t, T - t), terminal
// short P&L and tail statistics.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthvol/jumphmm.hpp"
#include "synthvol/lattice.hpp"
#include "synthvol/surface.hpp"
#include "synthvol/variance.hpp"

namespace synthvol::scenario {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScenarioContract {
  std::string name;
  lattice::Parity parity = lattice::Parity::Put;
  double strike = 0.0;
  double entry_premium = 0.0;  // market mid received by the seller
  std::optional<double> market_delta;
  // Earnings inputs for 4-input shapes; 30 means no event in range.
  double e = surface::kEarningsClip;
  double e_peer = surface::kEarningsClip;
};

struct ScenarioConfig {
  std::string ticker;
  jumphmm::HMMParams hmm;
  variance::HestonParams heston{};
  surface::SurfaceModel surface;  // shape plus theta per ticker
  std::vector<ScenarioContract> contracts;
  double spot = 0.0;
  int horizon = 31;  // trading days; every contract expires at the horizon
  int n_paths = 1000;
  int lr_steps = 201;
  double rate = lattice::kDefaultRate;
  double h_spot = 0.015;
  double h_sigma = 0.005;
  bool greeks = false;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
  double theta() const { return surface.level(ticker); }
};

/// Arrays are path-major: element (path, t) sits at path * (horizon + 1) + t
/// for day series and path * horizon + t for step series.
struct ContractPaths {
  std::vector<double> sigma;  // IV fed to the lattice; day T uses DTE floor 1
  std::vector<double> value;  // LR fair value; day T holds the payoff
  std::vector<double> delta;  // long Greeks, days 0..T-1 (empty unless requested)
  std::vector<double> gamma;
  std::vector<double> vega;
  std::vector<double> payoff;      // per path
  std::vector<double> pnl;         // per path: premium - payoff
  std::vector<double> mark_pnl;    // per path and day: premium - value
};

struct ScenarioResult {
  int n_paths = 0;
  int horizon = 0;
  std::vector<double> spot;      // per path and day
  std::vector<double> variance;  // level v_t, per path and day
  std::vector<int> states;       // per path and step
  std::vector<double> z_s;       // return innovation, per path and step
  std::vector<double> z_v;       // variance innovation, per path and step
  std::vector<ContractPaths> contracts;

  std::size_t day_index(int path, int t) const { return static_cast<std::size_t>(path) * (horizon + 1) + t; }
  std::size_t step_index(int path, int t) const { return static_cast<std::size_t>(path) * horizon + t; }
  double terminal_spot(int path) const { return spot[day_index(path, horizon)]; }
};

ScenarioResult run_scenario(const ScenarioConfig& config);

struct PnlStats {
  double strike = 0.0;
  double entry_premium = 0.0;
  double model_value = 0.0;  // LR fair value at t = 0
  double entry_edge = 0.0;   // model_value - entry_premium
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  double p5 = 0.0;
  double worst = 0.0;
  double kept_fraction = 0.0;  // terminal payoff exactly zero
};

std::vector<PnlStats> pnl_stats(const ScenarioResult& result, const std::vector<ScenarioContract>& contracts);

/// Row labels of the terminal P&L table, in order.
const std::vector<std::string>& pnl_row_names();
std::vector<double> pnl_row_values(const PnlStats& s);

struct DeltaRuleRow {
  double abs_delta = 0.0;
  double predicted_kept = 0.0;  // 1 - |delta|
  double simulated_kept = 0.0;
  double deviation = 0.0;       // simulated - predicted
};

DeltaRuleRow delta_rule(double market_delta, double simulated_kept);
std::vector<DeltaRuleRow> delta_rule_check(const ScenarioResult& result, const std::vector<double>& market_deltas);

struct TailBins {
  std::vector<int> worst;        // lowest 5% by terminal spot
  std::vector<int> top;          // highest 5%, used for statistics
  std::vector<int> top_overlay;  // highest 5% minus the extreme 1%
};

TailBins tail_bins(const ScenarioResult& result);

/// Fills delta/gamma/vega for every path and day t < T from the stored (S_t, sigma_t).
void greeks_along_paths(ScenarioResult& result, const ScenarioConfig& config);

}  // namespace synthvol::scenario
