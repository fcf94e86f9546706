#pragma once

// Option-ladder ingestion, quote filters, the tiered calibration hierarchy
// (parametric global, NN global, NN per sector, NN per ticker with sector
// fallback), RMSE reports, holdout evaluations and dollar pricing errors.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "synthvol/dates.hpp"
#include "synthvol/earnings.hpp"
#include "synthvol/lattice.hpp"
#include "synthvol/surface.hpp"

namespace synthvol::calibration {

class CalibrationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LadderObservation {
  std::string ticker;
  dates::Date obs_date{};
  dates::Date expiry{};
  int dte = 0;  // weekdays in (obs_date, expiry]
  double strike = 0.0;
  double spot = 0.0;
  double bid = 0.0;
  double ask = 0.0;
  double mid = 0.0;
  double iv = 0.0;
  lattice::Parity parity = lattice::Parity::Call;
  std::string sector;  // empty when the ticker is missing from the sector map
  bool is_etf = false;
  surface::EarningsFeatures earnings{};

  double moneyness() const { return strike / spot; }
  surface::SurfacePoint point() const;
};

struct IngestResult {
  std::vector<LadderObservation> rows;
  std::size_t skipped = 0;
  std::vector<std::string> skip_messages;  // "line N: reason"
};

IngestResult read_ladder(std::istream& in, const surface::SectorMap& sectors);
IngestResult ingest_ladder(const std::string& path, const surface::SectorMap& sectors);

surface::SectorMap read_sectors(std::istream& in);
surface::SectorMap load_sectors(const std::string& path);
surface::EarningsCalendar read_earnings(std::istream& in);
surface::EarningsCalendar load_earnings(const std::string& path);

/// Fills LadderObservation::earnings for every row.
void attach_earnings(std::span<LadderObservation> rows, const surface::EarningsCalendar& calendar,
                     const surface::SectorMap& sectors, std::vector<std::string>* warnings = nullptr);

void write_ladder(std::ostream& out, std::span<const LadderObservation> rows);

struct FilterSpec {
  double moneyness_lo = 0.80;
  double moneyness_hi = 1.20;
  double iv_lo = 0.01;
  double iv_hi = 2.0;
};

struct FilterResult {
  std::vector<LadderObservation> rows;
  std::map<std::string, std::size_t> rejected;  // zero_bid, moneyness, iv_range
};

/// Moneyness in the closed band, bid > 0, IV in the open interval.
FilterResult filter_observations(std::span<const LadderObservation> rows, const FilterSpec& spec = {});

enum class Tier { ParametricGlobal, NNGlobal, NNSector, NNPerTicker };
std::string to_string(Tier tier);
Tier parse_tier(const std::string& text);

/// Five coefficients need a longer stride than a network's weights; the
/// parametric tier trains at ten times the network schedule.
surface::TrainConfig parametric_train_default();

struct TierConfig {
  surface::TrainConfig train{};  // networks
  surface::TrainConfig parametric_train = parametric_train_default();
  int group_inputs = 4;                     // global and sector networks
  int ticker_inputs = 2;                    // per-ticker networks
  std::size_t wide_group_min = 2000;        // global/sector: 16 wide at or above, else 8
  std::size_t ticker_qualify_min = 2000;    // per-ticker network needs this many rows
  std::size_t ticker_wide_min = 5000;       // per-ticker: 16 wide at or above, else 8
  surface::PsiBeta parametric_init{};
  int threads = 1;
};

struct FittedGroup {
  std::string key;  // "global", a sector, or a ticker
  surface::SurfaceModel model;
  std::size_t observations = 0;
  int inputs = 0;  // 0 for parametric
  int width = 0;
  double train_rmse = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
  std::vector<double> loss_history;
};

/// Routes every observation to exactly one fitted group: per-ticker, then
/// sector, then global.
struct TieredModel {
  Tier tier = Tier::ParametricGlobal;
  std::optional<FittedGroup> global;
  std::map<std::string, FittedGroup> sectors;
  std::map<std::string, FittedGroup> tickers;
  std::vector<std::string> warnings;

  const FittedGroup& route(const std::string& ticker, const std::string& sector) const;
  double iv(const LadderObservation& obs) const;
  bool covers(const LadderObservation& obs) const;
};

TieredModel fit_tier(std::span<const LadderObservation> corpus, Tier tier, const TierConfig& config = {});

struct RmseRow {
  std::string group;
  double rmse_pct = 0.0;
  std::size_t count = 0;
};

enum class GroupBy { Overall, Sector, Ticker };
std::vector<RmseRow> rmse_report(const TieredModel& model, std::span<const LadderObservation> rows, GroupBy group_by);
/// Same report from precomputed model IVs (one per row).
std::vector<RmseRow> rmse_report(std::span<const double> model_iv, std::span<const LadderObservation> rows,
                                 GroupBy group_by);

enum class HoldoutConfiguration { A, B, C };
std::string to_string(HoldoutConfiguration c);

struct HoldoutSpec {
  std::vector<dates::Date> train_dates;
  std::vector<dates::Date> test_dates;
  HoldoutConfiguration configuration = HoldoutConfiguration::A;
  double exclusion_days = 3.0;
  TierConfig tier{};
};

/// RMSEs (and so the gap) are NaN for an empty split.
struct SplitRmse {
  double train_rmse = 0.0;  // % IV
  double test_rmse = 0.0;
  double gap = 0.0;         // test - train
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct HoldoutResult {
  HoldoutConfiguration configuration = HoldoutConfiguration::A;
  SplitRmse overall;
  std::map<std::string, SplitRmse> by_sector;
  std::size_t excluded = 0;        // rows removed by the event filter
  std::size_t unseen_test = 0;     // test rows whose ticker has no training rows
};

/// True when the row sits within `days` of its own or a sector peer's print.
bool near_earnings(const LadderObservation& row, double days);

/// Sector networks trained on train_dates only; configuration A uses the
/// 2-input net, B the same after the event exclusion, C the 4-input net on A's rows.
HoldoutResult temporal_holdout(std::span<const LadderObservation> corpus, const HoldoutSpec& spec);

/// Sector networks (group_inputs wide) trained on every date except `held_out`.
HoldoutResult loo_date(std::span<const LadderObservation> corpus, dates::Date held_out, const TierConfig& config = {});

struct PriceErrorRow {
  std::string ticker;
  dates::Date expiry{};
  lattice::Parity parity = lattice::Parity::Call;
  double strike = 0.0;
  double moneyness = 0.0;
  int dte = 0;
  double mid = 0.0;
  double model_iv = 0.0;
  double market_iv = 0.0;
  double model_price = 0.0;
  double market_iv_price = 0.0;
  double error = 0.0;            // model_price - mid
  double market_iv_error = 0.0;  // market_iv_price - mid
  double ribbon = 0.0;           // interpolated median half-spread
  bool inside_ribbon = false;
};

inline constexpr int kRibbonBins = 12;

/// Half-spread ribbon for one panel: median (ask - bid) / 2 over 12
/// equal-width moneyness bins, linearly interpolated between bin centres.
std::vector<double> bid_ask_ribbon(std::span<const double> moneyness, std::span<const double> half_spread);

std::vector<PriceErrorRow> price_error_report(const TieredModel& model, std::span<const LadderObservation> rows,
                                              const lattice::LatticeSpec& lattice = {lattice::LatticeKind::CRR, 200},
                                              double rate = lattice::kDefaultRate);

}  // namespace synthvol::calibration
