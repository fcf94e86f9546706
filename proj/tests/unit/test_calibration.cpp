#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "synthvol/calibration.hpp"
#include "synthvol/synthetic.hpp"

using namespace synthvol;
using namespace synthvol::calibration;

namespace {

const char* kHeader = "ticker,obs_date,expiry,strike,parity,bid,ask,iv,spot\n";

LadderObservation row(double strike, double bid, double iv) {
  LadderObservation o;
  o.ticker = "AAA";
  o.sector = "Technology";
  o.obs_date = dates::parse_iso("2025-03-03");
  o.expiry = dates::parse_iso("2025-03-24");
  o.dte = 15;
  o.spot = 100;
  o.strike = strike;
  o.bid = bid;
  o.ask = bid + 0.1;
  o.mid = bid + 0.05;
  o.iv = iv;
  return o;
}

TierConfig quick(int epochs) {
  TierConfig c;
  c.train.epochs = epochs;
  c.train.schedule = {{0, 1e-2}};
  c.parametric_train.epochs = epochs;
  return c;
}

// Two sectors whose smiles slope in opposite directions.
std::vector<LadderObservation> two_sector_corpus() {
  std::vector<LadderObservation> out;
  const double betas[2][5] = {{-0.05, -0.9, 0.0, 1.0, 0.0}, {-0.05, 0.6, 0.0, 1.0, 0.0}};
  for (int s = 0; s < 2; ++s) {
    synthetic::LadderSpec spec;
    const std::string a = s ? "JPM" : "AAPL", b = s ? "GS" : "MSFT";
    spec.tickers = {{a, 0.06, 100}, {b, 0.08, 120}};
    for (const auto& t : spec.tickers) spec.sectors[t.ticker] = {s ? "Financials" : "Technology", false};
    std::copy(std::begin(betas[s]), std::end(betas[s]), spec.beta.beta.begin());
    spec.obs_dates = {dates::parse_iso("2025-03-03"), dates::parse_iso("2025-03-04")};
    spec.expiry_days = {7, 21, 45};
    for (int i = 0; i < 20; ++i) spec.moneyness.push_back(0.81 + 0.02 * i);
    spec.iv_noise = 0.002;
    spec.seed = 100 + s;
    const auto rows = synthetic::generate_ladder(spec);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

double overall_rmse(const TieredModel& m, std::span<const LadderObservation> rows) {
  return rmse_report(m, rows, GroupBy::Overall).front().rmse_pct;
}

}  // namespace

TEST(Ingest, EmptyInputGivesNoRows) {
  std::istringstream in("");
  const auto r = read_ladder(in, {});
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.skipped, 0u);
}

TEST(Ingest, OneRowComputesMidAndDte) {
  std::istringstream in(std::string(kHeader) + "AAPL,2025-03-07,2025-03-14,185,put,2.10,2.30,0.27,190\n");
  const auto r = read_ladder(in, {{"AAPL", {"Technology", false}}});
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(r.rows[0].mid, 2.2);
  EXPECT_EQ(r.rows[0].dte, 5);
  EXPECT_EQ(r.rows[0].sector, "Technology");
  EXPECT_EQ(r.rows[0].parity, lattice::Parity::Put);
}

TEST(Ingest, MalformedRowsAreSkippedAndCounted) {
  std::string text = kHeader;
  for (int i = 0; i < 8; ++i) text += "AAPL,2025-03-07,2025-03-21," + std::to_string(180 + i) + ",call,1.0,1.2,0.25,190\n";
  text += "AAPL,2025-03-07,not-a-date,185,call,1.0,1.2,0.25,190\n";
  text += "AAPL,2025-03-07,2025-03-21,185,call,1.5,1.2,0.25,190\n";  // bid above ask
  std::istringstream in(text);
  const auto r = read_ladder(in, {});
  EXPECT_EQ(r.rows.size(), 8u);
  EXPECT_EQ(r.skipped, 2u);
  EXPECT_EQ(r.skip_messages.size(), 2u);
}

TEST(Ingest, MissingColumnIsAnError) {
  std::istringstream in("ticker,obs_date,expiry,strike,parity,bid,ask,iv\n");
  EXPECT_THROW(read_ladder(in, {}), CalibrationError);
}

TEST(Ingest, WriteThenReadRoundTrips) {
  const auto rows = synthetic::generate_ladder(synthetic::recovery_fixture());
  std::stringstream buf;
  write_ladder(buf, std::span(rows).first(200));
  const auto back = read_ladder(buf, synthetic::recovery_fixture().sectors);
  ASSERT_EQ(back.rows.size(), 200u);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_EQ(back.rows[i].strike, rows[i].strike);
    EXPECT_EQ(back.rows[i].iv, rows[i].iv);
    EXPECT_EQ(back.rows[i].dte, rows[i].dte);
  }
}

TEST(Filter, ReasonsAndBoundaries) {
  const std::vector<LadderObservation> rows{row(100, 0.0, 0.3), row(79, 1.0, 0.3), row(120, 1.0, 0.3),
                                            row(100, 1.0, 2.0), row(100, 1.0, 0.01), row(80, 1.0, 0.3)};
  const auto f = filter_observations(rows);
  EXPECT_EQ(f.rejected.at("zero_bid"), 1u);
  EXPECT_EQ(f.rejected.at("moneyness"), 1u);
  EXPECT_EQ(f.rejected.at("iv_range"), 2u);
  EXPECT_EQ(f.rows.size(), 2u);
}

TEST(FilterProperty, Idempotent) {
  auto rows = synthetic::generate_ladder(synthetic::recovery_fixture());
  for (std::size_t i = 0; i < rows.size(); i += 7) rows[i].bid = 0.0;
  for (std::size_t i = 3; i < rows.size(); i += 11) rows[i].strike *= 1.3;
  const auto once = filter_observations(rows).rows;
  const auto twice = filter_observations(once).rows;
  ASSERT_EQ(once.size(), twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(once[i].strike, twice[i].strike);
}

TEST(Tier, NamesRoundTrip) {
  for (Tier t : {Tier::ParametricGlobal, Tier::NNGlobal, Tier::NNSector, Tier::NNPerTicker}) {
    EXPECT_EQ(parse_tier(to_string(t)), t);
  }
  EXPECT_THROW(parse_tier("bogus"), CalibrationError);
}

TEST(Tier, SingleSectorMatchesGlobal) {
  auto rows = two_sector_corpus();
  rows.resize(rows.size() / 2);
  auto cfg = quick(40);
  cfg.group_inputs = 2;
  const auto g = fit_tier(rows, Tier::NNGlobal, cfg);
  const auto s = fit_tier(rows, Tier::NNSector, cfg);
  EXPECT_EQ(overall_rmse(g, rows), overall_rmse(s, rows));
}

TEST(Tier, SectorNetworksBeatOneGlobalOnHeterogeneousSectors) {
  const auto rows = two_sector_corpus();
  auto cfg = quick(300);
  cfg.group_inputs = 2;
  const auto g = fit_tier(rows, Tier::NNGlobal, cfg);
  const auto s = fit_tier(rows, Tier::NNSector, cfg);
  EXPECT_LT(overall_rmse(s, rows), overall_rmse(g, rows));
}

TEST(Tier, PerTickerQualificationThreshold) {
  std::vector<LadderObservation> rows;
  for (int i = 0; i < 1999; ++i) rows.push_back(row(90 + 20.0 * i / 1999, 1.0, 0.3));
  for (int i = 0; i < 2000; ++i) {
    auto r = row(90 + 20.0 * i / 2000, 1.0, 0.25);
    r.ticker = "BBB";
    rows.push_back(r);
  }
  const auto m = fit_tier(rows, Tier::NNPerTicker, quick(3));
  EXPECT_FALSE(m.tickers.count("AAA"));
  ASSERT_TRUE(m.tickers.count("BBB"));
  EXPECT_EQ(m.tickers.at("BBB").width, 8);
  EXPECT_EQ(m.tickers.at("BBB").inputs, 2);
  EXPECT_EQ(&m.route("AAA", "Technology"), &m.sectors.at("Technology"));
  EXPECT_EQ(m.sectors.at("Technology").width, 16);
}

TEST(TierProperty, RoutingIsTotal) {
  const auto rows = two_sector_corpus();
  for (Tier t : {Tier::ParametricGlobal, Tier::NNGlobal, Tier::NNSector, Tier::NNPerTicker}) {
    auto cfg = quick(2);
    cfg.ticker_qualify_min = 200;
    const auto m = fit_tier(rows, t, cfg);
    for (const auto& r : rows) {
      EXPECT_TRUE(m.covers(r));
      EXPECT_TRUE(std::isfinite(m.iv(r)));
    }
  }
}

TEST(Report, TrivialValues) {
  std::vector<LadderObservation> rows{row(95, 1, 0.2), row(105, 1, 0.3)};
  EXPECT_EQ(rmse_report(std::vector<double>{0.2, 0.3}, rows, GroupBy::Overall).front().rmse_pct, 0.0);
  EXPECT_NEAR(rmse_report(std::vector<double>{0.21, 0.31}, rows, GroupBy::Overall).front().rmse_pct, 1.0, 1e-12);
}

TEST(ReportProperty, OverallIsCountWeightedGroupMean) {
  const auto rows = two_sector_corpus();
  const auto m = fit_tier(rows, Tier::ParametricGlobal, quick(50));
  for (GroupBy g : {GroupBy::Sector, GroupBy::Ticker}) {
    double sse = 0.0;
    std::size_t n = 0;
    for (const auto& r : rmse_report(m, rows, g)) {
      sse += r.rmse_pct * r.rmse_pct * r.count;
      n += r.count;
    }
    const auto overall = rmse_report(m, rows, GroupBy::Overall).front();
    EXPECT_EQ(n, overall.count);
    EXPECT_NEAR(sse / n, overall.rmse_pct * overall.rmse_pct, 1e-9);
  }
}

TEST(Holdout, IdenticalSplitsHaveZeroGap) {
  const auto rows = two_sector_corpus();
  HoldoutSpec spec;
  spec.train_dates = spec.test_dates = {dates::parse_iso("2025-03-03")};
  spec.tier = quick(20);
  const auto r = temporal_holdout(rows, spec);
  EXPECT_EQ(r.overall.gap, 0.0);
  EXPECT_EQ(r.overall.n_train, r.overall.n_test);
}

TEST(Holdout, EmptySplitReportsNan) {
  const auto rows = two_sector_corpus();
  HoldoutSpec spec;
  spec.train_dates = {dates::parse_iso("2025-03-03")};
  spec.test_dates = {dates::parse_iso("2025-06-03")};
  spec.tier = quick(5);
  const auto r = temporal_holdout(rows, spec);
  EXPECT_EQ(r.overall.n_test, 0u);
  EXPECT_TRUE(std::isnan(r.overall.test_rmse));
  EXPECT_TRUE(std::isnan(r.overall.gap));
}

TEST(Holdout, ConfigurationBDropsEventRows) {
  const auto spec = synthetic::event_fixture();
  const auto rows = synthetic::generate_ladder(spec);
  HoldoutSpec h;
  h.train_dates = {spec.obs_dates.begin(), spec.obs_dates.begin() + 6};
  h.test_dates = {spec.obs_dates.begin() + 6, spec.obs_dates.end()};
  h.configuration = HoldoutConfiguration::B;
  h.tier = quick(5);
  const auto r = temporal_holdout(rows, h);
  std::size_t near = 0;
  for (const auto& o : rows) near += near_earnings(o, 3.0);
  EXPECT_EQ(r.excluded, near);
  EXPECT_GT(r.excluded, 0u);
}

TEST(Loo, SingleDateCorpusIsAnError) {
  auto rows = two_sector_corpus();
  std::erase_if(rows, [](const LadderObservation& r) { return r.obs_date != dates::parse_iso("2025-03-03"); });
  EXPECT_THROW(loo_date(rows, dates::parse_iso("2025-03-03"), quick(2)), CalibrationError);
  EXPECT_THROW(loo_date(rows, dates::parse_iso("2025-03-04"), quick(2)), CalibrationError);
}

TEST(Loo, HeldOutRowsDoNotLeakIntoTraining) {
  auto rows = two_sector_corpus();
  const auto held = dates::parse_iso("2025-03-04");
  const auto a = loo_date(rows, held, quick(30));
  for (auto& r : rows) {
    if (r.obs_date == held) {
      r.iv *= 1.5;
      r.strike *= 1.01;
    }
  }
  const auto b = loo_date(rows, held, quick(30));
  EXPECT_EQ(a.overall.train_rmse, b.overall.train_rmse);
  EXPECT_NE(a.overall.test_rmse, b.overall.test_rmse);
}

TEST(Ribbon, UniformSpreads) {
  const std::vector<double> m{0.8, 0.85, 0.9, 1.0, 1.1, 1.2}, hs(6, 0.1);
  for (double r : bid_ask_ribbon(m, hs)) EXPECT_DOUBLE_EQ(r, 0.1);
}

TEST(Ribbon, WidensTowardTheWings) {
  std::vector<double> m, hs;
  for (int i = 0; i <= 40; ++i) {
    m.push_back(0.8 + 0.01 * i);
    hs.push_back(0.02 + 0.5 * std::fabs(m.back() - 1.0));
  }
  const auto r = bid_ask_ribbon(m, hs);
  // Monotone outside the bins next to the money.
  for (int i = 1; i <= 15; ++i) EXPECT_LE(r[i], r[i - 1]);
  for (int i = 26; i <= 40; ++i) EXPECT_GE(r[i], r[i - 1]);
  EXPECT_GT(r.front(), r[20]);
  EXPECT_GT(r.back(), r[20]);
}

TEST(PriceErrors, ModelAtMarketIvEqualsReferenceColumn) {
  auto rows = synthetic::generate_ladder(synthetic::recovery_fixture());
  rows.resize(40);
  TieredModel m;
  m.tier = Tier::NNPerTicker;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    // One single-row ticker per group keeps the model IV at that row's market IV.
    rows[i].ticker = "T" + std::to_string(i);
    FittedGroup g;
    g.key = rows[i].ticker;
    g.model.shape = surface::ShapeModel::parametric({});
    g.model.theta[g.key] = rows[i].iv * rows[i].iv;
    m.tickers[g.key] = g;
  }
  for (const auto& p : price_error_report(m, rows)) {
    EXPECT_EQ(p.model_iv, p.market_iv);
    EXPECT_EQ(p.error, p.market_iv_error);
  }
}
