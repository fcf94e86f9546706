#include "synthvol/calibration.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <set>
#include <thread>

namespace synthvol::calibration {
namespace {

using surface::ShapeModel;
using surface::SurfaceSample;

std::vector<SurfaceSample> samples_of(std::span<const LadderObservation> rows) {
  std::vector<SurfaceSample> s;
  s.reserve(rows.size());
  for (const auto& r : rows) s.push_back({r.ticker, r.point(), r.iv});
  return s;
}

struct Job {
  std::string key;
  std::vector<LadderObservation> rows;
  int inputs = 0;  // 0 = parametric
  int width = 0;
};

FittedGroup run_job(const Job& job, const TierConfig& config) {
  const auto samples = samples_of(job.rows);
  ShapeModel init = job.inputs == 0
                        ? ShapeModel::parametric(config.parametric_init)
                        : ShapeModel::neural(surface::MLPWeights::glorot(
                              surface::MLPWeights::architecture(job.inputs, job.width), config.train.seed));
  auto result = surface::train_surface(samples, std::move(init), job.inputs == 0 ? config.parametric_train : config.train);
  FittedGroup g;
  g.key = job.key;
  g.model = std::move(result.model);
  g.observations = job.rows.size();
  g.inputs = job.inputs;
  g.width = job.width;
  g.train_rmse = result.train_rmse;
  g.epochs_run = result.epochs_run;
  g.best_epoch = result.best_epoch;
  g.loss_history = std::move(result.loss_history);
  return g;
}

// Fits independent groups on up to `threads` workers; output order follows `jobs`.
std::vector<FittedGroup> run_jobs(const std::vector<Job>& jobs, const TierConfig& config) {
  std::vector<FittedGroup> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = run_job(jobs[i], config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::max(config.threads, 1), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        throw CalibrationError("fit of group '" + jobs[i].key + "' failed: " + e.what());
      }
    }
  }
  return out;
}

int group_width(std::size_t n, std::size_t wide_min) { return n >= wide_min ? 16 : 8; }

double sq(double x) { return x * x; }

}  // namespace

FilterResult filter_observations(std::span<const LadderObservation> rows, const FilterSpec& spec) {
  FilterResult out;
  out.rejected = {{"zero_bid", 0}, {"moneyness", 0}, {"iv_range", 0}};
  for (const auto& r : rows) {
    const double m = r.moneyness();
    if (!(r.bid > 0.0)) {
      ++out.rejected["zero_bid"];
    } else if (!(m >= spec.moneyness_lo && m <= spec.moneyness_hi)) {
      ++out.rejected["moneyness"];
    } else if (!(r.iv > spec.iv_lo && r.iv < spec.iv_hi)) {
      ++out.rejected["iv_range"];
    } else {
      out.rows.push_back(r);
    }
  }
  return out;
}

std::string to_string(Tier tier) {
  switch (tier) {
    case Tier::ParametricGlobal: return "parametric";
    case Tier::NNGlobal: return "global-nn";
    case Tier::NNSector: return "sector-nn";
    case Tier::NNPerTicker: return "per-ticker-nn";
  }
  return "?";
}

Tier parse_tier(const std::string& text) {
  for (Tier t : {Tier::ParametricGlobal, Tier::NNGlobal, Tier::NNSector, Tier::NNPerTicker}) {
    if (text == to_string(t)) return t;
  }
  throw CalibrationError("unknown tier '" + text + "' (parametric, global-nn, sector-nn, per-ticker-nn)");
}

const FittedGroup& TieredModel::route(const std::string& ticker, const std::string& sector) const {
  if (const auto t = tickers.find(ticker); t != tickers.end()) return t->second;
  if (const auto s = sectors.find(sector); s != sectors.end()) return s->second;
  if (global) return *global;
  throw CalibrationError("no model covers ticker '" + ticker + "' in sector '" + sector + "'");
}

double TieredModel::iv(const LadderObservation& obs) const {
  return route(obs.ticker, obs.sector).model.iv(obs.ticker, obs.point());
}

bool TieredModel::covers(const LadderObservation& obs) const {
  if (tickers.count(obs.ticker)) return true;
  if (const auto s = sectors.find(obs.sector); s != sectors.end()) return s->second.model.has_ticker(obs.ticker);
  return global && global->model.has_ticker(obs.ticker);
}

surface::TrainConfig parametric_train_default() {
  surface::TrainConfig c;
  c.schedule = {{0, 1e-2}, {500, 5e-3}, {1000, 2e-3}, {1500, 1e-3}};
  return c;
}

TieredModel fit_tier(std::span<const LadderObservation> corpus, Tier tier, const TierConfig& config) {
  config.train.validate();
  config.parametric_train.validate();
  if (corpus.empty()) throw CalibrationError("cannot calibrate on an empty corpus");
  for (int inputs : {config.group_inputs, config.ticker_inputs}) {
    if (inputs != 2 && inputs != 4) throw CalibrationError("network inputs must be 2 or 4");
  }
  TieredModel model;
  model.tier = tier;

  if (tier == Tier::ParametricGlobal || tier == Tier::NNGlobal) {
    Job job{"global", {corpus.begin(), corpus.end()}, 0, 0};
    if (tier == Tier::NNGlobal) {
      job.inputs = config.group_inputs;
      job.width = group_width(corpus.size(), config.wide_group_min);
    }
    model.global = run_jobs({job}, config).front();
    return model;
  }

  std::map<std::string, std::vector<LadderObservation>> by_sector;
  std::map<std::string, std::vector<LadderObservation>> by_ticker;
  std::size_t unassigned = 0;
  for (const auto& r : corpus) {
    by_ticker[r.ticker].push_back(r);
    if (r.sector.empty()) {
      ++unassigned;
    } else {
      by_sector[r.sector].push_back(r);
    }
  }
  if (unassigned) {
    model.warnings.push_back(std::to_string(unassigned) + " rows have no sector and were left out of the sector fits");
  }

  std::vector<Job> jobs;
  for (auto& [sector, rows] : by_sector) {
    const int width = group_width(rows.size(), config.wide_group_min);
    jobs.push_back({sector, std::move(rows), config.group_inputs, width});
  }
  const std::size_t n_sector_jobs = jobs.size();
  if (tier == Tier::NNPerTicker) {
    for (auto& [ticker, rows] : by_ticker) {
      if (rows.size() < config.ticker_qualify_min) {
        model.warnings.push_back("ticker " + ticker + " has " + std::to_string(rows.size()) +
                                 " rows; held on its sector model");
        continue;
      }
      const int width = group_width(rows.size(), config.ticker_wide_min);
      jobs.push_back({ticker, std::move(rows), config.ticker_inputs, width});
    }
  }

  auto fitted = run_jobs(jobs, config);
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    auto& dst = i < n_sector_jobs ? model.sectors : model.tickers;
    dst.emplace(fitted[i].key, std::move(fitted[i]));
  }
  return model;
}

std::vector<RmseRow> rmse_report(std::span<const double> model_iv, std::span<const LadderObservation> rows,
                                 GroupBy group_by) {
  if (model_iv.size() != rows.size()) throw CalibrationError("one model IV per row is required");
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string key = group_by == GroupBy::Overall  ? std::string("all")
                            : group_by == GroupBy::Sector ? rows[i].sector
                                                          : rows[i].ticker;
    auto& a = acc[key];
    a.first += sq(model_iv[i] - rows[i].iv);
    ++a.second;
  }
  std::vector<RmseRow> out;
  for (const auto& [key, a] : acc) out.push_back({key, 100.0 * std::sqrt(a.first / a.second), a.second});
  return out;
}

std::vector<RmseRow> rmse_report(const TieredModel& model, std::span<const LadderObservation> rows, GroupBy group_by) {
  std::vector<double> iv;
  iv.reserve(rows.size());
  for (const auto& r : rows) iv.push_back(model.iv(r));
  return rmse_report(iv, rows, group_by);
}

std::string to_string(HoldoutConfiguration c) {
  switch (c) {
    case HoldoutConfiguration::A: return "A";
    case HoldoutConfiguration::B: return "B";
    case HoldoutConfiguration::C: return "C";
  }
  return "?";
}

bool near_earnings(const LadderObservation& row, double days) {
  return row.earnings.own_distance <= days || row.earnings.peer_distance <= days;
}

namespace {

HoldoutResult evaluate_split(const TieredModel& model, std::span<const LadderObservation> train,
                             std::span<const LadderObservation> test) {
  HoldoutResult out;
  std::map<std::string, std::array<double, 4>> sector_acc;  // train sse, n, test sse, n
  double train_sse = 0.0;
  double test_sse = 0.0;
  for (const auto& r : train) {
    const double e = sq(model.iv(r) - r.iv);
    train_sse += e;
    ++out.overall.n_train;
    auto& a = sector_acc[r.sector];
    a[0] += e;
    a[1] += 1;
  }
  for (const auto& r : test) {
    if (!model.covers(r)) {
      ++out.unseen_test;
      continue;
    }
    const double e = sq(model.iv(r) - r.iv);
    test_sse += e;
    ++out.overall.n_test;
    auto& a = sector_acc[r.sector];
    a[2] += e;
    a[3] += 1;
  }
  auto finish = [](SplitRmse& s, double tr_sse, double te_sse) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.train_rmse = s.n_train ? 100.0 * std::sqrt(tr_sse / s.n_train) : nan;
    s.test_rmse = s.n_test ? 100.0 * std::sqrt(te_sse / s.n_test) : nan;
    s.gap = s.test_rmse - s.train_rmse;
  };
  finish(out.overall, train_sse, test_sse);
  for (const auto& [sector, a] : sector_acc) {
    SplitRmse s;
    s.n_train = static_cast<std::size_t>(a[1]);
    s.n_test = static_cast<std::size_t>(a[3]);
    finish(s, a[0], a[2]);
    out.by_sector[sector] = s;
  }
  return out;
}

}  // namespace

HoldoutResult temporal_holdout(std::span<const LadderObservation> corpus, const HoldoutSpec& spec) {
  if (spec.train_dates.empty() || spec.test_dates.empty()) throw CalibrationError("holdout needs train and test dates");
  const std::set<dates::Date> train_set(spec.train_dates.begin(), spec.train_dates.end());
  const std::set<dates::Date> test_set(spec.test_dates.begin(), spec.test_dates.end());
  const bool exclude = spec.configuration == HoldoutConfiguration::B;

  std::vector<LadderObservation> train;
  std::vector<LadderObservation> test;
  std::size_t excluded = 0;
  for (const auto& r : corpus) {
    const bool in_train = train_set.count(r.obs_date) > 0;
    const bool in_test = test_set.count(r.obs_date) > 0;
    if (!in_train && !in_test) continue;
    if (exclude && near_earnings(r, spec.exclusion_days)) {
      ++excluded;
      continue;
    }
    if (in_train) train.push_back(r);
    if (in_test) test.push_back(r);
  }
  if (train.empty()) throw CalibrationError("holdout training split is empty");

  TierConfig cfg = spec.tier;
  cfg.group_inputs = spec.configuration == HoldoutConfiguration::C ? 4 : 2;
  const TieredModel model = fit_tier(train, Tier::NNSector, cfg);
  HoldoutResult out = evaluate_split(model, train, test);
  out.configuration = spec.configuration;
  out.excluded = excluded;
  return out;
}

HoldoutResult loo_date(std::span<const LadderObservation> corpus, dates::Date held_out, const TierConfig& config) {
  std::set<dates::Date> all;
  for (const auto& r : corpus) all.insert(r.obs_date);
  if (!all.count(held_out)) throw CalibrationError("held-out date " + dates::format_iso(held_out) + " is not in the corpus");
  if (all.size() < 2) throw CalibrationError("leave-one-date-out needs at least two capture dates");
  std::vector<LadderObservation> train;
  std::vector<LadderObservation> test;
  for (const auto& r : corpus) (r.obs_date == held_out ? test : train).push_back(r);
  const TieredModel model = fit_tier(train, Tier::NNSector, config);
  HoldoutResult out = evaluate_split(model, train, test);
  out.configuration = HoldoutConfiguration::C;
  return out;
}

}  // namespace synthvol::calibration
