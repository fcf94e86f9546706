#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "synthvol/cli.hpp"
#include "synthvol/simd/kernels.hpp"
#include "synthvol/stats.hpp"

namespace synthvol::cli {
namespace {

// Shortest round-trip text for doubles; empty for NaN.
std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Csv {
 public:
  Csv(const fs::path& path, std::vector<std::string> header) : out_(path), width_(header.size()) {
    if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
    row(header);
  }
  void row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw std::logic_error("CSV row width mismatch");
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t width_;
};

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Run {
  std::string command;
  fs::path out_dir;
  std::optional<fs::path> config;
  json inputs = json::object();
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::vector<std::string> argv;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::time_t started = std::time(nullptr);

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
  }

  void write_json(const std::string& name, const json& j) { io::write_json_file(file(name).string(), j); }

  void manifest() const {
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started));
    json m{{"command", command},
           {"config", config ? json(config->string()) : json(nullptr)},
           {"inputs", inputs},
           {"output_dir", out_dir.string()},
           {"outputs", outputs},
           {"seed", seed ? json(*seed) : json(nullptr)},
           {"threads", threads},
           {"argv", argv},
           {"tool_version", SYNTHVOL_VERSION},
           {"git_describe", SYNTHVOL_GIT_DESCRIBE},
           {"simd_kernel", std::string(simd::isa_name(simd::active_kernels().isa))},
           {"started_utc", stamp},
           {"wall_clock_seconds",
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    io::write_json_file((out_dir / "run_manifest.json").string(), m);
  }
};

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

void warn_all(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

void seed_tier(calibration::TierConfig& tier, std::uint64_t seed, int threads) {
  tier.train.seed = seed;
  tier.parametric_train.seed = seed;
  tier.threads = threads;
}

json corpus_inputs(const CorpusFiles& c) {
  json j{{"ladder", c.ladder}, {"sectors", c.sectors}};
  if (c.earnings) j["earnings"] = *c.earnings;
  return j;
}

json corpus_summary(const Corpus& c) {
  return json{{"rows", c.rows.size()}, {"skipped_rows", c.skipped}, {"rejected", c.rejected}};
}

json split_json(const calibration::SplitRmse& s) {
  return json{{"train_rmse", finite_or_null(s.train_rmse)},
              {"test_rmse", finite_or_null(s.test_rmse)},
              {"gap", finite_or_null(s.gap)},
              {"n_train", s.n_train},
              {"n_test", s.n_test}};
}

std::vector<std::string> split_fields(const calibration::SplitRmse& s) {
  return {num(s.train_rmse), num(s.test_rmse), num(s.gap), std::to_string(s.n_train), std::to_string(s.n_test)};
}

void write_rmse(Run& run, const std::string& name, const std::vector<calibration::RmseRow>& rows) {
  Csv csv(run.file(name), {"group", "rmse_pct", "count"});
  for (const auto& r : rows) csv.row({r.group, num(r.rmse_pct), std::to_string(r.count)});
}

json rmse_json(const std::vector<calibration::RmseRow>& rows) {
  json j = json::object();
  for (const auto& r : rows) j[r.group] = json{{"rmse_pct", r.rmse_pct}, {"count", r.count}};
  return j;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  CorpusFiles corpus;
  std::string tier;
  std::optional<std::string> config;
};

void cmd_calibrate(Run& run, const CalibrateArgs& a, std::optional<std::uint64_t> seed_flag, std::ostream& out,
                   std::ostream& err) {
  CalibrateFile cfg;
  if (a.config) {
    run.config = a.config;
    cfg = load_calibrate_config(*a.config);
  }
  const auto tier = calibration::parse_tier(a.tier);
  const auto seed = resolve_seed(seed_flag, cfg.seed, cfg.tier.train.seed);
  run.seed = seed;
  seed_tier(cfg.tier, seed, run.threads);
  run.inputs = corpus_inputs(a.corpus);

  const auto corpus = load_corpus(a.corpus, cfg.filter);
  warn_all(err, corpus.warnings);
  const auto model = calibration::fit_tier(corpus.rows, tier, cfg.tier);
  warn_all(err, model.warnings);

  json bundle = model;
  bundle["training"] = json{{"seed", seed},
                            {"tier_config", cfg.tier},
                            {"filter",
                             {{"moneyness_lo", cfg.filter.moneyness_lo},
                              {"moneyness_hi", cfg.filter.moneyness_hi},
                              {"iv_lo", cfg.filter.iv_lo},
                              {"iv_hi", cfg.filter.iv_hi}}},
                            {"rows", corpus.rows.size()}};
  prepare_out_dir(run.out_dir);
  run.write_json("model.json", bundle);

  const auto overall = calibration::rmse_report(model, corpus.rows, calibration::GroupBy::Overall);
  const auto by_sector = calibration::rmse_report(model, corpus.rows, calibration::GroupBy::Sector);
  const auto by_ticker = calibration::rmse_report(model, corpus.rows, calibration::GroupBy::Ticker);
  write_rmse(run, "rmse_overall.csv", overall);
  write_rmse(run, "rmse_sector.csv", by_sector);
  write_rmse(run, "rmse_ticker.csv", by_ticker);

  {
    Csv csv(run.file("groups.csv"),
            {"level", "key", "observations", "inputs", "width", "train_rmse_pct", "epochs_run", "best_epoch"});
    auto emit = [&](const std::string& level, const calibration::FittedGroup& g) {
      csv.row({level, g.key, std::to_string(g.observations), std::to_string(g.inputs), std::to_string(g.width),
               num(100.0 * g.train_rmse), std::to_string(g.epochs_run), std::to_string(g.best_epoch)});
    };
    if (model.global) emit("global", *model.global);
    for (const auto& [k, g] : model.sectors) emit("sector", g);
    for (const auto& [k, g] : model.tickers) emit("ticker", g);
  }

  json summary{{"tier", calibration::to_string(tier)},
               {"seed", seed},
               {"corpus", corpus_summary(corpus)},
               {"rmse_overall", rmse_json(overall)},
               {"rmse_sector", rmse_json(by_sector)},
               {"rmse_ticker", rmse_json(by_ticker)},
               {"warnings", model.warnings}};
  run.write_json("summary.json", summary);
  out << "calibrated " << calibration::to_string(tier) << " on " << corpus.rows.size() << " rows: overall RMSE "
      << overall.front().rmse_pct << "% IV\n";
}

// ---------------------------------------------------------------------------

void cmd_holdout(Run& run, std::optional<std::uint64_t> seed_flag, std::ostream& out, std::ostream& err) {
  auto cfg = load_holdout_config(*run.config);
  const auto seed = resolve_seed(seed_flag, cfg.seed, cfg.tier.train.seed);
  run.seed = seed;
  seed_tier(cfg.tier, seed, run.threads);
  run.inputs = corpus_inputs(cfg.corpus);
  const auto corpus = load_corpus(cfg.corpus);
  warn_all(err, corpus.warnings);

  std::vector<calibration::HoldoutResult> results;
  for (const auto c : cfg.configurations) {
    calibration::HoldoutSpec spec;
    spec.train_dates = cfg.train_dates;
    spec.test_dates = cfg.test_dates;
    spec.configuration = c;
    spec.exclusion_days = cfg.exclusion_days;
    spec.tier = cfg.tier;
    results.push_back(calibration::temporal_holdout(corpus.rows, spec));
  }

  prepare_out_dir(run.out_dir);
  Csv csv(run.file("holdout.csv"),
          {"configuration", "group", "train_rmse", "test_rmse", "gap", "n_train", "n_test"});
  json configs = json::array();
  for (const auto& r : results) {
    const auto name = calibration::to_string(r.configuration);
    auto fields = split_fields(r.overall);
    fields.insert(fields.begin(), {name, "overall"});
    csv.row(fields);
    json sectors = json::object();
    for (const auto& [s, split] : r.by_sector) {
      auto f = split_fields(split);
      f.insert(f.begin(), {name, s});
      csv.row(f);
      sectors[s] = split_json(split);
    }
    configs.push_back(json{{"configuration", name},
                           {"overall", split_json(r.overall)},
                           {"by_sector", sectors},
                           {"excluded_rows", r.excluded},
                           {"unseen_test_rows", r.unseen_test}});
    out << name << ": train " << r.overall.train_rmse << " test " << r.overall.test_rmse << " gap " << r.overall.gap
        << " (% IV)\n";
  }
  run.write_json("holdout.json", json{{"seed", seed},
                                      {"exclusion_days", cfg.exclusion_days},
                                      {"corpus", corpus_summary(corpus)},
                                      {"configurations", configs}});
}

// ---------------------------------------------------------------------------

void cmd_loo(Run& run, std::optional<std::uint64_t> seed_flag, std::ostream& out, std::ostream& err) {
  auto cfg = load_loo_config(*run.config);
  const auto seed = resolve_seed(seed_flag, cfg.seed, cfg.tier.train.seed);
  run.seed = seed;
  seed_tier(cfg.tier, seed, run.threads);
  run.inputs = corpus_inputs(cfg.corpus);
  const auto corpus = load_corpus(cfg.corpus);
  warn_all(err, corpus.warnings);

  auto held_out = cfg.held_out;
  if (held_out.empty()) {
    std::set<dates::Date> all;
    for (const auto& r : corpus.rows) all.insert(r.obs_date);
    held_out.assign(all.begin(), all.end());
  }
  std::vector<std::pair<dates::Date, calibration::HoldoutResult>> folds;
  for (const auto d : held_out) folds.emplace_back(d, calibration::loo_date(corpus.rows, d, cfg.tier));

  prepare_out_dir(run.out_dir);
  Csv csv(run.file("loo.csv"), {"held_out_date", "group", "train_rmse", "test_rmse", "gap", "n_train", "n_test"});
  json jf = json::array();
  for (const auto& [d, r] : folds) {
    const auto date = dates::format_iso(d);
    auto fields = split_fields(r.overall);
    fields.insert(fields.begin(), {date, "overall"});
    csv.row(fields);
    json sectors = json::object();
    for (const auto& [s, split] : r.by_sector) {
      auto f = split_fields(split);
      f.insert(f.begin(), {date, s});
      csv.row(f);
      sectors[s] = split_json(split);
    }
    jf.push_back(json{{"held_out_date", date}, {"overall", split_json(r.overall)}, {"by_sector", sectors}});
    out << date << ": train " << r.overall.train_rmse << " test " << r.overall.test_rmse << " gap " << r.overall.gap
        << " (% IV)\n";
  }
  run.write_json("loo.json", json{{"seed", seed}, {"corpus", corpus_summary(corpus)}, {"folds", jf}});
}

// ---------------------------------------------------------------------------

struct PriceReportArgs {
  std::string model;
  CorpusFiles corpus;
  std::optional<std::string> obs_date;
  int steps = 200;
  double rate = lattice::kDefaultRate;
};

void cmd_price_report(Run& run, const PriceReportArgs& a, std::ostream& out, std::ostream& err) {
  run.inputs = corpus_inputs(a.corpus);
  run.inputs["model"] = a.model;
  const auto model = io::read_json_file(a.model).get<calibration::TieredModel>();
  const auto corpus = load_corpus(a.corpus);
  warn_all(err, corpus.warnings);

  std::set<dates::Date> capture;
  for (const auto& r : corpus.rows) capture.insert(r.obs_date);
  dates::Date day{};
  if (a.obs_date) {
    day = dates::parse_iso(*a.obs_date);
  } else if (capture.size() == 1) {
    day = *capture.begin();
  } else {
    throw std::invalid_argument("the ladder spans " + std::to_string(capture.size()) +
                                " capture dates; choose one with --obs-date");
  }
  std::vector<calibration::LadderObservation> rows;
  std::copy_if(corpus.rows.begin(), corpus.rows.end(), std::back_inserter(rows),
               [&](const auto& r) { return r.obs_date == day; });
  if (rows.empty()) throw std::invalid_argument("no observations on " + dates::format_iso(day));

  const auto report = calibration::price_error_report(model, rows, {lattice::LatticeKind::CRR, a.steps}, a.rate);
  prepare_out_dir(run.out_dir);
  Csv csv(run.file("price_errors.csv"),
          {"ticker", "expiry", "parity", "strike", "moneyness", "dte", "mid", "model_iv", "market_iv", "model_price",
           "market_iv_price", "error", "market_iv_error", "ribbon", "inside_ribbon"});
  std::map<std::string, std::array<double, 4>> per_ticker;  // n, sum |err|, sum |ref err|, inside
  for (const auto& r : report) {
    csv.row({r.ticker, dates::format_iso(r.expiry), lattice::to_string(r.parity), num(r.strike), num(r.moneyness),
             std::to_string(r.dte), num(r.mid), num(r.model_iv), num(r.market_iv), num(r.model_price),
             num(r.market_iv_price), num(r.error), num(r.market_iv_error), num(r.ribbon),
             r.inside_ribbon ? "1" : "0"});
    auto& t = per_ticker[r.ticker];
    t[0] += 1;
    t[1] += std::fabs(r.error);
    t[2] += std::fabs(r.market_iv_error);
    t[3] += r.inside_ribbon ? 1 : 0;
  }
  json tickers = json::object();
  for (const auto& [k, t] : per_ticker) {
    tickers[k] = json{{"contracts", static_cast<std::size_t>(t[0])},
                      {"mean_abs_error", t[1] / t[0]},
                      {"mean_abs_market_iv_error", t[2] / t[0]},
                      {"inside_ribbon_fraction", t[3] / t[0]}};
  }
  run.write_json("price_report.json", json{{"obs_date", dates::format_iso(day)},
                                           {"lattice", {{"kind", "crr"}, {"steps", a.steps}}},
                                           {"rate", a.rate},
                                           {"tickers", tickers}});
  out << "priced " << report.size() << " contracts on " << dates::format_iso(day) << '\n';
}

// ---------------------------------------------------------------------------

void cmd_simulate(Run& run, std::optional<std::uint64_t> seed_flag, std::ostream& out) {
  const auto cfg = load_simulate_config(*run.config);
  const auto seed = resolve_seed(seed_flag, cfg.seed, 0);
  run.seed = seed;
  run.inputs = json{{"files", cfg.inputs}};

  std::vector<jumphmm::HMMParams> hmms;
  std::vector<double> spots;
  for (const auto& a : cfg.assets) {
    hmms.push_back(a.hmm);
    spots.push_back(a.spot);
  }
  const auto d = static_cast<int>(cfg.assets.size());
  std::vector<jumphmm::PathSet> paths(static_cast<std::size_t>(cfg.n_paths));
  for (int p = 0; p < cfg.n_paths; ++p) {
    auto rng = jumphmm::stream_rng(seed, static_cast<std::uint64_t>(p));
    paths[p] = jumphmm::simulate_joint(hmms, cfg.copula, cfg.steps, spots, rng);
  }

  prepare_out_dir(run.out_dir);
  {
    Csv csv(run.file("paths.csv"), {"path", "ticker", "t", "price", "state", "growth"});
    for (int p = 0; p < cfg.n_paths; ++p) {
      for (int a = 0; a < d; ++a) {
        for (int t = 0; t <= cfg.steps; ++t) {
          const bool step = t < cfg.steps;
          csv.row({std::to_string(p), cfg.assets[a].ticker, std::to_string(t), num(paths[p].price(a, t)),
                   step ? std::to_string(paths[p].state(a, t)) : "", step ? num(paths[p].growth_at(a, t)) : ""});
        }
      }
    }
  }
  json assets = json::array();
  for (int a = 0; a < d; ++a) {
    std::vector<double> g;
    for (const auto& ps : paths) {
      for (int t = 0; t < cfg.steps; ++t) g.push_back(ps.growth_at(a, t));
    }
    std::vector<double> abs_g(g.size());
    std::transform(g.begin(), g.end(), abs_g.begin(), [](double x) { return std::fabs(x); });
    const bool acf = g.size() > 1;
    assets.push_back(json{{"ticker", cfg.assets[a].ticker},
                          {"hmm", cfg.assets[a].hmm},
                          {"growth_mean", stats::mean(g)},
                          {"growth_std", stats::stddev(g)},
                          {"excess_kurtosis", stats::excess_kurtosis(g)},
                          {"acf1", acf ? json(stats::autocorrelation(g, 1)) : json(nullptr)},
                          {"acf1_abs", acf ? json(stats::autocorrelation(abs_g, 1)) : json(nullptr)}});
  }
  run.write_json("summary.json", json{{"seed", seed},
                                      {"steps", cfg.steps},
                                      {"n_paths", cfg.n_paths},
                                      {"copula", cfg.copula},
                                      {"assets", assets}});
  out << "simulated " << cfg.n_paths << " path(s) x " << cfg.steps << " steps for " << d << " asset(s)\n";
}

// ---------------------------------------------------------------------------

scenario::ScenarioConfig scenario_setup(Run& run, std::optional<std::uint64_t> seed_flag) {
  auto file = load_scenario_config(*run.config);
  auto cfg = std::move(file.config);
  cfg.seed = resolve_seed(seed_flag, file.seed, 0);
  cfg.threads = run.threads;
  run.seed = cfg.seed;
  run.inputs = json{{"files", file.inputs}};
  return cfg;
}

// Per-day quantile band of one path-major series.
void emit_bands(Csv& csv, const std::string& series, const std::string& contract, const std::vector<double>& values,
                const scenario::ScenarioResult& r, int last_day) {
  static const double ps[] = {0.5, 0.25, 0.75};
  for (int t = 0; t <= last_day; ++t) {
    std::vector<double> x;
    x.reserve(r.n_paths);
    for (int j = 0; j < r.n_paths; ++j) x.push_back(values[r.day_index(j, t)]);
    const auto q = stats::quantiles(std::move(x), ps);
    csv.row({series, contract, std::to_string(t), "median", num(q[0])});
    csv.row({series, contract, std::to_string(t), "q25", num(q[1])});
    csv.row({series, contract, std::to_string(t), "q75", num(q[2])});
  }
}

double mean_over(const std::vector<double>& v, const std::vector<int>& idx) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (int i : idx) s += v[i];
  return s / static_cast<double>(idx.size());
}

void write_greeks(Run& run, const scenario::ScenarioConfig& cfg, const scenario::ScenarioResult& r) {
  {
    Csv csv(run.file("greeks.csv"), {"path", "day", "contract", "delta", "gamma", "vega", "vega_per_pct"});
    for (int j = 0; j < r.n_paths; ++j) {
      for (int t = 0; t < r.horizon; ++t) {
        const auto i = r.day_index(j, t);
        for (std::size_t c = 0; c < cfg.contracts.size(); ++c) {
          const auto& cp = r.contracts[c];
          csv.row({std::to_string(j), std::to_string(t), cfg.contracts[c].name, num(cp.delta[i]), num(cp.gamma[i]),
                   num(cp.vega[i]), num(cp.vega[i] * 0.01)});
        }
      }
    }
  }
  Csv bands(run.file("greek_bands.csv"), {"series", "contract", "day", "stat", "value"});
  for (std::size_t c = 0; c < cfg.contracts.size(); ++c) {
    const auto& cp = r.contracts[c];
    emit_bands(bands, "delta", cfg.contracts[c].name, cp.delta, r, r.horizon - 1);
    emit_bands(bands, "gamma", cfg.contracts[c].name, cp.gamma, r, r.horizon - 1);
    emit_bands(bands, "vega", cfg.contracts[c].name, cp.vega, r, r.horizon - 1);
  }
}

json scenario_stats(const scenario::ScenarioConfig& cfg, const scenario::ScenarioResult& r) {
  const auto stats = scenario::pnl_stats(r, cfg.contracts);
  const auto bins = scenario::tail_bins(r);
  json contracts = json::array();
  for (std::size_t c = 0; c < cfg.contracts.size(); ++c) {
    const auto& k = cfg.contracts[c];
    json row{{"name", k.name},
             {"parity", lattice::to_string(k.parity)},
             {"strike", k.strike},
             {"entry_premium", k.entry_premium},
             {"rows", stats[c]}};
    if (k.market_delta) {
      const auto d = scenario::delta_rule(*k.market_delta, stats[c].kept_fraction);
      row["delta_rule"] = json{{"market_delta", *k.market_delta},
                               {"predicted_kept", d.predicted_kept},
                               {"simulated_kept", d.simulated_kept},
                               {"deviation", d.deviation}};
    }
    const auto& pnl = r.contracts[c].pnl;
    row["tails"] = json{{"worst5_mean_pnl", finite_or_null(mean_over(pnl, bins.worst))},
                        {"top5_mean_pnl", finite_or_null(mean_over(pnl, bins.top))}};
    contracts.push_back(row);
  }
  return json{{"ticker", cfg.ticker},
              {"spot", cfg.spot},
              {"theta", cfg.theta()},
              {"horizon", cfg.horizon},
              {"n_paths", cfg.n_paths},
              {"lr_steps", cfg.lr_steps},
              {"rate", cfg.rate},
              {"seed", cfg.seed},
              {"heston", cfg.heston},
              {"row_names", scenario::pnl_row_names()},
              {"contracts", contracts},
              {"tail_bins", {{"worst", bins.worst}, {"top", bins.top}, {"top_overlay", bins.top_overlay}}}};
}

void cmd_scenario(Run& run, std::optional<std::uint64_t> seed_flag, std::ostream& out) {
  const auto cfg = scenario_setup(run, seed_flag);
  const auto r = scenario::run_scenario(cfg);
  prepare_out_dir(run.out_dir);
  run.write_json("stats.json", scenario_stats(cfg, r));

  {
    std::vector<std::string> header{"path", "day", "spot", "variance"};
    for (const auto& c : cfg.contracts) {
      for (const char* s : {"_sigma", "_value", "_mark_pnl"}) header.push_back(c.name + s);
    }
    Csv csv(run.file("paths.csv"), header);
    for (int j = 0; j < r.n_paths; ++j) {
      for (int t = 0; t <= r.horizon; ++t) {
        const auto i = r.day_index(j, t);
        std::vector<std::string> f{std::to_string(j), std::to_string(t), num(r.spot[i]), num(r.variance[i])};
        for (const auto& cp : r.contracts) {
          f.push_back(num(cp.sigma[i]));
          f.push_back(num(cp.value[i]));
          f.push_back(num(cp.mark_pnl[i]));
        }
        csv.row(f);
      }
    }
  }
  {
    std::vector<std::string> header{"path", "terminal_spot"};
    for (const auto& c : cfg.contracts) {
      header.push_back(c.name + "_payoff");
      header.push_back(c.name + "_pnl");
    }
    Csv csv(run.file("pnl.csv"), header);
    for (int j = 0; j < r.n_paths; ++j) {
      std::vector<std::string> f{std::to_string(j), num(r.terminal_spot(j))};
      for (const auto& cp : r.contracts) {
        f.push_back(num(cp.payoff[j]));
        f.push_back(num(cp.pnl[j]));
      }
      csv.row(f);
    }
  }
  {
    Csv csv(run.file("bands.csv"), {"series", "contract", "day", "stat", "value"});
    emit_bands(csv, "spot", "", r.spot, r, r.horizon);
    emit_bands(csv, "variance", "", r.variance, r, r.horizon);
    for (std::size_t c = 0; c < cfg.contracts.size(); ++c) {
      const auto& cp = r.contracts[c];
      const auto& name = cfg.contracts[c].name;
      emit_bands(csv, "sigma", name, cp.sigma, r, r.horizon);
      emit_bands(csv, "value", name, cp.value, r, r.horizon);
      emit_bands(csv, "mark_pnl", name, cp.mark_pnl, r, r.horizon);
    }
  }
  {
    const auto bins = scenario::tail_bins(r);
    Csv csv(run.file("tails.csv"), {"bin", "path", "day", "series", "contract", "value"});
    auto emit = [&](const char* bin, const std::vector<int>& paths) {
      for (int j : paths) {
        for (int t = 0; t <= r.horizon; ++t) {
          const auto i = r.day_index(j, t);
          csv.row({bin, std::to_string(j), std::to_string(t), "spot", "", num(r.spot[i])});
          for (std::size_t c = 0; c < cfg.contracts.size(); ++c) {
            const auto& cp = r.contracts[c];
            csv.row({bin, std::to_string(j), std::to_string(t), "sigma", cfg.contracts[c].name, num(cp.sigma[i])});
            csv.row({bin, std::to_string(j), std::to_string(t), "value", cfg.contracts[c].name, num(cp.value[i])});
          }
        }
      }
    };
    emit("worst", bins.worst);
    emit("top_overlay", bins.top_overlay);
  }
  if (cfg.greeks) write_greeks(run, cfg, r);

  const auto stats = scenario::pnl_stats(r, cfg.contracts);
  for (std::size_t c = 0; c < stats.size(); ++c) {
    out << cfg.contracts[c].name << ": mean P&L " << stats[c].mean << ", kept " << 100.0 * stats[c].kept_fraction
        << "%, entry edge " << stats[c].entry_edge << '\n';
  }
}

void cmd_greeks(Run& run, std::optional<std::uint64_t> seed_flag, std::ostream& out) {
  auto cfg = scenario_setup(run, seed_flag);
  cfg.greeks = true;
  const auto r = scenario::run_scenario(cfg);
  prepare_out_dir(run.out_dir);
  write_greeks(run, cfg, r);
  out << "Greeks for " << cfg.contracts.size() << " contract(s) over " << cfg.n_paths << " path(s) x " << cfg.horizon
      << " days (long convention; shorts are the negatives)\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic implied-volatility surfaces: calibration, evaluation and scenario simulation", "synthvol"};
  app.set_version_flag("--version", std::string(SYNTHVOL_VERSION) + " (" + SYNTHVOL_GIT_DESCRIBE + ")");
  app.require_subcommand(1);

  Run state;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string config_path;
  int threads = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--threads", threads, "Worker threads; 1 reproduces any other count exactly")
        ->check(CLI::PositiveNumber);
    if (needs_config) sub->add_option("--config", config_path, "JSON configuration")->required();
  };

  CalibrateArgs calibrate;
  std::string calibrate_config;
  auto* cal = app.add_subcommand("calibrate", "Fit a surface tier to an option ladder");
  cal->add_option("--ladder", calibrate.corpus.ladder, "Ladder CSV")->required();
  cal->add_option("--sectors", calibrate.corpus.sectors, "Sector map CSV")->required();
  cal->add_option("--earnings", calibrate.corpus.earnings, "Earnings calendar CSV");
  cal->add_option("--tier", calibrate.tier, "parametric | global-nn | sector-nn | per-ticker-nn")->required();
  cal->add_option("--config", calibrate.config, "JSON training configuration");
  cal->add_option("--seed", seed, "Seed (falls back to the config, then SYNTHVOL_SEED)");
  add_common(cal, false);

  auto* hold = app.add_subcommand("holdout", "Temporal holdout, configurations A/B/C");
  hold->add_option("--seed", seed, "Seed override");
  add_common(hold, true);

  auto* loo = app.add_subcommand("loo", "Leave-one-date-out validation of the sector networks");
  loo->add_option("--seed", seed, "Seed override");
  add_common(loo, true);

  PriceReportArgs price;
  auto* pr = app.add_subcommand("price-report", "Dollar pricing errors against the bid-ask ribbon");
  pr->add_option("--model", price.model, "Model bundle JSON")->required();
  pr->add_option("--ladder", price.corpus.ladder, "Ladder CSV")->required();
  pr->add_option("--sectors", price.corpus.sectors, "Sector map CSV")->required();
  pr->add_option("--earnings", price.corpus.earnings, "Earnings calendar CSV");
  pr->add_option("--obs-date", price.obs_date, "Capture date (required when the ladder spans several)");
  pr->add_option("--steps", price.steps, "CRR steps")->check(CLI::PositiveNumber);
  pr->add_option("--rate", price.rate, "Risk-free rate");
  add_common(pr, false);

  auto* sim = app.add_subcommand("simulate", "Raw JumpHMM price paths");
  sim->add_option("--seed", seed, "Seed override");
  add_common(sim, true);

  auto* scen = app.add_subcommand("scenario", "Forward simulation of short-premium P&L");
  scen->add_option("--seed", seed, "Seed override");
  add_common(scen, true);

  auto* gk = app.add_subcommand("greeks", "Finite-difference Greeks along scenario paths");
  gk->add_option("--seed", seed, "Seed override");
  add_common(gk, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    const auto* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failing->help();
    return kExitInvalid;
  }

  auto* sub = app.get_subcommands().front();
  state.command = sub->get_name();
  state.out_dir = out_dir;
  state.threads = threads;
  for (int i = 0; i < argc; ++i) state.argv.emplace_back(argv[i]);
  if (!config_path.empty()) state.config = config_path;

  try {
    if (sub == cal) {
      cmd_calibrate(state, calibrate, seed, out, err);
    } else if (sub == hold) {
      cmd_holdout(state, seed, out, err);
    } else if (sub == loo) {
      cmd_loo(state, seed, out, err);
    } else if (sub == pr) {
      cmd_price_report(state, price, out, err);
    } else if (sub == sim) {
      cmd_simulate(state, seed, out);
    } else if (sub == scen) {
      cmd_scenario(state, seed, out);
    } else if (sub == gk) {
      cmd_greeks(state, seed, out);
    }
    state.manifest();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed configuration: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace synthvol::cli
