#include <cstdlib>
#include <fstream>
#include <sstream>

#include "synthvol/cli.hpp"

namespace synthvol::cli {
namespace {

using io::SchemaError;

std::optional<std::uint64_t> optional_seed(const json& j, const std::string& where) {
  if (!j.contains("seed")) return std::nullopt;
  if (!j["seed"].is_number_unsigned()) throw SchemaError(where + ".seed must be a non-negative integer");
  return j["seed"].get<std::uint64_t>();
}

std::string path_field(const fs::path& config, const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) throw SchemaError(where + "." + key + " must be a file path");
  return resolve_path(config, j[key].get<std::string>()).string();
}

std::vector<dates::Date> date_list(const json& j, const char* key, const std::string& where) {
  std::vector<dates::Date> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw SchemaError(where + "." + key + " must be an array of ISO dates");
  for (const auto& d : j[key]) {
    if (!d.is_string()) throw SchemaError(where + "." + key + " must be an array of ISO dates");
    out.push_back(dates::parse_iso(d.get<std::string>()));
  }
  return out;
}

CorpusFiles corpus_files(const fs::path& config, const json& j, const std::string& where) {
  CorpusFiles c;
  c.ladder = path_field(config, j, "ladder", where);
  c.sectors = path_field(config, j, "sectors", where);
  if (j.contains("earnings")) c.earnings = path_field(config, j, "earnings", where);
  return c;
}

calibration::TierConfig tier_config(const json& j) {
  return j.contains("training") ? j["training"].get<calibration::TierConfig>() : calibration::TierConfig{};
}

json open_config(const fs::path& path, const std::string& where) {
  auto j = io::read_json_file(path.string());
  io::check_schema_version(j, where);
  return j;
}

// Either inline parameters under `hmm` or a returns CSV under `hmm_returns`
// fitted with the optional `hmm_fit` options.
jumphmm::HMMParams hmm_source(const fs::path& config, const json& j, const std::string& where,
                              std::vector<std::string>& inputs) {
  const bool inline_params = j.contains("hmm");
  const bool from_returns = j.contains("hmm_returns");
  if (inline_params == from_returns) throw SchemaError(where + ": give exactly one of hmm, hmm_returns");
  if (inline_params) {
    if (j.contains("hmm_fit")) throw SchemaError(where + ": hmm_fit only applies with hmm_returns");
    return j["hmm"].get<jumphmm::HMMParams>();
  }
  const auto path = path_field(config, j, "hmm_returns", where);
  inputs.push_back(path);
  jumphmm::FitOptions options;
  if (j.contains("hmm_fit")) {
    const auto& f = j["hmm_fit"];
    io::check_keys(f, {"n_states", "n_tail", "eps", "lambda", "drift_anchor", "p_neg"}, {}, where + ".hmm_fit");
    options.n_states = f.value("n_states", options.n_states);
    options.n_tail = f.value("n_tail", options.n_tail);
    options.eps = f.value("eps", options.eps);
    options.lambda = f.value("lambda", options.lambda);
    options.drift_anchor = f.value("drift_anchor", options.drift_anchor);
    options.p_neg = f.value("p_neg", options.p_neg);
  }
  const auto returns = load_returns(path);
  return jumphmm::fit_jumphmm(returns, options);
}

}  // namespace

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config_value,
                           std::uint64_t fallback) {
  if (flag) return *flag;
  if (config_value) return *config_value;
  if (const char* env = std::getenv("SYNTHVOL_SEED"); env && *env) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      if (std::string(env).find('-') != std::string::npos) throw std::invalid_argument("negative");
      v = std::stoull(env, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || env[used] != '\0') throw std::invalid_argument("SYNTHVOL_SEED must be a non-negative integer");
    return v;
  }
  return fallback;
}

fs::path resolve_path(const fs::path& config_path, const std::string& value) {
  const fs::path p(value);
  if (p.is_absolute()) return p;
  return config_path.parent_path() / p;
}

std::vector<double> load_returns(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(f, line)) throw std::invalid_argument("returns CSV '" + path + "' is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string h; std::getline(ss, h, ',');) {
      if (!h.empty() && h.back() == '\r') h.pop_back();
      header.push_back(h);
    }
  }
  const auto col = std::find(header.begin(), header.end(), "return");
  if (col == header.end()) throw std::invalid_argument("returns CSV '" + path + "' has no 'return' column");
  const auto idx = static_cast<std::size_t>(col - header.begin());
  std::vector<double> out;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> fields;
    for (std::string v; std::getline(ss, v, ',');) fields.push_back(v);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(fields.at(idx), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != fields[idx].size() || !std::isfinite(v)) {
      throw std::invalid_argument(path + " line " + std::to_string(line_no) + ": bad return value");
    }
    out.push_back(v);
  }
  return out;
}

ScenarioFile load_scenario_config(const fs::path& path) {
  const std::string w = "scenario config";
  const auto j = open_config(path, w);
  io::check_keys(j,
                 {"schema_version", "ticker", "sector", "spot", "horizon", "n_paths", "lr_steps", "rate", "h_spot",
                  "h_sigma", "greeks", "seed", "hmm", "hmm_returns", "hmm_fit", "heston", "model", "surface",
                  "contracts"},
                 {"schema_version", "ticker", "spot", "contracts"}, w);
  ScenarioFile out;
  auto& c = out.config;
  try {
    c.ticker = j.at("ticker").get<std::string>();
    c.spot = j.at("spot").get<double>();
    c.horizon = j.value("horizon", c.horizon);
    c.n_paths = j.value("n_paths", c.n_paths);
    c.lr_steps = j.value("lr_steps", c.lr_steps);
    c.rate = j.value("rate", c.rate);
    c.h_spot = j.value("h_spot", c.h_spot);
    c.h_sigma = j.value("h_sigma", c.h_sigma);
    c.greeks = j.value("greeks", c.greeks);
  } catch (const json::exception& e) {
    throw SchemaError(w + ": " + e.what());
  }
  out.seed = optional_seed(j, w);
  c.hmm = hmm_source(path, j, w, out.inputs);
  if (j.contains("heston")) c.heston = j["heston"].get<variance::HestonParams>();
  if (j.contains("model") == j.contains("surface")) throw SchemaError(w + ": give exactly one of model, surface");
  if (j.contains("model")) {
    const auto bundle_path = path_field(path, j, "model", w);
    out.inputs.push_back(bundle_path);
    const auto bundle = io::read_json_file(bundle_path).get<calibration::TieredModel>();
    const std::string sector = j.value("sector", std::string{});
    c.surface = bundle.route(c.ticker, sector).model;
  } else {
    if (j.contains("sector")) throw SchemaError(w + ": sector only applies with model");
    c.surface = j["surface"].get<surface::SurfaceModel>();
  }
  if (!c.surface.has_ticker(c.ticker)) throw SchemaError(w + ": the surface model has no theta for " + c.ticker);
  if (!j["contracts"].is_array()) throw SchemaError(w + ".contracts must be an array");
  for (const auto& item : j["contracts"]) c.contracts.push_back(item.get<scenario::ScenarioContract>());
  return out;
}

SimulateFile load_simulate_config(const fs::path& path) {
  const std::string w = "simulate config";
  const auto j = open_config(path, w);
  io::check_keys(j, {"schema_version", "assets", "copula", "steps", "n_paths", "seed"}, {"schema_version", "assets"}, w);
  SimulateFile out;
  out.steps = j.value("steps", out.steps);
  out.n_paths = j.value("n_paths", out.n_paths);
  out.seed = optional_seed(j, w);
  if (!j["assets"].is_array() || j["assets"].empty()) throw SchemaError(w + ".assets must be a non-empty array");
  for (const auto& a : j["assets"]) {
    io::check_keys(a, {"ticker", "spot", "hmm", "hmm_returns", "hmm_fit"}, {"ticker", "spot"}, w + ".assets");
    SimulateAsset asset;
    asset.ticker = a["ticker"].get<std::string>();
    asset.spot = a["spot"].get<double>();
    asset.hmm = hmm_source(path, a, w + ".assets." + asset.ticker, out.inputs);
    out.assets.push_back(std::move(asset));
  }
  if (j.contains("copula")) {
    out.copula = j["copula"].get<jumphmm::CopulaSpec>();
  } else {
    const auto d = out.assets.size();
    out.copula.corr.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) out.copula.corr[i * d + i] = 1.0;
  }
  if (out.copula.dim() != static_cast<int>(out.assets.size())) {
    throw SchemaError(w + ": copula dimension must equal the number of assets");
  }
  if (out.steps < 1) throw SchemaError(w + ".steps must be at least 1");
  if (out.n_paths < 1) throw SchemaError(w + ".n_paths must be at least 1");
  return out;
}

HoldoutFile load_holdout_config(const fs::path& path) {
  const std::string w = "holdout config";
  const auto j = open_config(path, w);
  io::check_keys(j,
                 {"schema_version", "ladder", "sectors", "earnings", "train_dates", "test_dates", "configurations",
                  "exclusion_days", "training", "seed"},
                 {"schema_version", "ladder", "sectors", "train_dates", "test_dates"}, w);
  HoldoutFile out;
  out.corpus = corpus_files(path, j, w);
  out.train_dates = date_list(j, "train_dates", w);
  out.test_dates = date_list(j, "test_dates", w);
  if (out.train_dates.empty() || out.test_dates.empty()) throw SchemaError(w + ": train_dates and test_dates are required");
  out.exclusion_days = j.value("exclusion_days", out.exclusion_days);
  out.tier = tier_config(j);
  out.seed = optional_seed(j, w);
  const auto names = j.value("configurations", std::vector<std::string>{"A", "B", "C"});
  for (const auto& n : names) {
    if (n == "A") {
      out.configurations.push_back(calibration::HoldoutConfiguration::A);
    } else if (n == "B") {
      out.configurations.push_back(calibration::HoldoutConfiguration::B);
    } else if (n == "C") {
      out.configurations.push_back(calibration::HoldoutConfiguration::C);
    } else {
      throw SchemaError(w + ": unknown configuration '" + n + "' (A, B, C)");
    }
  }
  return out;
}

LooFile load_loo_config(const fs::path& path) {
  const std::string w = "loo config";
  const auto j = open_config(path, w);
  io::check_keys(j, {"schema_version", "ladder", "sectors", "earnings", "held_out_dates", "training", "seed"},
                 {"schema_version", "ladder", "sectors"}, w);
  LooFile out;
  out.corpus = corpus_files(path, j, w);
  out.held_out = date_list(j, "held_out_dates", w);
  out.tier = tier_config(j);
  out.seed = optional_seed(j, w);
  return out;
}

CalibrateFile load_calibrate_config(const fs::path& path) {
  const std::string w = "calibrate config";
  const auto j = open_config(path, w);
  io::check_keys(j, {"schema_version", "training", "filter", "seed"}, {"schema_version"}, w);
  CalibrateFile out;
  out.tier = tier_config(j);
  out.seed = optional_seed(j, w);
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    io::check_keys(f, {"moneyness_lo", "moneyness_hi", "iv_lo", "iv_hi"}, {}, w + ".filter");
    out.filter.moneyness_lo = f.value("moneyness_lo", out.filter.moneyness_lo);
    out.filter.moneyness_hi = f.value("moneyness_hi", out.filter.moneyness_hi);
    out.filter.iv_lo = f.value("iv_lo", out.filter.iv_lo);
    out.filter.iv_hi = f.value("iv_hi", out.filter.iv_hi);
  }
  return out;
}

Corpus load_corpus(const CorpusFiles& files, const calibration::FilterSpec& filter) {
  Corpus out;
  const auto sectors = calibration::load_sectors(files.sectors);
  auto ingest = calibration::ingest_ladder(files.ladder, sectors);
  out.skipped = ingest.skipped;
  out.warnings = ingest.skip_messages;
  if (files.earnings) {
    const auto calendar = calibration::load_earnings(*files.earnings);
    calibration::attach_earnings(ingest.rows, calendar, sectors, &out.warnings);
  }
  auto filtered = calibration::filter_observations(ingest.rows, filter);
  out.rows = std::move(filtered.rows);
  out.rejected = std::move(filtered.rejected);
  return out;
}

}  // namespace synthvol::cli
