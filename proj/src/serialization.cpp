#include "synthvol/serialization.hpp"

#include <fstream>

namespace synthvol::io {

void check_keys(const json& j, std::initializer_list<const char*> allowed, std::initializer_list<const char*> required,
                const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw SchemaError(where + ": unknown key '" + item.key() + "'");
  }
  for (const char* r : required) {
    if (!j.contains(r)) throw SchemaError(where + ": missing required key '" + std::string(r) + "'");
  }
}

void check_schema_version(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("schema_version")) throw SchemaError(where + ": missing schema_version");
  if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion) {
    throw SchemaError(where + ": unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError("cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << j.dump(2) << '\n';
}

}  // namespace synthvol::io

namespace {

using nlohmann::json;

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw synthvol::io::SchemaError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

}  // namespace

namespace synthvol::jumphmm {

void to_json(nlohmann::json& j, const HMMParams& p) {
  json trans = json::array();
  for (int r = 0; r < p.n_states; ++r) {
    trans.push_back(std::vector<double>(p.trans.begin() + r * p.n_states, p.trans.begin() + (r + 1) * p.n_states));
  }
  j = json{{"n_states", p.n_states}, {"n_tail", p.n_tail},     {"bin_edges", p.bin_edges},
           {"mu", p.mu},             {"sigma", p.sigma},       {"nu", p.nu},
           {"trans", trans},         {"eps", p.eps},           {"lambda", p.lambda},
           {"drift_anchor", p.drift_anchor}, {"p_neg", p.p_neg}};
}

void from_json(const nlohmann::json& j, HMMParams& p) {
  const std::string w = "hmm";
  io::check_keys(j, {"n_states", "n_tail", "bin_edges", "mu", "sigma", "nu", "trans", "eps", "lambda", "drift_anchor", "p_neg"},
                 {"n_states", "n_tail", "mu", "sigma", "trans"}, w);
  p = HMMParams{};
  p.n_states = get<int>(j, "n_states", w);
  p.n_tail = get<int>(j, "n_tail", w);
  p.bin_edges = get_or<std::vector<double>>(j, "bin_edges", {}, w);
  p.mu = get<std::vector<double>>(j, "mu", w);
  p.sigma = get<std::vector<double>>(j, "sigma", w);
  p.nu = get_or(j, "nu", p.nu, w);
  const auto rows = get<std::vector<std::vector<double>>>(j, "trans", w);
  p.trans.clear();
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != p.n_states) throw io::SchemaError("hmm.trans rows must have n_states entries");
    p.trans.insert(p.trans.end(), r.begin(), r.end());
  }
  p.eps = get_or(j, "eps", p.eps, w);
  p.lambda = get_or(j, "lambda", p.lambda, w);
  p.drift_anchor = get_or(j, "drift_anchor", p.drift_anchor, w);
  p.p_neg = get_or(j, "p_neg", p.p_neg, w);
  p.validate();
}

void to_json(nlohmann::json& j, const CopulaSpec& c) {
  const int d = c.dim();
  json corr = json::array();
  for (int r = 0; r < d; ++r) corr.push_back(std::vector<double>(c.corr.begin() + r * d, c.corr.begin() + (r + 1) * d));
  j = json{{"corr", corr}};
  if (std::isfinite(c.nu)) {
    j["nu"] = c.nu;
  } else {
    j["nu"] = "inf";
  }
}

void from_json(const nlohmann::json& j, CopulaSpec& c) {
  io::check_keys(j, {"corr", "nu"}, {"corr"}, "copula");
  const auto rows = get<std::vector<std::vector<double>>>(j, "corr", "copula");
  c.corr.clear();
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw io::SchemaError("copula.corr must be square");
    c.corr.insert(c.corr.end(), r.begin(), r.end());
  }
  c.nu = 5.0;
  if (j.contains("nu")) {
    if (j["nu"].is_string()) {
      if (j["nu"].get<std::string>() != "inf") throw io::SchemaError("copula.nu must be a number or \"inf\"");
      c.nu = std::numeric_limits<double>::infinity();
    } else {
      c.nu = get<double>(j, "nu", "copula");
    }
  }
  c.validate();
}

}  // namespace synthvol::jumphmm

namespace synthvol::variance {

void to_json(nlohmann::json& j, const HestonParams& p) {
  j = json{{"kappa", p.kappa}, {"sigma_v", p.sigma_v}, {"rho", p.rho}, {"dt", p.dt}};
}

void from_json(const nlohmann::json& j, HestonParams& p) {
  const std::string w = "heston";
  io::check_keys(j, {"kappa", "sigma_v", "rho", "dt"}, {}, w);
  p = HestonParams{};
  p.kappa = get_or(j, "kappa", p.kappa, w);
  p.sigma_v = get_or(j, "sigma_v", p.sigma_v, w);
  p.rho = get_or(j, "rho", p.rho, w);
  p.dt = get_or(j, "dt", p.dt, w);
  p.validate();
}

void to_json(nlohmann::json& j, const ThetaSpec& s) {
  json levels = json::object();
  for (const auto& [t, lv] : s.levels) {
    levels[t] = json{{"theta", lv.theta}};
    if (lv.per_state()) levels[t]["state_multipliers"] = lv.state_multipliers;
  }
  j = json{{"gamma", s.gamma}, {"shape", s.shape}, {"levels", levels}};
}

void from_json(const nlohmann::json& j, ThetaSpec& s) {
  const std::string w = "theta_spec";
  io::check_keys(j, {"gamma", "shape", "levels"}, {"shape", "levels"}, w);
  s = ThetaSpec{};
  s.gamma = get_or(j, "gamma", 0.0, w);
  s.shape = j.at("shape").get<surface::ShapeModel>();
  for (const auto& item : j.at("levels").items()) {
    io::check_keys(item.value(), {"theta", "state_multipliers"}, {"theta"}, w + ".levels." + item.key());
    TickerLevel lv;
    lv.theta = get<double>(item.value(), "theta", w);
    lv.state_multipliers = get_or<std::vector<double>>(item.value(), "state_multipliers", {}, w);
    s.levels[item.key()] = lv;
  }
  s.validate();
}

}  // namespace synthvol::variance

namespace synthvol::surface {

void to_json(nlohmann::json& j, const ShapeModel& s) {
  if (s.kind() == ShapeModel::Kind::Parametric) {
    j = json{{"kind", "parametric"}, {"beta", s.beta().beta}};
    return;
  }
  const auto& w = s.weights();
  const auto& sizes = w.layer_sizes();
  const auto p = w.params();
  json layers = json::array();
  for (std::size_t l = 0; l < w.layers(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    json rows = json::array();
    for (int o = 0; o < out; ++o) {
      const double* row = p.data() + w.weight_offset(l) + static_cast<std::size_t>(o) * in;
      rows.push_back(std::vector<double>(row, row + in));
    }
    const double* b = p.data() + w.bias_offset(l);
    layers.push_back(json{{"weights", rows}, {"bias", std::vector<double>(b, b + out)}});
  }
  j = json{{"kind", "neural"},
           {"layer_sizes", sizes},
           {"layers", layers},
           {"standardization", json{{"mean", s.standardization().mean}, {"sd", s.standardization().sd}}}};
}

void from_json(const nlohmann::json& j, ShapeModel& s) {
  const std::string w = "shape";
  if (!j.is_object() || !j.contains("kind")) throw io::SchemaError("shape: missing kind");
  const auto kind = get<std::string>(j, "kind", w);
  if (kind == "parametric") {
    io::check_keys(j, {"kind", "beta"}, {"beta"}, w);
    PsiBeta beta;
    beta.beta = get<std::array<double, 5>>(j, "beta", w);
    s = ShapeModel::parametric(beta);
    return;
  }
  if (kind != "neural") throw io::SchemaError("shape.kind must be parametric or neural");
  io::check_keys(j, {"kind", "layer_sizes", "layers", "standardization"}, {"layer_sizes", "layers", "standardization"}, w);
  MLPWeights weights(get<std::vector<int>>(j, "layer_sizes", w));
  const auto& sizes = weights.layer_sizes();
  const auto& layers = j.at("layers");
  if (!layers.is_array() || layers.size() != weights.layers()) throw io::SchemaError("shape.layers does not match layer_sizes");
  auto p = weights.params();
  for (std::size_t l = 0; l < weights.layers(); ++l) {
    io::check_keys(layers[l], {"weights", "bias"}, {"weights", "bias"}, w + ".layers");
    const auto rows = get<std::vector<std::vector<double>>>(layers[l], "weights", w);
    const auto bias = get<std::vector<double>>(layers[l], "bias", w);
    const auto in = static_cast<std::size_t>(sizes[l]);
    const auto out = static_cast<std::size_t>(sizes[l + 1]);
    if (rows.size() != out || bias.size() != out) throw io::SchemaError("shape layer has the wrong output width");
    for (std::size_t o = 0; o < out; ++o) {
      if (rows[o].size() != in) throw io::SchemaError("shape layer has the wrong input width");
      std::copy(rows[o].begin(), rows[o].end(), p.begin() + static_cast<std::ptrdiff_t>(weights.weight_offset(l) + o * in));
    }
    std::copy(bias.begin(), bias.end(), p.begin() + static_cast<std::ptrdiff_t>(weights.bias_offset(l)));
  }
  const auto& zj = j.at("standardization");
  io::check_keys(zj, {"mean", "sd"}, {"mean", "sd"}, w + ".standardization");
  Standardization z;
  z.mean = get<std::vector<double>>(zj, "mean", w);
  z.sd = get<std::vector<double>>(zj, "sd", w);
  s = ShapeModel::neural(std::move(weights), std::move(z));
}

void to_json(nlohmann::json& j, const SurfaceModel& m) { j = json{{"shape", m.shape}, {"theta", m.theta}}; }

void from_json(const nlohmann::json& j, SurfaceModel& m) {
  io::check_keys(j, {"shape", "theta"}, {"shape", "theta"}, "surface");
  m.shape = j.at("shape").get<ShapeModel>();
  m.theta = get<std::map<std::string, double>>(j, "theta", "surface");
  for (const auto& [t, v] : m.theta) {
    if (!(v > 0.0)) throw io::SchemaError("surface.theta for '" + t + "' must be positive");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  json schedule = json::array();
  for (const auto& s : c.schedule) schedule.push_back(json{{"epoch", s.epoch}, {"lr", s.lr}});
  j = json{{"epochs", c.epochs},
           {"patience", c.patience},
           {"schedule", schedule},
           {"adam", json{{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
           {"seed", c.seed},
           {"train_shape", c.train_shape},
           {"train_theta", c.train_theta}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const std::string w = "train";
  io::check_keys(j, {"epochs", "patience", "schedule", "adam", "seed", "train_shape", "train_theta"}, {}, w);
  c = TrainConfig{};
  c.epochs = get_or(j, "epochs", c.epochs, w);
  c.patience = get_or(j, "patience", c.patience, w);
  c.seed = get_or(j, "seed", c.seed, w);
  c.train_shape = get_or(j, "train_shape", c.train_shape, w);
  c.train_theta = get_or(j, "train_theta", c.train_theta, w);
  if (j.contains("schedule")) {
    c.schedule.clear();
    for (const auto& s : j.at("schedule")) {
      io::check_keys(s, {"epoch", "lr"}, {"epoch", "lr"}, w + ".schedule");
      c.schedule.push_back({get<int>(s, "epoch", w), get<double>(s, "lr", w)});
    }
  }
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    io::check_keys(a, {"beta1", "beta2", "eps"}, {}, w + ".adam");
    c.adam.beta1 = get_or(a, "beta1", c.adam.beta1, w);
    c.adam.beta2 = get_or(a, "beta2", c.adam.beta2, w);
    c.adam.eps = get_or(a, "eps", c.adam.eps, w);
  }
  c.validate();
}

}  // namespace synthvol::surface

namespace synthvol::calibration {

void to_json(nlohmann::json& j, const FittedGroup& g) {
  j = json{{"key", g.key},
           {"observations", g.observations},
           {"inputs", g.inputs},
           {"width", g.width},
           {"train_rmse", g.train_rmse},
           {"epochs_run", g.epochs_run},
           {"best_epoch", g.best_epoch},
           {"model", g.model}};
}

void from_json(const nlohmann::json& j, FittedGroup& g) {
  const std::string w = "group";
  io::check_keys(j, {"key", "observations", "inputs", "width", "train_rmse", "epochs_run", "best_epoch", "model"},
                 {"key", "model"}, w);
  g = FittedGroup{};
  g.key = get<std::string>(j, "key", w);
  g.observations = get_or<std::size_t>(j, "observations", 0, w);
  g.inputs = get_or(j, "inputs", 0, w);
  g.width = get_or(j, "width", 0, w);
  g.train_rmse = get_or(j, "train_rmse", 0.0, w);
  g.epochs_run = get_or(j, "epochs_run", 0, w);
  g.best_epoch = get_or(j, "best_epoch", 0, w);
  g.model = j.at("model").get<surface::SurfaceModel>();
}

void to_json(nlohmann::json& j, const TieredModel& m) {
  j = json{{"schema_version", io::kSchemaVersion},
           {"kind", "model_bundle"},
           {"tier", to_string(m.tier)},
           {"global", m.global ? json(*m.global) : json(nullptr)},
           {"sectors", m.sectors},
           {"tickers", m.tickers},
           {"warnings", m.warnings}};
}

void from_json(const nlohmann::json& j, TieredModel& m) {
  const std::string w = "model bundle";
  io::check_keys(j, {"schema_version", "kind", "tier", "global", "sectors", "tickers", "warnings", "training"},
                 {"schema_version", "kind", "tier"}, w);
  io::check_schema_version(j, w);
  if (get<std::string>(j, "kind", w) != "model_bundle") throw io::SchemaError(w + ": kind must be model_bundle");
  m = TieredModel{};
  m.tier = parse_tier(get<std::string>(j, "tier", w));
  if (j.contains("global") && !j["global"].is_null()) m.global = j["global"].get<FittedGroup>();
  m.sectors = get_or<std::map<std::string, FittedGroup>>(j, "sectors", {}, w);
  m.tickers = get_or<std::map<std::string, FittedGroup>>(j, "tickers", {}, w);
  m.warnings = get_or<std::vector<std::string>>(j, "warnings", {}, w);
  if (!m.global && m.sectors.empty() && m.tickers.empty()) throw io::SchemaError(w + " holds no fitted groups");
}

void to_json(nlohmann::json& j, const TierConfig& c) {
  j = json{{"train", c.train},
           {"parametric_train", c.parametric_train},
           {"group_inputs", c.group_inputs},
           {"ticker_inputs", c.ticker_inputs},
           {"wide_group_min", c.wide_group_min},
           {"ticker_qualify_min", c.ticker_qualify_min},
           {"ticker_wide_min", c.ticker_wide_min},
           {"parametric_init", c.parametric_init.beta}};
}

void from_json(const nlohmann::json& j, TierConfig& c) {
  const std::string w = "tier_config";
  io::check_keys(j, {"train", "parametric_train", "group_inputs", "ticker_inputs", "wide_group_min", "ticker_qualify_min", "ticker_wide_min",
                     "parametric_init"},
                 {}, w);
  c = TierConfig{};
  if (j.contains("train")) c.train = j.at("train").get<surface::TrainConfig>();
  if (j.contains("parametric_train")) c.parametric_train = j.at("parametric_train").get<surface::TrainConfig>();
  c.group_inputs = get_or(j, "group_inputs", c.group_inputs, w);
  c.ticker_inputs = get_or(j, "ticker_inputs", c.ticker_inputs, w);
  c.wide_group_min = get_or(j, "wide_group_min", c.wide_group_min, w);
  c.ticker_qualify_min = get_or(j, "ticker_qualify_min", c.ticker_qualify_min, w);
  c.ticker_wide_min = get_or(j, "ticker_wide_min", c.ticker_wide_min, w);
  c.parametric_init.beta = get_or(j, "parametric_init", c.parametric_init.beta, w);
}

}  // namespace synthvol::calibration

namespace synthvol::scenario {

void to_json(nlohmann::json& j, const ScenarioContract& c) {
  j = json{{"name", c.name},
           {"parity", lattice::to_string(c.parity)},
           {"strike", c.strike},
           {"entry_premium", c.entry_premium},
           {"e", c.e},
           {"e_peer", c.e_peer}};
  if (c.market_delta) j["market_delta"] = *c.market_delta;
}

void from_json(const nlohmann::json& j, ScenarioContract& c) {
  const std::string w = "contract";
  io::check_keys(j, {"name", "parity", "strike", "entry_premium", "market_delta", "e", "e_peer"},
                 {"parity", "strike", "entry_premium"}, w);
  c = ScenarioContract{};
  c.name = get_or<std::string>(j, "name", "", w);
  try {
    c.parity = lattice::parse_parity(get<std::string>(j, "parity", w));
  } catch (const std::invalid_argument& e) {
    throw io::SchemaError(w + ".parity: " + e.what());
  }
  c.strike = get<double>(j, "strike", w);
  c.entry_premium = get<double>(j, "entry_premium", w);
  if (j.contains("market_delta")) c.market_delta = get<double>(j, "market_delta", w);
  c.e = get_or(j, "e", c.e, w);
  c.e_peer = get_or(j, "e_peer", c.e_peer, w);
  if (c.name.empty()) c.name = lattice::to_string(c.parity) + "_" + json(c.strike).dump();
}

void to_json(nlohmann::json& j, const PnlStats& s) {
  j = json::object();
  const auto& names = pnl_row_names();
  const auto values = pnl_row_values(s);
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
}

}  // namespace synthvol::scenario
