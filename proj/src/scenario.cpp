#include "synthvol/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "synthvol/stats.hpp"

namespace synthvol::scenario {
namespace {

lattice::ContractSpec contract_at(const ScenarioContract& c, const ScenarioConfig& cfg, int t) {
  lattice::ContractSpec spec;
  spec.strike = c.strike;
  spec.tau = (cfg.horizon - t) / lattice::kTradingDaysPerYear;
  spec.parity = c.parity;
  spec.style = lattice::Style::American;
  spec.rate = cfg.rate;
  return spec;
}

double contract_sigma(const ScenarioConfig& cfg, const ScenarioContract& c, double spot, double level, int t) {
  const surface::SurfacePoint point{static_cast<double>(cfg.horizon - t), c.strike / spot, c.e, c.e_peer};
  return std::sqrt(std::max(level, 0.0) * cfg.surface.shape.psi(point));
}

// Central differences; when the IV is too small for a downward bump, Vega
// falls back to a forward difference.
lattice::GreeksResult path_greeks(double spot, const lattice::ContractSpec& contract, double sigma,
                                  const ScenarioConfig& cfg) {
  const lattice::LatticeSpec lr{lattice::LatticeKind::LR, cfg.lr_steps};
  if (sigma - cfg.h_sigma > 0.0) return lattice::fd_greeks(spot, contract, sigma, lr, cfg.h_spot, cfg.h_sigma);
  lattice::GreeksResult g;
  const double up_s = lattice::price(spot * (1.0 + cfg.h_spot), contract, sigma, lr);
  const double down_s = lattice::price(spot * (1.0 - cfg.h_spot), contract, sigma, lr);
  const double mid = lattice::price(spot, contract, sigma, lr);
  const double up_v = lattice::price(spot, contract, sigma + cfg.h_sigma, lr);
  const double step = cfg.h_spot * spot;
  g.delta = (up_s - down_s) / (2.0 * step);
  g.gamma = (up_s - 2.0 * mid + down_s) / (step * step);
  g.vega = (up_v - mid) / cfg.h_sigma;
  g.vega_per_pct = g.vega * 0.01;
  g.gamma_aliasing = g.gamma < -1e-6;
  return g;
}

void fill_greeks(ScenarioResult& r, const ScenarioConfig& cfg, int path) {
  for (std::size_t c = 0; c < cfg.contracts.size(); ++c) {
    auto& cp = r.contracts[c];
    for (int t = 0; t < cfg.horizon; ++t) {
      const std::size_t i = r.day_index(path, t);
      const auto g = path_greeks(r.spot[i], contract_at(cfg.contracts[c], cfg, t), cp.sigma[i], cfg);
      cp.delta[i] = g.delta;
      cp.gamma[i] = g.gamma;
      cp.vega[i] = g.vega;
    }
  }
}

void simulate_path(ScenarioResult& r, const ScenarioConfig& cfg, int path) {
  const int T = cfg.horizon;
  auto rng = jumphmm::stream_rng(cfg.seed, static_cast<std::uint64_t>(path));
  const auto states = jumphmm::simulate_states(cfg.hmm, T, rng);
  const auto draws = jumphmm::simulate_returns(cfg.hmm, states, rng);
  const auto prices = jumphmm::prices_from_growth(cfg.spot, draws.growth);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double theta = cfg.theta();
  const lattice::LatticeSpec lr{lattice::LatticeKind::LR, cfg.lr_steps};
  double v = theta;
  for (int t = 0; t <= T; ++t) {
    const std::size_t i = r.day_index(path, t);
    r.spot[i] = prices[t];
    r.variance[i] = v;
    for (std::size_t c = 0; c < cfg.contracts.size(); ++c) {
      const auto& contract = cfg.contracts[c];
      auto& cp = r.contracts[c];
      cp.sigma[i] = contract_sigma(cfg, contract, prices[t], v, t);
      if (t < T) {
        try {
          cp.value[i] = lattice::price(prices[t], contract_at(contract, cfg, t), cp.sigma[i], lr);
        } catch (const std::exception& e) {
          std::ostringstream msg;
          msg << "pricing failed on path " << path << ", day " << t << ", contract '" << contract.name
              << "': " << e.what();
          throw std::runtime_error(msg.str());
        }
      } else {
        cp.value[i] = lattice::intrinsic(prices[t], contract.strike, contract.parity);
        cp.payoff[path] = cp.value[i];
        cp.pnl[path] = contract.entry_premium - cp.payoff[path];
      }
      cp.mark_pnl[i] = contract.entry_premium - cp.value[i];
    }
    if (t == T) break;
    const std::size_t k = r.step_index(path, t);
    const double z_perp = normal(rng);
    r.states[k] = states[t];
    r.z_s[k] = draws.innovation[t];
    r.z_v[k] = variance::leverage_draw(cfg.heston.rho, draws.innovation[t], z_perp);
    v = variance::euler_step(v, theta, cfg.heston, r.z_v[k]);
  }
  if (cfg.greeks) fill_greeks(r, cfg, path);
}

template <typename Fn>
void for_each_path(int n_paths, int threads, Fn&& fn) {
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_paths));
  auto worker = [&] {
    for (int j = next++; j < n_paths; j = next++) {
      try {
        fn(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, n_paths);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ScenarioResult allocate(const ScenarioConfig& cfg) {
  ScenarioResult r;
  r.n_paths = cfg.n_paths;
  r.horizon = cfg.horizon;
  const std::size_t days = static_cast<std::size_t>(cfg.n_paths) * (cfg.horizon + 1);
  const std::size_t steps = static_cast<std::size_t>(cfg.n_paths) * cfg.horizon;
  r.spot.assign(days, 0.0);
  r.variance.assign(days, 0.0);
  r.states.assign(steps, 0);
  r.z_s.assign(steps, 0.0);
  r.z_v.assign(steps, 0.0);
  r.contracts.resize(cfg.contracts.size());
  for (auto& c : r.contracts) {
    c.sigma.assign(days, 0.0);
    c.value.assign(days, 0.0);
    c.mark_pnl.assign(days, 0.0);
    c.payoff.assign(cfg.n_paths, 0.0);
    c.pnl.assign(cfg.n_paths, 0.0);
    if (cfg.greeks) {
      c.delta.assign(days, 0.0);
      c.gamma.assign(days, 0.0);
      c.vega.assign(days, 0.0);
    }
  }
  return r;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (ticker.empty()) throw ScenarioError("scenario needs a ticker");
  if (horizon < 1) throw ScenarioError("horizon must be at least one day");
  if (n_paths < 1) throw ScenarioError("n_paths must be at least 1");
  if (lr_steps < 3 || lr_steps % 2 == 0) throw ScenarioError("lr_steps must be an odd number of at least 3");
  if (!(spot > 0.0)) throw ScenarioError("spot must be positive");
  if (!std::isfinite(rate)) throw ScenarioError("rate must be finite");
  if (!(h_spot > 0.0 && h_spot < 1.0) || !(h_sigma > 0.0)) throw ScenarioError("Greek bumps must be positive");
  if (contracts.empty()) throw ScenarioError("scenario needs at least one contract");
  for (const auto& c : contracts) {
    if (!(c.strike > 0.0)) throw ScenarioError("contract strikes must be positive");
    if (!(c.entry_premium >= 0.0)) throw ScenarioError("entry premiums must be non-negative");
  }
  if (threads < 1) throw ScenarioError("threads must be at least 1");
  try {
    hmm.validate();
    heston.validate();
    if (!(surface.level(ticker) > 0.0)) throw ScenarioError("theta for the ticker must be positive");
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(e.what());
  }
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  ScenarioResult r = allocate(config);
  for_each_path(config.n_paths, config.threads, [&](int j) { simulate_path(r, config, j); });
  return r;
}

void greeks_along_paths(ScenarioResult& result, const ScenarioConfig& config) {
  config.validate();
  if (result.n_paths != config.n_paths || result.horizon != config.horizon ||
      result.contracts.size() != config.contracts.size()) {
    throw ScenarioError("result does not match the configuration");
  }
  const std::size_t days = result.spot.size();
  for (auto& c : result.contracts) {
    c.delta.assign(days, 0.0);
    c.gamma.assign(days, 0.0);
    c.vega.assign(days, 0.0);
  }
  for_each_path(config.n_paths, config.threads, [&](int j) { fill_greeks(result, config, j); });
}

std::vector<PnlStats> pnl_stats(const ScenarioResult& result, const std::vector<ScenarioContract>& contracts) {
  if (contracts.size() != result.contracts.size()) throw ScenarioError("one contract description per simulated contract");
  std::vector<PnlStats> out;
  for (std::size_t c = 0; c < contracts.size(); ++c) {
    const auto& cp = result.contracts[c];
    PnlStats s;
    s.strike = contracts[c].strike;
    s.entry_premium = contracts[c].entry_premium;
    s.model_value = cp.value[result.day_index(0, 0)];
    s.entry_edge = s.model_value - s.entry_premium;
    s.mean = stats::mean(cp.pnl);
    const double ps[] = {0.5, 0.05};
    const auto q = stats::quantiles(cp.pnl, ps);
    s.median = q[0];
    s.p5 = q[1];
    s.std = stats::stddev(cp.pnl);
    s.worst = *std::min_element(cp.pnl.begin(), cp.pnl.end());
    const auto kept = std::count(cp.payoff.begin(), cp.payoff.end(), 0.0);
    s.kept_fraction = static_cast<double>(kept) / static_cast<double>(cp.payoff.size());
    out.push_back(s);
  }
  return out;
}

const std::vector<std::string>& pnl_row_names() {
  static const std::vector<std::string> names{"Strike K",
                                              "Market mid (entry premium)",
                                              "Model t=0 fair value",
                                              "Entry edge (model - market)",
                                              "Mean P&L",
                                              "Median P&L",
                                              "Std P&L",
                                              "5%-tile P&L",
                                              "Worst-case P&L",
                                              "Premium kept in full"};
  return names;
}

std::vector<double> pnl_row_values(const PnlStats& s) {
  return {s.strike, s.entry_premium, s.model_value, s.entry_edge, s.mean, s.median, s.std, s.p5, s.worst, s.kept_fraction};
}

DeltaRuleRow delta_rule(double market_delta, double simulated_kept) {
  DeltaRuleRow row;
  row.abs_delta = std::fabs(market_delta);
  row.predicted_kept = 1.0 - row.abs_delta;
  row.simulated_kept = simulated_kept;
  row.deviation = simulated_kept - row.predicted_kept;
  return row;
}

std::vector<DeltaRuleRow> delta_rule_check(const ScenarioResult& result, const std::vector<double>& market_deltas) {
  if (market_deltas.size() != result.contracts.size()) throw ScenarioError("one market delta per contract");
  std::vector<DeltaRuleRow> out;
  for (std::size_t c = 0; c < market_deltas.size(); ++c) {
    const auto& payoff = result.contracts[c].payoff;
    const double kept = static_cast<double>(std::count(payoff.begin(), payoff.end(), 0.0)) / payoff.size();
    out.push_back(delta_rule(market_deltas[c], kept));
  }
  return out;
}

TailBins tail_bins(const ScenarioResult& result) {
  const int n = result.n_paths;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return result.terminal_spot(a) < result.terminal_spot(b); });
  const int n5 = n / 20;
  const int n1 = n / 100;
  TailBins bins;
  bins.worst.assign(order.begin(), order.begin() + n5);
  bins.top.assign(order.end() - n5, order.end());
  bins.top_overlay.assign(order.end() - n5, order.end() - n1);
  return bins;
}

}  // namespace synthvol::scenario
