#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "synthvol/surface.hpp"

namespace synthvol::surface {
namespace {

constexpr double kVarianceFloor = 1e-10;

std::size_t shape_param_count(const ShapeModel& shape) {
  return shape.kind() == ShapeModel::Kind::Parametric ? 5 : shape.weights().parameter_count();
}

void load_shape(ShapeModel& shape, std::span<const double> params) {
  if (shape.kind() == ShapeModel::Kind::Parametric) {
    std::copy_n(params.begin(), 5, shape.beta().beta.begin());
  } else {
    auto dst = shape.weights().params();
    std::copy_n(params.begin(), dst.size(), dst.begin());
  }
}

void store_shape(const ShapeModel& shape, std::span<double> params) {
  if (shape.kind() == ShapeModel::Kind::Parametric) {
    std::copy(shape.beta().beta.begin(), shape.beta().beta.end(), params.begin());
  } else {
    const auto src = shape.weights().params();
    std::copy(src.begin(), src.end(), params.begin());
  }
}

// Precomputed per-sample inputs: the parametric basis or standardized NN features.
struct Design {
  int width = 0;
  std::vector<double> x;       // n x width
  std::vector<std::size_t> ticker;

  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(width), static_cast<std::size_t>(width)};
  }
};

Design build_design(std::span<const SurfaceSample> samples, const ShapeModel& shape,
                    std::span<const std::string> ticker_order) {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < ticker_order.size(); ++k) index[ticker_order[k]] = k;
  Design d;
  d.width = shape.kind() == ShapeModel::Kind::Parametric ? 5 : shape.weights().inputs();
  d.x.reserve(samples.size() * d.width);
  d.ticker.reserve(samples.size());
  for (const auto& s : samples) {
    const auto it = index.find(s.ticker);
    if (it == index.end()) throw SurfaceError("sample ticker '" + s.ticker + "' has no variance level");
    d.ticker.push_back(it->second);
    if (shape.kind() == ShapeModel::Kind::Parametric) {
      const auto b = psi_basis(s.point.dte, s.point.moneyness);
      d.x.insert(d.x.end(), b.begin(), b.end());
    } else {
      auto f = nn_features(s.point, d.width);
      shape.standardization().apply(f);
      d.x.insert(d.x.end(), f.begin(), f.end());
    }
  }
  return d;
}

LossGradient evaluate(const Design& d, std::span<const SurfaceSample> samples, const ShapeModel& shape,
                      std::span<const double> log_theta) {
  const std::size_t n = samples.size();
  const std::size_t n_shape = shape_param_count(shape);
  LossGradient out;
  out.grad.assign(n_shape + log_theta.size(), 0.0);
  std::span<double> g_shape(out.grad.data(), n_shape);
  std::span<double> g_theta(out.grad.data() + n_shape, log_theta.size());
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool parametric = shape.kind() == ShapeModel::Kind::Parametric;

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = d.row(i);
    const std::size_t t = d.ticker[i];
    double log_psi = 0.0;
    if (parametric) {
      for (std::size_t k = 0; k < 5; ++k) log_psi += shape.beta().beta[k] * x[k];
    } else {
      log_psi = mlp_forward(shape.weights(), x);
    }
    const double var = std::exp(log_theta[t] + log_psi);
    const bool clamped = !(var >= kVarianceFloor);
    const double model_iv = std::sqrt(clamped ? kVarianceFloor : var);
    const double resid = model_iv - samples[i].iv;
    loss += resid * resid;
    if (clamped) continue;
    // d/d(ln theta) and d/d(ln psi) of sqrt(theta psi) are both sqrt(theta psi) / 2.
    const double upstream = 2.0 * inv_n * resid * 0.5 * model_iv;
    g_theta[t] += upstream;
    if (parametric) {
      for (std::size_t k = 0; k < 5; ++k) g_shape[k] += upstream * x[k];
    } else {
      mlp_forward_backward(shape.weights(), x, upstream, g_shape);
    }
  }
  out.loss = loss * inv_n;
  return out;
}

std::vector<std::string> tickers_of(std::span<const SurfaceSample> samples) {
  std::vector<std::string> t;
  for (const auto& s : samples) t.push_back(s.ticker);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const AdamConfig& config) {
  if (params.size() != grads.size()) throw SurfaceError("Adam: parameter and gradient sizes differ");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

double TrainConfig::lr_at(int epoch) const {
  double lr = schedule.front().lr;
  for (const auto& s : schedule) {
    if (epoch >= s.epoch) lr = s.lr;
  }
  return lr;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw SurfaceError("epochs must be positive");
  if (patience < 1) throw SurfaceError("patience must be positive");
  if (schedule.empty()) throw SurfaceError("learning-rate schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i].lr > 0.0)) throw SurfaceError("learning rates must be positive");
    if (i > 0 && schedule[i].epoch <= schedule[i - 1].epoch) {
      throw SurfaceError("learning-rate schedule epochs must be increasing");
    }
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
    throw SurfaceError("invalid Adam hyperparameters");
  }
}

LossGradient surface_loss_gradient(std::span<const SurfaceSample> samples, const ShapeModel& shape,
                                   std::span<const std::string> ticker_order, std::span<const double> log_theta) {
  if (samples.empty()) throw SurfaceError("no samples");
  if (ticker_order.size() != log_theta.size()) throw SurfaceError("ticker order and levels differ in length");
  const Design d = build_design(samples, shape, ticker_order);
  return evaluate(d, samples, shape, log_theta);
}

TrainResult train_surface(std::span<const SurfaceSample> samples, ShapeModel init, const TrainConfig& config) {
  config.validate();
  if (samples.empty()) throw SurfaceError("cannot train on zero observations");
  for (const auto& s : samples) {
    if (!(s.iv > 0.0) || !std::isfinite(s.iv)) throw SurfaceError("training IVs must be finite and positive");
  }

  ShapeModel shape = std::move(init);
  if (shape.kind() == ShapeModel::Kind::Neural) {
    const int width = shape.weights().inputs();
    std::vector<double> rows;
    rows.reserve(samples.size() * width);
    for (const auto& s : samples) {
      const auto f = nn_features(s.point, width);
      rows.insert(rows.end(), f.begin(), f.end());
    }
    shape.standardization() = Standardization::fit(rows, width);
  }

  const auto tickers = tickers_of(samples);
  std::vector<double> log_theta(tickers.size(), 0.0);
  {
    std::vector<double> sum(tickers.size(), 0.0);
    std::vector<std::size_t> count(tickers.size(), 0);
    for (const auto& s : samples) {
      const auto k = static_cast<std::size_t>(std::lower_bound(tickers.begin(), tickers.end(), s.ticker) - tickers.begin());
      sum[k] += s.iv * s.iv;
      ++count[k];
    }
    for (std::size_t k = 0; k < tickers.size(); ++k) log_theta[k] = std::log(sum[k] / static_cast<double>(count[k]));
  }

  const Design design = build_design(samples, shape, tickers);
  const std::size_t n_shape = shape_param_count(shape);
  std::vector<double> params(n_shape + tickers.size());
  store_shape(shape, std::span<double>(params.data(), n_shape));
  std::copy(log_theta.begin(), log_theta.end(), params.begin() + static_cast<std::ptrdiff_t>(n_shape));

  TrainResult result;
  std::vector<double> best_params = params;
  double best_loss = std::numeric_limits<double>::infinity();
  AdamState adam;

  auto loss_at = [&](const std::vector<double>& p) {
    load_shape(shape, std::span<const double>(p.data(), n_shape));
    return evaluate(design, samples, shape, std::span<const double>(p.data() + n_shape, tickers.size()));
  };

  int epoch = 0;
  for (; epoch < config.epochs; ++epoch) {
    LossGradient lg = loss_at(params);
    if (!std::isfinite(lg.loss)) {
      std::ostringstream msg;
      msg << "non-finite training loss at epoch " << epoch << " (best loss " << best_loss << " at epoch "
          << result.best_epoch << ", " << samples.size() << " samples)";
      throw SurfaceError(msg.str());
    }
    if (lg.loss < best_loss) {
      best_loss = lg.loss;
      best_params = params;
      result.best_epoch = epoch;
    } else if (epoch - result.best_epoch >= config.patience) {
      result.loss_history.push_back(best_loss);
      break;
    }
    result.loss_history.push_back(best_loss);
    if (!config.train_shape) std::fill_n(lg.grad.begin(), n_shape, 0.0);
    if (!config.train_theta) std::fill(lg.grad.begin() + static_cast<std::ptrdiff_t>(n_shape), lg.grad.end(), 0.0);
    adam_step(params, lg.grad, adam, config.lr_at(epoch), config.adam);
  }
  result.epochs_run = epoch;
  if (epoch == config.epochs) {
    const double final_loss = loss_at(params).loss;
    if (std::isfinite(final_loss) && final_loss < best_loss) {
      best_loss = final_loss;
      best_params = params;
      result.best_epoch = epoch;
    }
  }

  load_shape(shape, std::span<const double>(best_params.data(), n_shape));
  result.model.shape = std::move(shape);
  for (std::size_t k = 0; k < tickers.size(); ++k) result.model.theta[tickers[k]] = std::exp(best_params[n_shape + k]);
  result.train_rmse = std::sqrt(best_loss);
  return result;
}

}  // namespace synthvol::surface
