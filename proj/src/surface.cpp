#include "synthvol/surface.hpp"

#include <algorithm>
#include <cmath>

namespace synthvol::surface {

std::array<double, 5> psi_basis(double dte, double moneyness) {
  if (!(moneyness > 0.0) || !std::isfinite(moneyness)) throw SurfaceError("moneyness must be finite and positive");
  if (!std::isfinite(dte)) throw SurfaceError("DTE must be finite");
  const double lt = std::log(std::max(dte, 1.0));
  const double lm = std::log(moneyness);
  return {lt, lm, lt * lm, lm * lm, lt * lt};
}

double psi_param(double dte, double moneyness, const PsiBeta& beta) {
  const auto x = psi_basis(dte, moneyness);
  double s = 0.0;
  for (std::size_t k = 0; k < 5; ++k) s += beta.beta[k] * x[k];
  return std::exp(s);
}

ShapeModel ShapeModel::parametric(PsiBeta beta) {
  ShapeModel s;
  s.kind_ = Kind::Parametric;
  s.beta_ = beta;
  return s;
}

ShapeModel ShapeModel::neural(MLPWeights weights, Standardization z) {
  if (z.mean.empty() && z.sd.empty()) {
    z.mean.assign(weights.inputs(), 0.0);
    z.sd.assign(weights.inputs(), 1.0);
  }
  if (z.mean.size() != static_cast<std::size_t>(weights.inputs()) || z.sd.size() != z.mean.size()) {
    throw SurfaceError("standardization width does not match the network inputs");
  }
  for (double sd : z.sd) {
    if (!(sd > 0.0)) throw SurfaceError("standardization sd must be positive");
  }
  ShapeModel s;
  s.kind_ = Kind::Neural;
  s.weights_ = std::move(weights);
  s.z_ = std::move(z);
  return s;
}

double ShapeModel::log_psi(const SurfacePoint& p) const {
  if (kind_ == Kind::Parametric) {
    const auto x = psi_basis(p.dte, p.moneyness);
    double s = 0.0;
    for (std::size_t k = 0; k < 5; ++k) s += beta_.beta[k] * x[k];
    return s;
  }
  auto x = nn_features(p, weights_.inputs());
  z_.apply(x);
  return mlp_forward(weights_, x);
}

double ShapeModel::psi(const SurfacePoint& p) const { return std::exp(log_psi(p)); }

double SurfaceModel::level(const std::string& ticker) const {
  const auto it = theta.find(ticker);
  if (it == theta.end()) throw SurfaceError("no variance level for ticker '" + ticker + "'");
  return it->second;
}

double SurfaceModel::variance(const std::string& ticker, const SurfacePoint& p) const {
  return level(ticker) * shape.psi(p);
}

double SurfaceModel::iv(const std::string& ticker, const SurfacePoint& p) const {
  return std::sqrt(variance(ticker, p));
}

double rmse(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw SurfaceError("rmse inputs differ in length");
  if (predicted.empty()) throw SurfaceError("rmse of an empty set");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - observed[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predicted.size()));
}

}  // namespace synthvol::surface
