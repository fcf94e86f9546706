#pragma once

// Smile / term-structure shape functions psi and the per-ticker variance
// levels they multiply: model IV = sqrt(theta_ticker * psi(DTE, K/S, e, e_peer)).

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace synthvol::surface {

inline constexpr double kEarningsClip = 30.0;

/// Where on the surface a contract sits.
struct SurfacePoint {
  double dte = 1.0;          // days to expiry; floored at 1 inside psi
  double moneyness = 1.0;    // K / S
  double e = kEarningsClip;  // signed days to own print, clipped to [-30, 30]
  double e_peer = kEarningsClip;
};

class SurfaceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Five-coefficient log-polynomial in (ln tau, ln m).
struct PsiBeta {
  std::array<double, 5> beta{};  // term decay, skew, DTE-skew, smile, DTE curvature
};

/// ln tau, ln m, ln tau ln m, (ln m)^2, (ln tau)^2 with tau = max(DTE, 1).
std::array<double, 5> psi_basis(double dte, double moneyness);
double psi_param(double dte, double moneyness, const PsiBeta& beta);

/// tanh MLP with an identity output layer. Parameters live in one flat
/// vector, layer by layer: weights (out x in, row-major) then biases.
class MLPWeights {
 public:
  MLPWeights() = default;
  explicit MLPWeights(std::vector<int> layer_sizes);

  static MLPWeights zeros(std::vector<int> layer_sizes);
  /// Uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)); biases zero.
  static MLPWeights glorot(std::vector<int> layer_sizes, std::uint64_t seed);
  /// Standard architectures: inputs in {2, 4}, hidden width in {8, 16}.
  static std::vector<int> architecture(int inputs, int width);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int inputs() const { return sizes_.empty() ? 0 : sizes_.front(); }
  std::size_t layers() const { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + static_cast<std::size_t>(sizes_[layer]) * sizes_[layer + 1];
  }

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Output of the network (interpreted as ln psi).
double mlp_forward(const MLPWeights& w, std::span<const double> inputs);

/// Forward pass plus accumulation of upstream * d(output)/d(params) into
/// `grad` (same layout as w.params()). Returns the output.
double mlp_forward_backward(const MLPWeights& w, std::span<const double> inputs, double upstream,
                            std::span<double> grad);

struct Standardization {
  std::vector<double> mean;
  std::vector<double> sd;

  /// Column statistics of row-major `rows` with `width` columns. A constant
  /// column gets sd = 1.
  static Standardization fit(std::span<const double> rows, int width);
  void apply(std::span<double> x) const;
};

/// Raw network inputs: [ln tau, ln m] or [ln tau, ln m, e, e_peer].
std::vector<double> nn_features(const SurfacePoint& p, int inputs);

double psi_nn(const SurfacePoint& p, const MLPWeights& w, const Standardization& z);

/// Either representation of psi behind one interface.
class ShapeModel {
 public:
  enum class Kind { Parametric, Neural };

  ShapeModel() = default;
  static ShapeModel parametric(PsiBeta beta);
  /// An empty standardization means identity (mean 0, sd 1).
  static ShapeModel neural(MLPWeights weights, Standardization z = {});

  Kind kind() const { return kind_; }
  int inputs() const { return kind_ == Kind::Parametric ? 2 : weights_.inputs(); }
  const PsiBeta& beta() const { return beta_; }
  PsiBeta& beta() { return beta_; }
  const MLPWeights& weights() const { return weights_; }
  MLPWeights& weights() { return weights_; }
  const Standardization& standardization() const { return z_; }
  Standardization& standardization() { return z_; }

  double log_psi(const SurfacePoint& p) const;
  double psi(const SurfacePoint& p) const;

 private:
  Kind kind_ = Kind::Parametric;
  PsiBeta beta_{};
  MLPWeights weights_;
  Standardization z_;
};

/// A shape plus the per-ticker variance levels fitted with it.
struct SurfaceModel {
  ShapeModel shape;
  std::map<std::string, double> theta;

  bool has_ticker(const std::string& ticker) const { return theta.count(ticker) > 0; }
  double level(const std::string& ticker) const;
  /// theta_ticker * psi(point)
  double variance(const std::string& ticker, const SurfacePoint& p) const;
  double iv(const std::string& ticker, const SurfacePoint& p) const;
};

// ---------------------------------------------------------------------------
// Training

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const AdamConfig& config = {});

struct LrStep {
  int epoch;
  double lr;
};

struct TrainConfig {
  int epochs = 2000;
  int patience = 200;
  std::vector<LrStep> schedule{{0, 1e-3}, {500, 5e-4}, {1000, 2e-4}, {1500, 1e-4}};
  AdamConfig adam{};
  std::uint64_t seed = 7;
  bool train_shape = true;
  bool train_theta = true;

  double lr_at(int epoch) const;
  void validate() const;
};

struct SurfaceSample {
  std::string ticker;
  SurfacePoint point;
  double iv = 0.0;
};

struct TrainResult {
  SurfaceModel model;
  std::vector<double> loss_history;  // best-so-far training loss per epoch
  double train_rmse = 0.0;           // sqrt(best loss), IV units
  int epochs_run = 0;
  int best_epoch = 0;
  std::vector<std::string> warnings;
};

/// Joint Adam fit of the shape and the per-ticker ln theta levels to the mean
/// squared IV error. For a neural shape the standardization is refitted on
/// `samples`; ln theta starts at ln(mean IV^2) per ticker.
TrainResult train_surface(std::span<const SurfaceSample> samples, ShapeModel init, const TrainConfig& config);

/// Loss and gradient with respect to [shape params..., ln theta per ticker...]
/// in `ticker_order`; exposed for gradient checks.
struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;
};
LossGradient surface_loss_gradient(std::span<const SurfaceSample> samples, const ShapeModel& shape,
                                   std::span<const std::string> ticker_order, std::span<const double> log_theta);

double rmse(std::span<const double> predicted, std::span<const double> observed);

}  // namespace synthvol::surface
