#include <cmath>
#include <random>

#include "synthvol/surface.hpp"

namespace synthvol::surface {
namespace {

constexpr std::size_t kMaxWidth = 64;

}  // namespace

MLPWeights::MLPWeights(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw SurfaceError("an MLP needs at least an input and an output layer");
  if (sizes_.back() != 1) throw SurfaceError("the MLP must have a single output");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw SurfaceError("layer sizes must be positive");
    if (static_cast<std::size_t>(sizes_[l]) > kMaxWidth || static_cast<std::size_t>(sizes_[l + 1]) > kMaxWidth) {
      throw SurfaceError("layer wider than 64 units");
    }
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

MLPWeights MLPWeights::zeros(std::vector<int> layer_sizes) { return MLPWeights(std::move(layer_sizes)); }

MLPWeights MLPWeights::glorot(std::vector<int> layer_sizes, std::uint64_t seed) {
  MLPWeights w(std::move(layer_sizes));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < w.layers(); ++l) {
    const int fan_in = w.sizes_[l];
    const int fan_out = w.sizes_[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    const std::size_t off = w.weight_offset(l);
    for (std::size_t k = 0; k < static_cast<std::size_t>(fan_in) * fan_out; ++k) w.params_[off + k] = dist(rng);
  }
  return w;
}

std::vector<int> MLPWeights::architecture(int inputs, int width) {
  if (inputs != 2 && inputs != 4) throw SurfaceError("psi networks take 2 or 4 inputs");
  if (width < 1) throw SurfaceError("hidden width must be positive");
  return {inputs, width, width, 1};
}

double mlp_forward(const MLPWeights& w, std::span<const double> inputs) {
  if (inputs.size() != static_cast<std::size_t>(w.inputs())) throw SurfaceError("input length does not match the first layer");
  const auto& sizes = w.layer_sizes();
  const auto p = w.params();
  double a[kMaxWidth];
  double b[kMaxWidth];
  for (std::size_t i = 0; i < inputs.size(); ++i) a[i] = inputs[i];
  for (std::size_t l = 0; l < w.layers(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double* W = p.data() + w.weight_offset(l);
    const double* bias = p.data() + w.bias_offset(l);
    const bool hidden = l + 1 < w.layers();
    for (int o = 0; o < out; ++o) {
      double z = bias[o];
      for (int i = 0; i < in; ++i) z += W[o * in + i] * a[i];
      b[o] = hidden ? std::tanh(z) : z;
    }
    for (int o = 0; o < out; ++o) a[o] = b[o];
  }
  return a[0];
}

double mlp_forward_backward(const MLPWeights& w, std::span<const double> inputs, double upstream,
                            std::span<double> grad) {
  if (inputs.size() != static_cast<std::size_t>(w.inputs())) throw SurfaceError("input length does not match the first layer");
  if (grad.size() != w.parameter_count()) throw SurfaceError("gradient buffer has the wrong size");
  const auto& sizes = w.layer_sizes();
  const auto p = w.params();
  const std::size_t L = w.layers();

  // Activations per layer (layer 0 = inputs).
  double act[8][kMaxWidth];
  if (L + 1 > 8) throw SurfaceError("at most 7 layers supported");
  for (std::size_t i = 0; i < inputs.size(); ++i) act[0][i] = inputs[i];
  for (std::size_t l = 0; l < L; ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double* W = p.data() + w.weight_offset(l);
    const double* bias = p.data() + w.bias_offset(l);
    const bool hidden = l + 1 < L;
    for (int o = 0; o < out; ++o) {
      double z = bias[o];
      for (int i = 0; i < in; ++i) z += W[o * in + i] * act[l][i];
      act[l + 1][o] = hidden ? std::tanh(z) : z;
    }
  }
  const double output = act[L][0];

  // delta = d(upstream * output)/d(pre-activation) of the current layer.
  double delta[kMaxWidth];
  double prev[kMaxWidth];
  delta[0] = upstream;
  for (std::size_t l = L; l-- > 0;) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double* W = p.data() + w.weight_offset(l);
    double* gW = grad.data() + w.weight_offset(l);
    double* gb = grad.data() + w.bias_offset(l);
    for (int o = 0; o < out; ++o) {
      gb[o] += delta[o];
      for (int i = 0; i < in; ++i) gW[o * in + i] += delta[o] * act[l][i];
    }
    if (l == 0) break;
    for (int i = 0; i < in; ++i) {
      double s = 0.0;
      for (int o = 0; o < out; ++o) s += W[o * in + i] * delta[o];
      const double a = act[l][i];
      prev[i] = s * (1.0 - a * a);
    }
    for (int i = 0; i < in; ++i) delta[i] = prev[i];
  }
  return output;
}

Standardization Standardization::fit(std::span<const double> rows, int width) {
  if (width < 1) throw SurfaceError("standardization width must be positive");
  const std::size_t n = rows.size() / static_cast<std::size_t>(width);
  if (n == 0) throw SurfaceError("cannot standardize an empty training set");
  Standardization z;
  z.mean.assign(width, 0.0);
  z.sd.assign(width, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (int c = 0; c < width; ++c) z.mean[c] += rows[r * width + c];
  }
  for (double& m : z.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (int c = 0; c < width; ++c) {
      const double d = rows[r * width + c] - z.mean[c];
      z.sd[c] += d * d;
    }
  }
  for (double& s : z.sd) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 1e-12)) s = 1.0;
  }
  return z;
}

void Standardization::apply(std::span<double> x) const {
  if (x.size() != mean.size()) throw SurfaceError("standardization width mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - mean[i]) / sd[i];
}

std::vector<double> nn_features(const SurfacePoint& p, int inputs) {
  if (!(p.moneyness > 0.0)) throw SurfaceError("moneyness must be positive");
  const double tau = std::max(p.dte, 1.0);
  std::vector<double> x{std::log(tau), std::log(p.moneyness)};
  if (inputs == 4) {
    x.push_back(p.e);
    x.push_back(p.e_peer);
  } else if (inputs != 2) {
    throw SurfaceError("psi networks take 2 or 4 inputs");
  }
  return x;
}

double psi_nn(const SurfacePoint& p, const MLPWeights& w, const Standardization& z) {
  auto x = nn_features(p, w.inputs());
  z.apply(x);
  return std::exp(mlp_forward(w, x));
}

}  // namespace synthvol::surface
