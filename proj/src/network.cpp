#include "ssdal/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ssdal/error.hpp"
#include "ssdal/rng.hpp"

namespace ssdal {

namespace {

double activate(Activation activation, double z) noexcept {
  switch (activation) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::tanh:
      return std::tanh(z);
    case Activation::sigmoid:
      return sigmoid(z);
  }
  return z;
}

// Derivative expressed through the pre-activation z and the activation a.
double activate_derivative(Activation activation, double z, double a) noexcept {
  switch (activation) {
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - a * a;
    case Activation::sigmoid:
      return a * (1.0 - a);
  }
  return 1.0;
}

GradientBundle propagate(const NetworkParams& params, const ForwardTrace& trace,
                         std::size_t top, Matrix delta) {
  GradientBundle grads = GradientBundle::zeros_like(params);
  for (std::size_t l = top + 1; l-- > 0;) {
    const Matrix& below = l == 0 ? trace.inputs : trace.activations[l - 1];
    grads.layers[l].weight = transposed_matmul(delta, below);
    auto& bias = grads.layers[l].bias;
    for (std::size_t n = 0; n < delta.rows(); ++n) {
      const auto row = delta.row(n);
      for (std::size_t j = 0; j < row.size(); ++j) bias[j] += row[j];
    }
    if (l == 0) break;
    Matrix next = matmul(delta, params.layers[l].weight);
    const Activation act = params.layers[l - 1].activation;
    const auto z = trace.pre_activations[l - 1].values();
    const auto a = trace.activations[l - 1].values();
    auto d = next.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= activate_derivative(act, z[i], a[i]);
    delta = std::move(next);
  }
  return grads;
}

}  // namespace

std::string_view to_string(Activation activation) noexcept {
  switch (activation) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  fail(ErrorKind::config, "unknown activation '" + std::string(name) + "'");
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void NetworkConfig::validate() const {
  require(layer_sizes.size() >= 2, ErrorKind::config,
          "network needs at least an input and an output size");
  for (std::size_t size : layer_sizes) {
    require(size > 0, ErrorKind::config, "layer sizes must be positive");
  }
  require(hidden_activation != Activation::sigmoid, ErrorKind::config,
          "hidden activation must be relu or tanh");
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers) total += layer.weight.size() + layer.bias.size();
  return total;
}

void NetworkParams::validate() const {
  require(!layers.empty(), ErrorKind::shape, "network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    require(layer.weight.rows() > 0 && layer.weight.cols() > 0, ErrorKind::shape,
            "empty weight matrix in layer " + std::to_string(l));
    require(layer.bias.size() == layer.weight.rows(), ErrorKind::shape,
            "bias length mismatch in layer " + std::to_string(l));
    if (l > 0) {
      require(layer.weight.cols() == layers[l - 1].weight.rows(), ErrorKind::shape,
              "layer " + std::to_string(l) + " does not chain with its predecessor");
    }
  }
  require(layers.back().activation == Activation::sigmoid, ErrorKind::shape,
          "output layer must be sigmoid");
}

NetworkParams init_network(const NetworkConfig& config) {
  config.validate();
  Rng rng(config.init_seed);
  NetworkParams params;
  const std::size_t count = config.layer_sizes.size() - 1;
  for (std::size_t l = 0; l < count; ++l) {
    const std::size_t in = config.layer_sizes[l];
    const std::size_t out = config.layer_sizes[l + 1];
    const double scale = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer layer;
    layer.weight = Matrix(out, in);
    for (double& w : layer.weight.values()) w = rng.uniform(-scale, scale);
    layer.bias.assign(out, 0.0);
    layer.activation = l + 1 == count ? Activation::sigmoid : config.hidden_activation;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ForwardTrace forward(const NetworkParams& params, const Matrix& inputs) {
  params.validate();
  require(inputs.cols() == params.input_dim(), ErrorKind::shape,
          "input has " + std::to_string(inputs.cols()) + " columns, network expects " +
              std::to_string(params.input_dim()));
  ForwardTrace trace;
  trace.inputs = inputs;
  const Matrix* below = &trace.inputs;
  for (const auto& layer : params.layers) {
    Matrix z = matmul_transposed(*below, layer.weight);
    for (std::size_t n = 0; n < z.rows(); ++n) {
      auto row = z.row(n);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
    }
    Matrix a = z;
    for (double& v : a.values()) v = activate(layer.activation, v);
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
    below = &trace.activations.back();
  }
  return trace;
}

GradientBundle backward(const NetworkParams& params, const ForwardTrace& trace,
                        const Matrix& dL_dlogits) {
  const Matrix& logits = trace.logits();
  require(dL_dlogits.rows() == logits.rows() && dL_dlogits.cols() == logits.cols(),
          ErrorKind::shape, "dL/dlogits shape does not match the forward trace");
  require(trace.pre_activations.size() == params.layers.size(), ErrorKind::shape,
          "trace was produced by a different network");
  return propagate(params, trace, params.layers.size() - 1, dL_dlogits);
}

GradientBundle backward_from_activation(const NetworkParams& params,
                                        const ForwardTrace& trace, std::size_t layer,
                                        const Matrix& dL_dactivation) {
  require(layer < params.layers.size(), ErrorKind::shape, "layer index out of range");
  const Matrix& a = trace.activations[layer];
  require(dL_dactivation.rows() == a.rows() && dL_dactivation.cols() == a.cols(),
          ErrorKind::shape, "activation gradient shape mismatch");
  Matrix delta = dL_dactivation;
  const Activation act = params.layers[layer].activation;
  const auto z = trace.pre_activations[layer].values();
  const auto av = a.values();
  auto d = delta.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= activate_derivative(act, z[i], av[i]);
  return propagate(params, trace, layer, std::move(delta));
}

GradientBundle GradientBundle::zeros_like(const NetworkParams& params) {
  GradientBundle out;
  for (const auto& layer : params.layers) {
    out.layers.push_back({Matrix(layer.weight.rows(), layer.weight.cols()),
                          std::vector<double>(layer.bias.size(), 0.0)});
  }
  return out;
}

void GradientBundle::add_scaled(const GradientBundle& other, double scale) {
  require(other.layers.size() == layers.size(), ErrorKind::shape,
          "gradient bundles differ in depth");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto w = layers[l].weight.values();
    const auto ow = other.layers[l].weight.values();
    require(w.size() == ow.size(), ErrorKind::shape, "gradient shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * ow[i];
    for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
      layers[l].bias[i] += scale * other.layers[l].bias[i];
    }
  }
}

void GradientBundle::apply_mask(const std::vector<bool>& trainable) {
  if (trainable.empty()) return;
  require(trainable.size() == layers.size(), ErrorKind::config,
          "layer mask has " + std::to_string(trainable.size()) + " entries for " +
              std::to_string(layers.size()) + " layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (trainable[l]) continue;
    std::fill(layers[l].weight.values().begin(), layers[l].weight.values().end(), 0.0);
    std::fill(layers[l].bias.begin(), layers[l].bias.end(), 0.0);
  }
}

NetworkParams sgd_step(const NetworkParams& params, const GradientBundle& grads,
                       double lr) {
  require(lr > 0.0 && std::isfinite(lr), ErrorKind::config, "learning rate must be positive");
  require(grads.layers.size() == params.layers.size(), ErrorKind::shape,
          "gradient depth does not match network");
  NetworkParams out = params;
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    auto w = out.layers[l].weight.values();
    const auto g = grads.layers[l].weight.values();
    require(w.size() == g.size() && out.layers[l].bias.size() == grads.layers[l].bias.size(),
            ErrorKind::shape, "gradient shape mismatch in layer " + std::to_string(l));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
    for (std::size_t i = 0; i < out.layers[l].bias.size(); ++i) {
      out.layers[l].bias[i] -= lr * grads.layers[l].bias[i];
    }
  }
  return out;
}

SgdOptimizer::SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {
  require(lr > 0.0 && std::isfinite(lr), ErrorKind::config, "learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::config, "momentum must be in [0, 1)");
}

void SgdOptimizer::step(NetworkParams& params, const GradientBundle& grads) {
  if (momentum_ == 0.0) {
    params = sgd_step(params, grads, lr_);
    return;
  }
  if (velocity_.layers.empty()) velocity_ = GradientBundle::zeros_like(params);
  // v ← μv + g;  θ ← θ − lr·v
  for (auto& layer : velocity_.layers) {
    for (double& v : layer.weight.values()) v *= momentum_;
    for (double& v : layer.bias) v *= momentum_;
  }
  velocity_.add_scaled(grads, 1.0);
  params = sgd_step(params, velocity_, lr_);
}

LossWithGradient sigmoid_cross_entropy(const Matrix& logits, const Matrix& targets) {
  require(logits.rows() == targets.rows() && logits.cols() == targets.cols(),
          ErrorKind::shape, "logits and targets differ in shape");
  LossWithGradient out;
  out.gradient = Matrix(logits.rows(), logits.cols());
  if (logits.rows() == 0) return out;
  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  const auto z = logits.values();
  const auto t = targets.values();
  auto g = out.gradient.values();
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    require(t[i] == 0.0 || t[i] == 1.0, ErrorKind::validation,
            "sigmoid cross-entropy targets must be binary");
    total += std::max(z[i], 0.0) - z[i] * t[i] + std::log1p(std::exp(-std::abs(z[i])));
    g[i] = (sigmoid(z[i]) - t[i]) * inv_batch;
  }
  out.loss = total * inv_batch;
  return out;
}

Matrix scores_to_logit_gradient(const Matrix& scores, const Matrix& dL_dscores) {
  require(scores.rows() == dL_dscores.rows() && scores.cols() == dL_dscores.cols(),
          ErrorKind::shape, "score gradient shape mismatch");
  Matrix out = dL_dscores;
  const auto s = scores.values();
  auto g = out.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s[i] * (1.0 - s[i]);
  return out;
}

double gradient_check(const LossEvaluator& evaluator, const NetworkParams& params,
                      const GradientCheckOptions& options) {
  require(options.epsilon > 0.0 && options.epsilon <= 1e-3, ErrorKind::config,
          "gradient check epsilon must be in (0, 1e-3]");
  const LossAndGradients base = evaluator(params);
  const LossAndGradients again = evaluator(params);
  require(base.loss == again.loss, ErrorKind::validation,
          "loss evaluator is not deterministic");

  // Flat coordinate list (layer, is_bias, index).
  struct Coordinate {
    std::size_t layer;
    bool bias;
    std::size_t index;
  };
  std::vector<Coordinate> coords;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    for (std::size_t i = 0; i < params.layers[l].weight.size(); ++i) coords.push_back({l, false, i});
    for (std::size_t i = 0; i < params.layers[l].bias.size(); ++i) coords.push_back({l, true, i});
  }
  if (coords.size() > options.max_coordinates) {
    Rng rng(options.seed);
    rng.shuffle(coords);
    coords.resize(options.max_coordinates);
  }

  double worst = 0.0;
  NetworkParams probe = params;
  for (const auto& c : coords) {
    double& value = c.bias ? probe.layers[c.layer].bias[c.index]
                           : probe.layers[c.layer].weight.values()[c.index];
    const double original = value;
    value = original + options.epsilon;
    const double plus = evaluator(probe).loss;
    value = original - options.epsilon;
    const double minus = evaluator(probe).loss;
    value = original;
    const double numeric = (plus - minus) / (2.0 * options.epsilon);
    const double analytic = c.bias ? base.grads.layers[c.layer].bias[c.index]
                                   : base.grads.layers[c.layer].weight.values()[c.index];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

}  // namespace ssdal
