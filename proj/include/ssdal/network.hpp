#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ssdal/matrix.hpp"

namespace ssdal {

enum class Activation { relu, tanh, sigmoid };

std::string_view to_string(Activation activation) noexcept;
Activation parse_activation(std::string_view name);

struct NetworkConfig {
  /// Input dimension, hidden widths, attribute count K.
  std::vector<std::size_t> layer_sizes;
  Activation hidden_activation = Activation::tanh;
  std::uint64_t init_seed = 0;

  void validate() const;
};

struct Layer {
  Matrix weight;  // out × in
  std::vector<double> bias;
  Activation activation = Activation::sigmoid;

  std::size_t fan_in() const noexcept { return weight.cols(); }
  std::size_t fan_out() const noexcept { return weight.rows(); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Feed-forward attribute detector: affine layers with a hidden activation and
/// a sigmoid output layer producing K attribute confidences.
struct NetworkParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.front().fan_in(); }
  std::size_t output_dim() const { return layers.back().fan_out(); }
  std::size_t parameter_count() const;

  /// Checks dimension chaining and that the last layer is sigmoid.
  void validate() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct ForwardTrace {
  Matrix inputs;
  std::vector<Matrix> pre_activations;  // one per layer
  std::vector<Matrix> activations;      // one per layer

  const Matrix& logits() const { return pre_activations.back(); }
  const Matrix& scores() const { return activations.back(); }
  /// Output of the last hidden layer; requires at least two layers.
  const Matrix& penultimate() const { return activations[activations.size() - 2]; }
};

struct LayerGradient {
  Matrix weight;
  std::vector<double> bias;
};

struct GradientBundle {
  std::vector<LayerGradient> layers;

  static GradientBundle zeros_like(const NetworkParams& params);
  void add_scaled(const GradientBundle& other, double scale);
  /// Zeroes layers whose mask entry is false; an empty mask leaves all.
  void apply_mask(const std::vector<bool>& trainable);
};

NetworkParams init_network(const NetworkConfig& config);

ForwardTrace forward(const NetworkParams& params, const Matrix& inputs);

/// Gradients of a scalar loss given dL/dlogits of the output layer.
GradientBundle backward(const NetworkParams& params, const ForwardTrace& trace,
                        const Matrix& dL_dlogits);

/// Gradients given dL/d(activation) of layer `layer`. Layers above `layer` get
/// zero gradients; used by losses defined on an intermediate embedding.
GradientBundle backward_from_activation(const NetworkParams& params,
                                        const ForwardTrace& trace, std::size_t layer,
                                        const Matrix& dL_dactivation);

/// params − lr × grads.
NetworkParams sgd_step(const NetworkParams& params, const GradientBundle& grads,
                       double lr);

/// SGD with optional heavy-ball momentum; momentum 0 reproduces sgd_step.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(double lr, double momentum = 0.0);

  void step(NetworkParams& params, const GradientBundle& grads);

 private:
  double lr_;
  double momentum_;
  GradientBundle velocity_;
};

struct LossWithGradient {
  double loss = 0.0;
  Matrix gradient;
};

/// Mean over the batch of the summed per-attribute binary cross-entropy,
/// evaluated as max(z,0) − z·t + log(1 + exp(−|z|)). Gradient is (σ(z) − t)/batch.
LossWithGradient sigmoid_cross_entropy(const Matrix& logits, const Matrix& targets);

double sigmoid(double z) noexcept;

/// Chain rule through the output sigmoid: dL/dz = dL/ds · s(1 − s).
Matrix scores_to_logit_gradient(const Matrix& scores, const Matrix& dL_dscores);

struct LossAndGradients {
  double loss = 0.0;
  GradientBundle grads;
};

using LossEvaluator = std::function<LossAndGradients(const NetworkParams&)>;

struct GradientCheckOptions {
  double epsilon = 1e-5;
  /// Coordinates compared; all of them when the network is at most this size.
  std::size_t max_coordinates = 400;
  std::uint64_t seed = 0;
};

/// Largest |analytic − central difference| / max(|analytic|, |fd|, 1e-12) over
/// the checked coordinates.
double gradient_check(const LossEvaluator& evaluator, const NetworkParams& params,
                      const GradientCheckOptions& options = {});

void save_checkpoint(const NetworkParams& params, std::ostream& out);
NetworkParams load_checkpoint(std::istream& in);
void save_checkpoint(const NetworkParams& params, const std::string& path);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace ssdal
