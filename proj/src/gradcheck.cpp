#include "ssdal/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ssdal/error.hpp"
#include "ssdal/rng.hpp"
#include "ssdal/triplet.hpp"

namespace ssdal {

namespace {

constexpr std::size_t kSamples = 9;
constexpr std::size_t kInput = 6;
constexpr std::size_t kHidden = 7;
constexpr std::size_t kAttributes = 5;
// Triplets whose hinge argument is this close to zero are dropped so that the
// finite differences never straddle the kink.
constexpr double kKinkGuard = 1e-3;

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

std::vector<AttributeVector> random_labels(Rng& rng, std::size_t count, std::size_t k) {
  std::vector<AttributeVector> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::uint8_t> bits(k);
    for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
    out.emplace_back(std::move(bits));
  }
  return out;
}

void corrupt(GradientBundle& grads) {
  for (double& v : grads.layers.front().weight.values()) v *= 1.01;
}

// Samples 3t, 3t+1, 3t+2 form triplet t; kept only away from the kink.
TripletBatch safe_triplets(const Matrix& outputs, const LossParams& params) {
  TripletBatch out;
  for (std::size_t t = 0; t + 2 < outputs.rows(); t += 3) {
    const auto a = outputs.row(t);
    const double margin = squared_euclidean(a, outputs.row(t + 1)) + params.theta -
                          squared_euclidean(a, outputs.row(t + 2));
    if (std::abs(margin) > kKinkGuard) out.push_back({t, t + 1, t + 2});
  }
  return out;
}

}  // namespace

void GradcheckOptions::validate() const {
  require(seeds >= 1, ErrorKind::config, "gradcheck needs at least one seed");
  require(epsilon > 0.0 && epsilon <= 1e-3, ErrorKind::config,
          "gradcheck epsilon must be in (0, 1e-3]");
  require(tolerance > 0.0, ErrorKind::config, "gradcheck tolerance must be positive");
}

bool GradcheckReport::passed() const {
  return !losses.empty() &&
         std::all_of(losses.begin(), losses.end(), [](const LossCheck& c) { return c.passed; });
}

std::vector<std::string> registered_losses() {
  return {"sigmoid_cross_entropy", "hinge_triplet", "attributes_triplet", "embedding_triplet"};
}

GradcheckProblem make_gradcheck_problem(const std::string& loss, std::uint64_t seed,
                                        bool fault_injection) {
  Rng rng(seed);
  NetworkConfig net;
  net.layer_sizes = {kInput, kHidden, kAttributes};
  net.hidden_activation = Activation::tanh;
  net.init_seed = rng.next();
  GradcheckProblem problem{init_network(net), {}};

  const Matrix inputs = random_matrix(rng, kSamples, kInput);
  LossParams params;
  params.theta = 0.5;
  params.gamma = 0.5;

  if (loss == "sigmoid_cross_entropy") {
    Matrix targets(kSamples, kAttributes);
    for (double& v : targets.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    problem.evaluator = [=](const NetworkParams& p) {
      const ForwardTrace trace = forward(p, inputs);
      const LossWithGradient ce = sigmoid_cross_entropy(trace.logits(), targets);
      LossAndGradients out{ce.loss, backward(p, trace, ce.gradient)};
      if (fault_injection) corrupt(out.grads);
      return out;
    };
    return problem;
  }

  if (loss == "hinge_triplet" || loss == "attributes_triplet") {
    const bool drift = loss == "attributes_triplet";
    const auto initial = random_labels(rng, kSamples, kAttributes);
    const TripletBatch triplets = safe_triplets(forward(problem.params, inputs).scores(), params);
    problem.evaluator = [=](const NetworkParams& p) {
      const ForwardTrace trace = forward(p, inputs);
      const TripletBatchLoss batch =
          triplet_batch_loss(trace.scores(), triplets, drift ? &initial : nullptr, params);
      const Matrix dz = scores_to_logit_gradient(trace.scores(), batch.gradient);
      LossAndGradients out{batch.loss, backward(p, trace, dz)};
      if (fault_injection) corrupt(out.grads);
      return out;
    };
    return problem;
  }

  if (loss == "embedding_triplet") {
    const std::size_t layer = problem.params.layers.size() - 2;
    const TripletBatch triplets =
        safe_triplets(forward(problem.params, inputs).penultimate(), params);
    problem.evaluator = [=](const NetworkParams& p) {
      const ForwardTrace trace = forward(p, inputs);
      const TripletBatchLoss batch =
          triplet_batch_loss(trace.penultimate(), triplets, nullptr, params);
      LossAndGradients out{batch.loss,
                           backward_from_activation(p, trace, layer, batch.gradient)};
      if (fault_injection) corrupt(out.grads);
      return out;
    };
    return problem;
  }

  fail(ErrorKind::config, "unknown gradcheck loss '" + loss + "'");
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  options.validate();
  GradcheckReport report;
  report.tolerance = options.tolerance;
  const auto names = registered_losses();
  for (std::size_t l = 0; l < names.size(); ++l) {
    LossCheck check{names[l], 0.0, options.seeds, false};
    for (std::size_t s = 0; s < options.seeds; ++s) {
      const std::uint64_t seed = options.base_seed + 1000 * l + s;
      const GradcheckProblem problem = make_gradcheck_problem(names[l], seed, options.fault_injection);
      GradientCheckOptions gc;
      gc.epsilon = options.epsilon;
      gc.seed = seed;
      check.max_relative_error =
          std::max(check.max_relative_error, gradient_check(problem.evaluator, problem.params, gc));
    }
    check.passed = check.max_relative_error <= options.tolerance;
    report.losses.push_back(check);
  }
  return report;
}

}  // namespace ssdal
