#include "ssdal/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ssdal/error.hpp"
#include "ssdal/rng.hpp"

namespace ssdal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_finite(double loss, const char* stage) {
  require(std::isfinite(loss), ErrorKind::data, std::string(stage) + " loss diverged");
}

// Rows referenced by a triplet minibatch, remapped to local indices.
struct TripletRows {
  std::vector<std::size_t> rows;
  TripletBatch local;
};

TripletRows gather_rows(std::span<const Triplet> triplets) {
  TripletRows out;
  std::unordered_map<std::size_t, std::size_t> slot;
  auto local = [&](std::size_t global) {
    auto [it, inserted] = slot.emplace(global, out.rows.size());
    if (inserted) out.rows.push_back(global);
    return it->second;
  };
  for (const auto& t : triplets) {
    const std::size_t a = local(t.anchor);
    const std::size_t p = local(t.positive);
    const std::size_t n = local(t.negative);
    out.local.push_back({a, p, n});
  }
  return out;
}

std::vector<AttributeVector> top_p_predictions(const NetworkParams& model, const Matrix& features,
                                               std::size_t p) {
  return predict_initial_labels(model, features, p).labels;
}

}  // namespace

void StageConfig::validate() const {
  require(epochs >= 1, ErrorKind::config, "epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::config, "batch size must be >= 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::config,
          "learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::config, "momentum must be in [0, 1)");
  require(p >= 1, ErrorKind::config, "p must be >= 1");
  loss.validate();
}

StageResult train_cross_entropy(const NetworkParams& model, const Matrix& features,
                                const Matrix& targets, const StageConfig& cfg) {
  cfg.validate();
  require(features.rows() > 0, ErrorKind::data, "training set is empty");
  require(features.rows() == targets.rows(), ErrorKind::shape, "features and targets differ in rows");
  require(targets.cols() == model.output_dim(), ErrorKind::shape,
          "labels have " + std::to_string(targets.cols()) + " attributes, network outputs " +
              std::to_string(model.output_dim()));
  const auto start = Clock::now();
  StageResult result;
  result.model = model;
  result.initial_loss = sigmoid_cross_entropy(forward(model, features).logits(), targets).loss;

  Rng rng(cfg.seed);
  SgdOptimizer optimizer(cfg.learning_rate, cfg.momentum);
  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);
      const auto trace = forward(result.model, features.select_rows(rows));
      const auto ce = sigmoid_cross_entropy(trace.logits(), targets.select_rows(rows));
      auto grads = backward(result.model, trace, ce.gradient);
      grads.apply_mask(cfg.trainable_layers);
      optimizer.step(result.model, grads);
    }
    const double loss =
        sigmoid_cross_entropy(forward(result.model, features).logits(), targets).loss;
    require_finite(loss, "cross-entropy");
    result.loss_trace.push_back(loss);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

StageResult stage1_train(const LabeledSet& t_set, const StageConfig& cfg,
                         const NetworkConfig& net_cfg) {
  cfg.validate();
  net_cfg.validate();
  t_set.validate();
  require(t_set.size() > 0, ErrorKind::data, "stage 1 needs a non-empty labelled set");
  require(t_set.features.cols() == net_cfg.layer_sizes.front(), ErrorKind::shape,
          "feature dimension does not match the network input");
  require(t_set.labels.front().size() == net_cfg.layer_sizes.back(), ErrorKind::shape,
          "attribute count does not match the network output");
  return train_cross_entropy(init_network(net_cfg), t_set.features, t_set.label_matrix(), cfg);
}

InitialLabels predict_initial_labels(const NetworkParams& model, const Matrix& features,
                                     std::size_t p) {
  require(p >= 1 && p <= model.output_dim(), ErrorKind::validation,
          "p must be in [1, K]");
  InitialLabels out;
  if (features.rows() == 0) return out;
  const auto trace = forward(model, features);
  const Matrix& logits = trace.logits();
  out.labels.reserve(logits.rows());
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    out.labels.push_back(binarize_top_p(logits.row(n), p));
  }
  return out;
}

TripletBatchLoss evaluate_triplet_objective(const NetworkParams& model, const IdSet& u_set,
                                            const InitialLabels& initial,
                                            const TripletBatch& triplets,
                                            const LossParams& params) {
  require(initial.labels.size() == u_set.size(), ErrorKind::data,
          "initial labels do not cover the id set");
  const auto scores = forward(model, u_set.features).scores();
  return triplet_batch_loss(scores, triplets, &initial.labels, params);
}

StageResult stage2_finetune(const NetworkParams& model, const IdSet& u_set,
                            const InitialLabels& initial, const StageConfig& cfg) {
  cfg.validate();
  u_set.validate();
  require(initial.labels.size() == u_set.size(), ErrorKind::data,
          "initial labels do not cover the id set");
  require(u_set.features.cols() == model.input_dim(), ErrorKind::shape,
          "id set feature dimension does not match the network input");
  require_minable(u_set.person_ids);
  const auto start = Clock::now();

  StageResult result;
  result.model = model;
  Rng rng(cfg.seed);
  SgdOptimizer optimizer(cfg.learning_rate, cfg.momentum);
  bool first = true;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto predicted = top_p_predictions(result.model, u_set.features, cfg.p);
    const TripletBatch triplets =
        mine_triplets(u_set.person_ids, predicted, cfg.triplets_per_epoch, rng.split());
    if (first) {
      result.initial_loss =
          evaluate_triplet_objective(result.model, u_set, initial, triplets, cfg.loss).loss;
      first = false;
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < triplets.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(triplets.size(), begin + cfg.batch_size);
      const auto rows =
          gather_rows(std::span<const Triplet>(triplets.data() + begin, end - begin));
      std::vector<AttributeVector> local_initial;
      local_initial.reserve(rows.rows.size());
      for (auto r : rows.rows) local_initial.push_back(initial.labels[r]);

      const auto trace = forward(result.model, u_set.features.select_rows(rows.rows));
      const auto loss = triplet_batch_loss(trace.scores(), rows.local, &local_initial, cfg.loss);
      auto grads = backward(result.model, trace,
                            scores_to_logit_gradient(trace.scores(), loss.gradient));
      grads.apply_mask(cfg.trainable_layers);
      optimizer.step(result.model, grads);
      epoch_loss += loss.loss;
      ++batches;
    }
    const double mean = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
    require_finite(mean, "triplet");
    result.loss_trace.push_back(mean);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

MergedSet merge_datasets(const NetworkParams& model, const LabeledSet& t_set,
                         const IdSet& u_set, std::size_t p) {
  t_set.validate();
  u_set.validate();
  require(!t_set.labels.empty() && t_set.labels.front().size() == model.output_dim(),
          ErrorKind::shape, "labelled set attribute count does not match the network output");
  MergedSet merged;
  merged.features = t_set.features;
  merged.targets = t_set.label_matrix();
  if (u_set.size() == 0) return merged;
  require(u_set.features.cols() == t_set.features.cols(), ErrorKind::shape,
          "labelled and id sets differ in feature dimension");
  merged.pseudo_labels = predict_initial_labels(model, u_set.features, p).labels;
  merged.features.append_rows(u_set.features);
  Matrix pseudo(u_set.size(), model.output_dim());
  for (std::size_t n = 0; n < merged.pseudo_labels.size(); ++n) {
    for (std::size_t k = 0; k < pseudo.cols(); ++k) {
      pseudo(n, k) = merged.pseudo_labels[n][k] ? 1.0 : 0.0;
    }
  }
  merged.targets.append_rows(pseudo);
  return merged;
}

Stage3Result stage3_combine(const NetworkParams& model, const LabeledSet& t_set,
                            const IdSet& u_set, const StageConfig& cfg) {
  cfg.validate();
  MergedSet merged = merge_datasets(model, t_set, u_set, cfg.p);
  Stage3Result out;
  out.merged_size = merged.features.rows();
  out.pseudo_labels = std::move(merged.pseudo_labels);
  out.stage = train_cross_entropy(model, merged.features, merged.targets, cfg);
  return out;
}

std::vector<AttributeVector> predict_deep_attributes(const NetworkParams& model,
                                                     const Matrix& features, double tau) {
  std::vector<AttributeVector> out;
  if (features.rows() == 0) return out;
  const auto trace = forward(model, features);
  for (std::size_t n = 0; n < trace.logits().rows(); ++n) {
    out.push_back(binarize_threshold(trace.logits().row(n), tau));
  }
  return out;
}

Matrix deep_attribute_features(const NetworkParams& model, const Matrix& features, double tau) {
  const auto attributes = predict_deep_attributes(model, features, tau);
  Matrix out(attributes.size(), model.output_dim());
  for (std::size_t n = 0; n < attributes.size(); ++n) {
    for (std::size_t k = 0; k < out.cols(); ++k) out(n, k) = attributes[n][k] ? 1.0 : 0.0;
  }
  return out;
}

Matrix penultimate_features(const NetworkParams& model, const Matrix& features) {
  require(model.layers.size() >= 2, ErrorKind::config,
          "network has no hidden layer to use as an embedding");
  return forward(model, features).penultimate();
}

StageResult embedding_triplet_baseline(const NetworkParams& model, const IdSet& u_set,
                                       const StageConfig& cfg) {
  cfg.validate();
  u_set.validate();
  require(model.layers.size() >= 2, ErrorKind::config,
          "embedding baseline needs a hidden layer");
  require(u_set.features.cols() == model.input_dim(), ErrorKind::shape,
          "id set feature dimension does not match the network input");
  const auto start = Clock::now();
  const std::size_t embedding_layer = model.layers.size() - 2;
  StageResult result;
  result.model = model;
  if (cfg.triplets_per_epoch == 0) {
    result.wall_seconds = seconds_since(start);
    return result;
  }
  require_minable(u_set.person_ids);

  Rng rng(cfg.seed);
  SgdOptimizer optimizer(cfg.learning_rate, cfg.momentum);
  bool first = true;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto predicted = top_p_predictions(result.model, u_set.features, cfg.p);
    const TripletBatch triplets =
        mine_triplets(u_set.person_ids, predicted, cfg.triplets_per_epoch, rng.split());
    if (first) {
      result.initial_loss =
          triplet_batch_loss(penultimate_features(result.model, u_set.features), triplets,
                             nullptr, cfg.loss)
              .loss;
      first = false;
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < triplets.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(triplets.size(), begin + cfg.batch_size);
      const auto rows =
          gather_rows(std::span<const Triplet>(triplets.data() + begin, end - begin));
      const auto trace = forward(result.model, u_set.features.select_rows(rows.rows));
      const auto loss = triplet_batch_loss(trace.penultimate(), rows.local, nullptr, cfg.loss);
      auto grads = backward_from_activation(result.model, trace, embedding_layer, loss.gradient);
      grads.apply_mask(cfg.trainable_layers);
      optimizer.step(result.model, grads);
      epoch_loss += loss.loss;
      ++batches;
    }
    const double mean = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
    require_finite(mean, "embedding triplet");
    result.loss_trace.push_back(mean);
  }
  result.wall_seconds = seconds_since(start);
  return result;
}

std::string checkpoint_digest(const NetworkParams& model) {
  std::ostringstream text;
  save_checkpoint(model, text);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text.str()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void PipelineReport::add_stage(const std::string& name, const StageResult& result,
                               const std::string& checkpoint) {
  require(std::isfinite(result.initial_loss) && result.initial_loss >= 0.0, ErrorKind::data,
          name + ": initial loss is not a finite non-negative value");
  for (double loss : result.loss_trace) {
    require(std::isfinite(loss) && loss >= 0.0, ErrorKind::data,
            name + ": loss trace holds a non-finite or negative value");
  }
  stages[name] = {result.initial_loss, result.final_loss(), result.loss_trace, checkpoint,
                  result.wall_seconds};
}

PipelineResult run_pipeline(const LabeledSet& t_set, const IdSet& u_set,
                            const PipelineConfig& cfg) {
  PipelineResult out;
  const StageResult s1 = stage1_train(t_set, cfg.stage1, cfg.network);
  out.stage1_model = s1.model;
  out.report.add_stage("stage1", s1, checkpoint_digest(s1.model));

  out.initial_labels = predict_initial_labels(s1.model, u_set.features, cfg.stage2.p);
  const StageResult s2 = stage2_finetune(s1.model, u_set, out.initial_labels, cfg.stage2);
  out.stage2_model = s2.model;
  out.report.add_stage("stage2", s2, checkpoint_digest(s2.model));

  Stage3Result s3 = stage3_combine(s2.model, t_set, u_set, cfg.stage3);
  out.final_model = s3.stage.model;
  out.pseudo_labels = std::move(s3.pseudo_labels);
  out.report.add_stage("stage3", s3.stage, checkpoint_digest(s3.stage.model));
  out.report.metrics["merged_size"] = static_cast<double>(s3.merged_size);
  return out;
}

}  // namespace ssdal
