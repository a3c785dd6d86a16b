#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssdal/attributes.hpp"
#include "ssdal/dataset.hpp"
#include "ssdal/network.hpp"
#include "ssdal/triplet.hpp"

namespace ssdal {

struct StageConfig {
  std::size_t epochs = 1;
  /// Samples per minibatch (cross-entropy stages) or triplets per minibatch
  /// (triplet stages).
  std::size_t batch_size = 32;
  /// Triplets mined at the start of each epoch (triplet stages only).
  std::size_t triplets_per_epoch = 256;
  double learning_rate = 0.1;
  double momentum = 0.0;
  LossParams loss;
  std::size_t p = 10;
  double tau = 0.0;
  std::uint64_t seed = 0;
  /// Per-layer update mask; empty means every layer is trained.
  std::vector<bool> trainable_layers;

  void validate() const;
};

struct StageResult {
  NetworkParams model;
  double initial_loss = 0.0;
  /// One entry per epoch.
  std::vector<double> loss_trace;
  double wall_seconds = 0.0;

  double final_loss() const { return loss_trace.empty() ? initial_loss : loss_trace.back(); }
};

/// Supervised attribute training with sigmoid cross-entropy from a fresh
/// network.
StageResult stage1_train(const LabeledSet& t_set, const StageConfig& cfg,
                         const NetworkConfig& net_cfg);

/// Continues cross-entropy training of `model` on (features, labels).
StageResult train_cross_entropy(const NetworkParams& model, const Matrix& features,
                                const Matrix& targets, const StageConfig& cfg);

/// Top-p binarization of the model's logits for every sample.
InitialLabels predict_initial_labels(const NetworkParams& model, const Matrix& features,
                                     std::size_t p);

/// Triplet fine-tuning with the attributes triplet loss. Each epoch mines
/// triplets on the model's current top-p predictions; `initial` stays fixed.
StageResult stage2_finetune(const NetworkParams& model, const IdSet& u_set,
                            const InitialLabels& initial, const StageConfig& cfg);

/// Triplet objective of `model` on a fixed triplet set (means over triplets).
TripletBatchLoss evaluate_triplet_objective(const NetworkParams& model, const IdSet& u_set,
                                            const InitialLabels& initial,
                                            const TripletBatch& triplets,
                                            const LossParams& params);

struct MergedSet {
  Matrix features;
  Matrix targets;
  /// Pseudo-labels assigned to the id-labelled samples.
  std::vector<AttributeVector> pseudo_labels;
};

/// T followed by U, U labelled by top-p predictions of `model`.
MergedSet merge_datasets(const NetworkParams& model, const LabeledSet& t_set,
                         const IdSet& u_set, std::size_t p);

struct Stage3Result {
  StageResult stage;
  std::vector<AttributeVector> pseudo_labels;
  std::size_t merged_size = 0;
};

/// Cross-entropy fine-tuning on T merged with pseudo-labelled U.
Stage3Result stage3_combine(const NetworkParams& model, const LabeledSet& t_set,
                            const IdSet& u_set, const StageConfig& cfg);

/// Binary attribute vectors: logits strictly above tau.
std::vector<AttributeVector> predict_deep_attributes(const NetworkParams& model,
                                                     const Matrix& features, double tau);
/// Same as above, as a 0/1 matrix usable as ReID features.
Matrix deep_attribute_features(const NetworkParams& model, const Matrix& features, double tau);

/// Triplet fine-tuning of the penultimate-layer embedding (hinge loss, no
/// drift). The output layer is frozen.
StageResult embedding_triplet_baseline(const NetworkParams& model, const IdSet& u_set,
                                       const StageConfig& cfg);

/// Activations of the last hidden layer.
Matrix penultimate_features(const NetworkParams& model, const Matrix& features);

/// FNV-1a digest of the checkpoint text, used as a checkpoint identifier.
std::string checkpoint_digest(const NetworkParams& model);

struct StageReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;
  std::string checkpoint;
  double wall_seconds = 0.0;
};

struct PipelineReport {
  std::map<std::string, StageReport> stages;
  /// Extra scalar results (metrics, counts).
  std::map<std::string, double> metrics;

  void add_stage(const std::string& name, const StageResult& result,
                 const std::string& checkpoint);
};

struct PipelineConfig {
  NetworkConfig network;
  StageConfig stage1;
  StageConfig stage2;
  StageConfig stage3;
};

struct PipelineResult {
  NetworkParams stage1_model;
  NetworkParams stage2_model;
  NetworkParams final_model;
  InitialLabels initial_labels;
  std::vector<AttributeVector> pseudo_labels;
  PipelineReport report;
};

/// Stages 1 → 2 → 3.
PipelineResult run_pipeline(const LabeledSet& t_set, const IdSet& u_set,
                            const PipelineConfig& cfg);

}  // namespace ssdal
