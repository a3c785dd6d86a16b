#pragma once

#include <string>
#include <string_view>

#include "ssdal/gradcheck.hpp"
#include "ssdal/io.hpp"
#include "ssdal/run_config.hpp"

namespace ssdal {

/// File names inside `data_dir`.
struct DataFiles {
  std::string dir;

  std::string path(std::string_view name) const;
  std::string t_features() const { return path("t_features.csv"); }
  std::string t_attributes() const { return path("t_attributes.csv"); }
  std::string u_features() const { return path("u_features.csv"); }
  std::string probe_features() const { return path("probe_features.csv"); }
  std::string probe_attributes() const { return path("probe_attributes.csv"); }
  std::string gallery_features() const { return path("gallery_features.csv"); }
  std::string gallery_attributes() const { return path("gallery_attributes.csv"); }
  std::string test_features() const { return path("test_features.csv"); }
  std::string test_attributes() const { return path("test_attributes.csv"); }
};

/// File names inside `model_dir`.
struct ModelFiles {
  std::string dir;

  std::string path(std::string_view name) const;
  std::string stage1() const { return path("stage1.model"); }
  std::string stage2() const { return path("stage2.model"); }
  std::string final_model() const { return path("final.model"); }
  std::string baseline_fc() const { return path("baseline_fc.model"); }
};

DataFiles data_files(const RunConfig& config);
ModelFiles model_files(const RunConfig& config);

/// Writes T, U, probe/gallery and the full test split. Returns row counts.
Json cmd_synth(const RunConfig& config);

enum class TrainStage { stage1, stage2, stage3, all, baseline_fc };

std::string_view to_string(TrainStage stage) noexcept;
TrainStage parse_train_stage(std::string_view name);

/// Trains the selected stage(s) from the files in data_dir, writes the
/// checkpoints and `report_<stage>.json` into model_dir.
PipelineReport cmd_train(const RunConfig& config, TrainStage stage);

enum class PredictPolicy { top_p, threshold };

PredictPolicy parse_predict_policy(std::string_view name);

/// One binary row per sample of the features file; written to `out_path`
/// when it is non-empty.
AttributeTable cmd_predict(const std::string& model_path, const std::string& features_path,
                           PredictPolicy policy, std::size_t p, double tau,
                           const std::string& out_path);

/// What is matched during ReID evaluation.
enum class FeatureKind { raw, deep_attributes, penultimate };

std::string_view to_string(FeatureKind kind) noexcept;
FeatureKind parse_feature_kind(std::string_view name);

struct FeatureSource {
  FeatureKind kind = FeatureKind::raw;
  /// Required unless kind is raw.
  std::string model_path;
  double tau = 0.0;
};

/// Averaged closed-set CMC. Writes `<out_prefix>.csv` and `<out_prefix>.json`
/// when the prefix is non-empty.
Json cmd_eval_cmc(const std::string& probe_path, const std::string& gallery_path,
                  const FeatureSource& source, const SplitProtocol& protocol,
                  const std::string& out_prefix);

/// Multi-camera retrieval mAP.
Json cmd_eval_map(const std::string& query_path, const std::string& gallery_path,
                  const FeatureSource& source, QueryMode mode, const RetrievalOptions& options,
                  const std::string& out_prefix);

/// Mean attribute accuracy of a model against ground-truth attributes.
Json cmd_eval_attr(const std::string& model_path, const std::string& features_path,
                   const std::string& attributes_path, const std::string& out_prefix);

GradcheckOptions gradcheck_options(const RunConfig& config);
Json to_json(const GradcheckReport& report);

/// synth → train all → baseline → evaluation, returning one combined report
/// that is also written to `<model_dir>/run_all.json`.
Json cmd_run_all(const RunConfig& config);

}  // namespace ssdal
