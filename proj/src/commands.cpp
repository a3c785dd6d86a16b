#include "ssdal/commands.hpp"

#include <filesystem>
#include <set>

#include "ssdal/error.hpp"
#include "ssdal/synth.hpp"

namespace ssdal {

namespace {

std::string join(const std::string& dir, std::string_view name) {
  return (std::filesystem::path(dir) / name).string();
}

void require_file(const std::string& path, const std::string& hint) {
  require(std::filesystem::exists(path), ErrorKind::missing_prerequisite,
          "missing '" + path + "' (" + hint + ")");
}

NetworkParams load_model(const std::string& path, const std::string& hint) {
  require_file(path, hint);
  return load_checkpoint(path);
}

std::vector<std::string> prefixed_ids(const std::string& prefix, std::size_t count) {
  std::vector<std::string> ids = default_sample_ids(count);
  for (auto& id : ids) id = prefix + id;
  return ids;
}

void write_labeled(const LabeledSet& set, const std::string& prefix,
                   const std::string& features_path, const std::string& attributes_path) {
  FeatureTable table = to_feature_table(set);
  table.sample_ids = prefixed_ids(prefix, set.size());
  write_features_csv(features_path, table);
  write_attributes_csv(attributes_path, {table.sample_ids, set.labels});
}

void write_ids(const IdSet& set, const std::string& prefix, const std::string& path) {
  FeatureTable table = to_feature_table(set);
  table.sample_ids = prefixed_ids(prefix, set.size());
  write_features_csv(path, table);
}

LabeledSet load_labeled(const std::string& features, const std::string& attributes) {
  require_file(features, "run synth first");
  require_file(attributes, "run synth first");
  return to_labeled_set(read_features_csv(features), read_attributes_csv(attributes));
}

IdSet load_ids(const std::string& features) {
  require_file(features, "run synth first");
  return to_id_set(read_features_csv(features));
}

Matrix transform(const Matrix& features, const FeatureSource& source) {
  if (source.kind == FeatureKind::raw) return features;
  require(!source.model_path.empty(), ErrorKind::config,
          std::string(to_string(source.kind)) + " features need a model");
  const NetworkParams model = load_model(source.model_path, "train the model first");
  if (source.kind == FeatureKind::deep_attributes) {
    return deep_attribute_features(model, features, source.tau);
  }
  return penultimate_features(model, features);
}

IdSet load_eval_set(const std::string& path, const FeatureSource& source) {
  require_file(path, "evaluation input");
  IdSet set = to_id_set(read_features_csv(path));
  set.features = transform(set.features, source);
  return set;
}

void write_outputs(const std::string& prefix, const Json& summary) {
  if (prefix.empty()) return;
  const auto parent = std::filesystem::path(prefix).parent_path();
  if (!parent.empty()) ensure_directory(parent.string());
  write_json(prefix + ".json", summary);
}

PipelineConfig load_pipeline_config(const RunConfig& config, const NetworkParams& model) {
  return pipeline_config(config, model.input_dim(), model.output_dim());
}

void save_stage(PipelineReport& report, const std::string& name, const StageResult& result,
                const std::string& path) {
  save_checkpoint(result.model, path);
  report.add_stage(name, result, checkpoint_digest(result.model));
}

void train_stage1(const RunConfig& config, PipelineReport& report) {
  const DataFiles data = data_files(config);
  const LabeledSet t = load_labeled(data.t_features(), data.t_attributes());
  const PipelineConfig cfg = pipeline_config(config, t.features.cols(), t.labels.front().size());
  save_stage(report, "stage1", stage1_train(t, cfg.stage1, cfg.network), model_files(config).stage1());
}

void train_stage2(const RunConfig& config, PipelineReport& report) {
  const ModelFiles models = model_files(config);
  const NetworkParams model = load_model(models.stage1(), "train stage 1 first");
  const IdSet u = load_ids(data_files(config).u_features());
  const PipelineConfig cfg = load_pipeline_config(config, model);
  const InitialLabels initial = predict_initial_labels(model, u.features, cfg.stage2.p);
  save_stage(report, "stage2", stage2_finetune(model, u, initial, cfg.stage2), models.stage2());
}

void train_stage3(const RunConfig& config, PipelineReport& report) {
  const ModelFiles models = model_files(config);
  const NetworkParams model = load_model(models.stage2(), "train stage 2 first");
  const DataFiles data = data_files(config);
  const LabeledSet t = load_labeled(data.t_features(), data.t_attributes());
  const IdSet u = load_ids(data.u_features());
  const PipelineConfig cfg = load_pipeline_config(config, model);
  const Stage3Result s3 = stage3_combine(model, t, u, cfg.stage3);
  save_stage(report, "stage3", s3.stage, models.final_model());
  report.metrics["stage3.merged_size"] = static_cast<double>(s3.merged_size);
}

void train_baseline(const RunConfig& config, PipelineReport& report) {
  const ModelFiles models = model_files(config);
  const NetworkParams model = load_model(models.stage1(), "train stage 1 first");
  const IdSet u = load_ids(data_files(config).u_features());
  save_stage(report, "baseline_fc", embedding_triplet_baseline(model, u, baseline_config(config)),
             models.baseline_fc());
}

double mean_positive_count(const std::vector<AttributeVector>& rows) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  for (const auto& row : rows) total += static_cast<double>(row.count());
  return total / static_cast<double>(rows.size());
}

}  // namespace

std::string DataFiles::path(std::string_view name) const { return join(dir, name); }
std::string ModelFiles::path(std::string_view name) const { return join(dir, name); }

DataFiles data_files(const RunConfig& config) { return {config.get_string("data_dir")}; }
ModelFiles model_files(const RunConfig& config) { return {config.get_string("model_dir")}; }

Json cmd_synth(const RunConfig& config) {
  config.require_keys({"data_dir", "synth.seed"});
  const SynthConfig synth = synth_config(config);
  const WorldSplit split = world_split(config);
  const SynthWorld world = generate_world(synth);

  const LabeledSet t = emit_labeled_set(world, split.labeled_ids());
  const IdSet u = emit_id_set(world, split.id_only_ids());
  const LabeledSet test = emit_labeled_set(world, split.test_ids());
  std::vector<std::size_t> gallery_cameras;
  for (std::size_t c = 1; c < synth.cameras; ++c) gallery_cameras.push_back(c);
  const ProbeGallery pg =
      emit_probe_gallery(world, split.test_ids(), 0, gallery_cameras, split.distractor_ids());

  const DataFiles files = data_files(config);
  ensure_directory(files.dir);
  write_labeled(t, "t", files.t_features(), files.t_attributes());
  write_ids(u, "u", files.u_features());
  write_labeled({pg.probe.features, pg.probe_labels, pg.probe.person_ids, pg.probe.camera_ids},
                "p", files.probe_features(), files.probe_attributes());
  write_labeled(
      {pg.gallery.features, pg.gallery_labels, pg.gallery.person_ids, pg.gallery.camera_ids}, "g",
      files.gallery_features(), files.gallery_attributes());
  write_labeled(test, "x", files.test_features(), files.test_attributes());

  return {{"distractors", pg.distractor_count},
          {"gallery", pg.gallery.size()},
          {"probe", pg.probe.size()},
          {"t", t.size()},
          {"test", test.size()},
          {"u", u.size()}};
}

std::string_view to_string(TrainStage stage) noexcept {
  switch (stage) {
    case TrainStage::stage1:
      return "1";
    case TrainStage::stage2:
      return "2";
    case TrainStage::stage3:
      return "3";
    case TrainStage::all:
      return "all";
    case TrainStage::baseline_fc:
      return "baseline-fc";
  }
  return "?";
}

TrainStage parse_train_stage(std::string_view name) {
  for (auto stage : {TrainStage::stage1, TrainStage::stage2, TrainStage::stage3, TrainStage::all,
                     TrainStage::baseline_fc}) {
    if (name == to_string(stage)) return stage;
  }
  fail(ErrorKind::config, "unknown stage '" + std::string(name) + "'");
}

PipelineReport cmd_train(const RunConfig& config, TrainStage stage) {
  config.require_keys({"data_dir", "model_dir"});
  const ModelFiles models = model_files(config);
  ensure_directory(models.dir);
  PipelineReport report;
  switch (stage) {
    case TrainStage::stage1:
      train_stage1(config, report);
      break;
    case TrainStage::stage2:
      train_stage2(config, report);
      break;
    case TrainStage::stage3:
      train_stage3(config, report);
      break;
    case TrainStage::all:
      train_stage1(config, report);
      train_stage2(config, report);
      train_stage3(config, report);
      break;
    case TrainStage::baseline_fc:
      train_baseline(config, report);
      break;
  }
  write_json(models.path("report_" + std::string(to_string(stage)) + ".json"),
             to_json(report, config.get_bool("report.include_timing")));
  return report;
}

PredictPolicy parse_predict_policy(std::string_view name) {
  if (name == "top-p") return PredictPolicy::top_p;
  if (name == "threshold") return PredictPolicy::threshold;
  fail(ErrorKind::config, "unknown policy '" + std::string(name) + "'");
}

AttributeTable cmd_predict(const std::string& model_path, const std::string& features_path,
                           PredictPolicy policy, std::size_t p, double tau,
                           const std::string& out_path) {
  const NetworkParams model = load_model(model_path, "train the model first");
  require_file(features_path, "features to predict on");
  const FeatureTable table = read_features_csv(features_path);
  AttributeTable out;
  out.sample_ids = table.sample_ids;
  out.rows = policy == PredictPolicy::top_p
                 ? predict_initial_labels(model, table.features, p).labels
                 : predict_deep_attributes(model, table.features, tau);
  if (!out_path.empty()) write_attributes_csv(out_path, out);
  return out;
}

std::string_view to_string(FeatureKind kind) noexcept {
  switch (kind) {
    case FeatureKind::raw:
      return "raw";
    case FeatureKind::deep_attributes:
      return "deep-attributes";
    case FeatureKind::penultimate:
      return "penultimate";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view name) {
  for (auto kind : {FeatureKind::raw, FeatureKind::deep_attributes, FeatureKind::penultimate}) {
    if (name == to_string(kind)) return kind;
  }
  fail(ErrorKind::config, "unknown feature kind '" + std::string(name) + "'");
}

Json cmd_eval_cmc(const std::string& probe_path, const std::string& gallery_path,
                  const FeatureSource& source, const SplitProtocol& protocol,
                  const std::string& out_prefix) {
  ProbeGallery data;
  data.probe = load_eval_set(probe_path, source);
  data.gallery = load_eval_set(gallery_path, source);
  const std::set<std::int64_t> probe_ids(data.probe.person_ids.begin(),
                                         data.probe.person_ids.end());
  const std::set<std::int64_t> gallery_ids(data.gallery.person_ids.begin(),
                                           data.gallery.person_ids.end());
  for (auto id : probe_ids) {
    require(gallery_ids.contains(id), ErrorKind::validation,
            "probe identity " + std::to_string(id) + " has no gallery sample (closed-set CMC)");
  }
  for (auto id : data.gallery.person_ids) data.distractor_count += probe_ids.contains(id) ? 0 : 1;

  const CmcCurve curve = averaged_cmc(data, protocol);
  Json summary = to_json(curve);
  summary["distance"] = std::string(to_string(protocol.distance));
  summary["features"] = std::string(to_string(source.kind));
  summary["gallery_size"] = data.gallery.size();
  summary["probe_size"] = data.probe.size();
  summary["num_tests"] = protocol.num_tests;
  if (!out_prefix.empty()) {
    write_outputs(out_prefix, summary);
    write_cmc_csv(out_prefix + ".csv", curve);
  }
  return summary;
}

Json cmd_eval_map(const std::string& query_path, const std::string& gallery_path,
                  const FeatureSource& source, QueryMode mode, const RetrievalOptions& options,
                  const std::string& out_prefix) {
  const IdSet queries = load_eval_set(query_path, source);
  const IdSet gallery = load_eval_set(gallery_path, source);
  const MapResult result = evaluate_retrieval(queries, gallery, mode, options);
  Json summary = to_json(result);
  summary["distance"] = std::string(to_string(options.distance));
  summary["features"] = std::string(to_string(source.kind));
  if (!out_prefix.empty()) {
    write_outputs(out_prefix, summary);
    write_metrics_csv(out_prefix + ".csv",
                      {{"map", result.map_percent}, {"rank1", result.rank1_percent}});
  }
  return summary;
}

Json cmd_eval_attr(const std::string& model_path, const std::string& features_path,
                   const std::string& attributes_path, const std::string& out_prefix) {
  const NetworkParams model = load_model(model_path, "train the model first");
  require_file(features_path, "evaluation features");
  require_file(attributes_path, "evaluation attributes");
  const LabeledSet set =
      to_labeled_set(read_features_csv(features_path), read_attributes_csv(attributes_path));
  const double accuracy = aggregate_attribute_accuracy(model, set);
  Json summary = {{"attribute_accuracy", accuracy}, {"samples", set.size()}};
  if (!out_prefix.empty()) {
    write_outputs(out_prefix, summary);
    write_metrics_csv(out_prefix + ".csv", {{"attribute_accuracy", accuracy}});
  }
  return summary;
}

GradcheckOptions gradcheck_options(const RunConfig& config) {
  GradcheckOptions options;
  options.seeds = config.get_uint("gradcheck.seeds");
  options.epsilon = config.get_real("gradcheck.epsilon");
  options.tolerance = config.get_real("gradcheck.tolerance");
  options.fault_injection = config.get_bool("gradcheck.fault_injection");
  options.validate();
  return options;
}

Json to_json(const GradcheckReport& report) {
  Json losses = Json::object();
  for (const auto& check : report.losses) {
    losses[check.loss] = {{"max_relative_error", check.max_relative_error},
                          {"passed", check.passed},
                          {"seeds", check.seeds}};
  }
  return {{"losses", losses}, {"passed", report.passed()}, {"tolerance", report.tolerance}};
}

Json cmd_run_all(const RunConfig& config) {
  config.require_keys({"data_dir", "model_dir", "synth.seed"});
  const Json counts = cmd_synth(config);
  PipelineReport report = cmd_train(config, TrainStage::all);
  for (auto& [name, stage] : cmd_train(config, TrainStage::baseline_fc).stages) {
    report.stages[name] = stage;
  }

  const DataFiles data = data_files(config);
  const ModelFiles models = model_files(config);
  const SplitProtocol protocol = split_protocol(config);
  const double tau = config.get_real("tau");
  const std::pair<const char*, FeatureSource> sources[] = {
      {"raw", {FeatureKind::raw, "", tau}},
      {"stage1", {FeatureKind::deep_attributes, models.stage1(), tau}},
      {"stage2", {FeatureKind::deep_attributes, models.stage2(), tau}},
      {"ssdal", {FeatureKind::deep_attributes, models.final_model(), tau}},
      {"baseline_fc", {FeatureKind::penultimate, models.baseline_fc(), tau}},
  };
  Json cmc = Json::object();
  for (const auto& [name, source] : sources) {
    Json summary = cmd_eval_cmc(data.probe_features(), data.gallery_features(), source, protocol,
                                models.path(std::string("cmc_") + name));
    report.metrics[std::string("rank1.") + name] = summary["rank1"].get<double>();
    cmc[name] = std::move(summary);
  }

  const Json retrieval =
      cmd_eval_map(data.test_features(), data.test_features(), sources[3].second,
                   QueryMode::single, retrieval_options(config), models.path("map_ssdal"));
  report.metrics["map.ssdal"] = retrieval["map"].get<double>();

  const LabeledSet test = load_labeled(data.test_features(), data.test_attributes());
  const NetworkParams stage1 = load_checkpoint(models.stage1());
  const NetworkParams final_model = load_checkpoint(models.final_model());
  report.metrics["attribute_accuracy.stage1"] = aggregate_attribute_accuracy(stage1, test);
  report.metrics["attribute_accuracy.ssdal"] = aggregate_attribute_accuracy(final_model, test);
  report.metrics["deep_attributes.mean_positives"] =
      mean_positive_count(predict_deep_attributes(final_model, test.features, tau));

  Json out = to_json(report, config.get_bool("report.include_timing"));
  out["cmc"] = std::move(cmc);
  out["config"] = config.effective();
  out["data"] = counts;
  out["map"] = retrieval;
  write_json(models.path("run_all.json"), out);
  return out;
}

}  // namespace ssdal
