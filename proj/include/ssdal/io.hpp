#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssdal/attributes.hpp"
#include "ssdal/dataset.hpp"
#include "ssdal/pipeline.hpp"
#include "ssdal/reid_eval.hpp"

namespace ssdal {

/// Rows of a features CSV: `sample_id,camera_id,person_id,f0,...,f{d-1}`.
struct FeatureTable {
  std::vector<std::string> sample_ids;
  std::vector<std::int64_t> camera_ids;
  std::vector<std::int64_t> person_ids;  // −1 when unknown
  Matrix features;
};

/// Rows of an attributes CSV: `sample_id,a0,...,a{K-1}`.
struct AttributeTable {
  std::vector<std::string> sample_ids;
  std::vector<AttributeVector> rows;
};

FeatureTable read_features_csv(const std::string& path);
void write_features_csv(const std::string& path, const FeatureTable& table);
AttributeTable read_attributes_csv(const std::string& path);
void write_attributes_csv(const std::string& path, const AttributeTable& table);

/// Sample ids "0".."n-1".
std::vector<std::string> default_sample_ids(std::size_t count);

FeatureTable to_feature_table(const IdSet& set);
FeatureTable to_feature_table(const LabeledSet& set);
/// Every person id must be known (non-negative).
IdSet to_id_set(const FeatureTable& table);
/// Attribute rows must align with feature rows by sample id.
LabeledSet to_labeled_set(const FeatureTable& features, const AttributeTable& attributes);

/// `rank,score` rows.
void write_cmc_csv(const std::string& path, const CmcCurve& curve);
/// `metric,value` rows.
void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, double>>& metrics);

using Json = nlohmann::json;

/// Object keys come out in lexicographic order.
std::string dump_json(const Json& value);
void write_json(const std::string& path, const Json& value);

Json to_json(const PipelineReport& report, bool include_timing);
Json to_json(const CmcCurve& curve);
Json to_json(const MapResult& result);

/// 17 significant digits.
std::string format_real(double value);

void write_text_file(const std::string& path, const std::string& contents);
void ensure_directory(const std::string& path);

}  // namespace ssdal
