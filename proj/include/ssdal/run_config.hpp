#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ssdal/pipeline.hpp"
#include "ssdal/reid_eval.hpp"
#include "ssdal/synth.hpp"

namespace ssdal {

/// Flat `key = value` experiment configuration. Lines starting with `#` are
/// comments. Only keys from a fixed schema are accepted; most have defaults.
class RunConfig {
 public:
  static RunConfig parse(std::istream& in, const std::string& origin = "<config>");
  static RunConfig load(const std::string& path);

  /// Rejects keys outside the schema.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.contains(key); }
  void require_keys(std::initializer_list<const char*> keys) const;

  std::string get_string(const std::string& key) const;
  double get_real(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;

  /// Every schema key with its effective value.
  std::map<std::string, std::string> effective() const;

  static std::vector<std::string> known_keys();

 private:
  std::map<std::string, std::string> values_;
};

/// Identity counts of the synthetic splits; ranges are laid out back to back
/// (labelled, id-only, test, distractors).
struct WorldSplit {
  std::size_t labeled = 40;
  std::size_t id_only = 60;
  std::size_t test = 50;
  std::size_t distractors = 0;

  std::size_t total() const { return labeled + id_only + test + distractors; }
  std::vector<std::size_t> labeled_ids() const { return identity_range(0, labeled); }
  std::vector<std::size_t> id_only_ids() const { return identity_range(labeled, id_only); }
  std::vector<std::size_t> test_ids() const { return identity_range(labeled + id_only, test); }
  std::vector<std::size_t> distractor_ids() const {
    return identity_range(labeled + id_only + test, distractors);
  }
};

WorldSplit world_split(const RunConfig& config);
SynthConfig synth_config(const RunConfig& config);
/// `input_dim` and `attributes` come from the data.
PipelineConfig pipeline_config(const RunConfig& config, std::size_t input_dim,
                               std::size_t attributes);
StageConfig baseline_config(const RunConfig& config);
SplitProtocol split_protocol(const RunConfig& config);
RetrievalOptions retrieval_options(const RunConfig& config);

}  // namespace ssdal
