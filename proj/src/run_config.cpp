#include "ssdal/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "ssdal/error.hpp"

namespace ssdal {

namespace {

struct KeySpec {
  const char* key;
  const char* fallback;  // nullptr: no default
};

// clang-format off
constexpr KeySpec kSchema[] = {
  {"data_dir", nullptr},
  {"model_dir", nullptr},
  {"report.include_timing", "false"},

  {"synth.seed", nullptr},
  {"synth.labeled_identities", "40"},
  {"synth.id_identities", "60"},
  {"synth.test_identities", "50"},
  {"synth.distractor_identities", "0"},
  {"synth.attributes", "32"},
  {"synth.feature_dim", "48"},
  {"synth.cameras", "2"},
  {"synth.samples_per_camera", "3"},
  {"synth.mean_positive_attributes", "15"},
  {"synth.flip_rate", "0.15"},
  {"synth.noise_sigma", "0.3"},
  {"synth.camera_offset", "1.0"},
  {"synth.nuisance_rank", "4"},
  {"synth.nuisance_scale", "2"},

  {"net.hidden", "48"},
  {"net.activation", "tanh"},
  {"net.init_seed", "1"},

  {"p", "10"},
  {"tau", "0"},
  {"loss.theta", "1"},
  {"loss.gamma", "0.01"},

  {"stage1.epochs", "60"},
  {"stage1.batch_size", "16"},
  {"stage1.lr", "0.1"},
  {"stage1.momentum", "0"},
  {"stage1.seed", "11"},
  {"stage1.trainable", ""},

  {"stage2.epochs", "20"},
  {"stage2.batch_size", "16"},
  {"stage2.triplets", "256"},
  {"stage2.lr", "0.05"},
  {"stage2.momentum", "0"},
  {"stage2.seed", "12"},
  {"stage2.trainable", ""},

  {"stage3.epochs", "10"},
  {"stage3.batch_size", "16"},
  {"stage3.lr", "0.05"},
  {"stage3.momentum", "0"},
  {"stage3.seed", "13"},
  {"stage3.trainable", ""},

  {"baseline.epochs", "20"},
  {"baseline.batch_size", "16"},
  {"baseline.triplets", "256"},
  {"baseline.lr", "0.05"},
  {"baseline.momentum", "0"},
  {"baseline.seed", "14"},

  {"eval.num_tests", "10"},
  {"eval.probe_size", "0"},
  {"eval.seed", "15"},
  {"eval.distance", "cosine"},
  {"eval.exclude_same_camera", "true"},

  {"gradcheck.seeds", "20"},
  {"gradcheck.epsilon", "1e-5"},
  {"gradcheck.tolerance", "1e-4"},
  {"gradcheck.fault_injection", "false"},
};
// clang-format on

const KeySpec* find_key(const std::string& key) {
  for (const auto& spec : kSchema) {
    if (key == spec.key) return &spec;
  }
  return nullptr;
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

template <typename T>
T parse_as(const std::string& key, const std::string& text) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && end == text.data() + text.size(), ErrorKind::config,
          "key '" + key + "': cannot parse '" + text + "'");
  return value;
}

std::vector<bool> trainable_mask(const RunConfig& config, const std::string& key) {
  std::vector<bool> mask;
  for (std::size_t v : config.get_sizes(key)) {
    require(v <= 1, ErrorKind::config, "key '" + key + "' must be a list of 0/1 flags");
    mask.push_back(v == 1);
  }
  return mask;
}

StageConfig stage_config(const RunConfig& config, const std::string& prefix) {
  StageConfig cfg;
  cfg.epochs = config.get_uint(prefix + ".epochs");
  cfg.batch_size = config.get_uint(prefix + ".batch_size");
  cfg.learning_rate = config.get_real(prefix + ".lr");
  cfg.momentum = config.get_real(prefix + ".momentum");
  cfg.seed = config.get_uint(prefix + ".seed");
  cfg.p = config.get_uint("p");
  cfg.tau = config.get_real("tau");
  cfg.loss.theta = config.get_real("loss.theta");
  cfg.loss.gamma = config.get_real("loss.gamma");
  if (config.effective().contains(prefix + ".triplets")) {
    cfg.triplets_per_epoch = config.get_uint(prefix + ".triplets");
  }
  if (config.effective().contains(prefix + ".trainable")) {
    cfg.trainable_layers = trainable_mask(config, prefix + ".trainable");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in, const std::string& origin) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorKind::config,
            origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    require(!config.has(key), ErrorKind::config,
            origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    config.set(key, trim(body.substr(eq + 1)));
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::config, "cannot read config '" + path + "'");
  return parse(in, path);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  require(find_key(key) != nullptr, ErrorKind::config, "unknown config key '" + key + "'");
  values_[key] = value;
}

void RunConfig::require_keys(std::initializer_list<const char*> keys) const {
  for (const char* key : keys) {
    require(has(key), ErrorKind::config, std::string("missing required key '") + key + "'");
  }
}

std::string RunConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const KeySpec* spec = find_key(key);
  require(spec != nullptr, ErrorKind::config, "unknown config key '" + key + "'");
  require(spec->fallback != nullptr, ErrorKind::config, "missing required key '" + key + "'");
  return spec->fallback;
}

double RunConfig::get_real(const std::string& key) const {
  return parse_as<double>(key, get_string(key));
}

std::uint64_t RunConfig::get_uint(const std::string& key) const {
  return parse_as<std::uint64_t>(key, get_string(key));
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::config, "key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<std::size_t> RunConfig::get_sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  std::istringstream in(get_string(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_as<std::size_t>(key, item));
  }
  return out;
}

std::map<std::string, std::string> RunConfig::effective() const {
  std::map<std::string, std::string> out;
  for (const auto& spec : kSchema) {
    if (has(spec.key)) {
      out[spec.key] = values_.at(spec.key);
    } else if (spec.fallback != nullptr) {
      out[spec.key] = spec.fallback;
    }
  }
  return out;
}

std::vector<std::string> RunConfig::known_keys() {
  std::vector<std::string> out;
  for (const auto& spec : kSchema) out.emplace_back(spec.key);
  return out;
}

WorldSplit world_split(const RunConfig& config) {
  WorldSplit split;
  split.labeled = config.get_uint("synth.labeled_identities");
  split.id_only = config.get_uint("synth.id_identities");
  split.test = config.get_uint("synth.test_identities");
  split.distractors = config.get_uint("synth.distractor_identities");
  require(split.labeled >= 1 && split.id_only >= 1 && split.test >= 1, ErrorKind::config,
          "every synthetic split needs at least one identity");
  return split;
}

SynthConfig synth_config(const RunConfig& config) {
  SynthConfig cfg;
  cfg.num_identities = world_split(config).total();
  cfg.attribute_count = config.get_uint("synth.attributes");
  cfg.feature_dim = config.get_uint("synth.feature_dim");
  cfg.cameras = config.get_uint("synth.cameras");
  cfg.samples_per_camera = config.get_uint("synth.samples_per_camera");
  cfg.mean_positive_attributes = config.get_real("synth.mean_positive_attributes");
  cfg.flip_rate = config.get_real("synth.flip_rate");
  cfg.noise_sigma = config.get_real("synth.noise_sigma");
  cfg.camera_offset_scale = config.get_real("synth.camera_offset");
  cfg.nuisance_rank = config.get_uint("synth.nuisance_rank");
  cfg.nuisance_scale = config.get_real("synth.nuisance_scale");
  cfg.seed = config.get_uint("synth.seed");
  cfg.validate();
  require(cfg.cameras >= 2, ErrorKind::config, "probe/gallery splits need two cameras");
  return cfg;
}

PipelineConfig pipeline_config(const RunConfig& config, std::size_t input_dim,
                               std::size_t attributes) {
  PipelineConfig cfg;
  cfg.network.layer_sizes.push_back(input_dim);
  for (std::size_t width : config.get_sizes("net.hidden")) cfg.network.layer_sizes.push_back(width);
  cfg.network.layer_sizes.push_back(attributes);
  cfg.network.hidden_activation = parse_activation(config.get_string("net.activation"));
  cfg.network.init_seed = config.get_uint("net.init_seed");
  cfg.network.validate();
  cfg.stage1 = stage_config(config, "stage1");
  cfg.stage2 = stage_config(config, "stage2");
  cfg.stage3 = stage_config(config, "stage3");
  return cfg;
}

StageConfig baseline_config(const RunConfig& config) { return stage_config(config, "baseline"); }

SplitProtocol split_protocol(const RunConfig& config) {
  SplitProtocol protocol;
  protocol.num_tests = config.get_uint("eval.num_tests");
  protocol.probe_size = config.get_uint("eval.probe_size");
  protocol.seed = config.get_uint("eval.seed");
  protocol.distance = parse_distance(config.get_string("eval.distance"));
  protocol.validate();
  return protocol;
}

RetrievalOptions retrieval_options(const RunConfig& config) {
  return {parse_distance(config.get_string("eval.distance")),
          config.get_bool("eval.exclude_same_camera")};
}

}  // namespace ssdal
