#include "ssdal/synth.hpp"

#include <cmath>
#include <set>
#include <string>

#include "ssdal/error.hpp"
#include "ssdal/rng.hpp"

namespace ssdal {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t identity, std::size_t camera,
                          std::size_t index) {
  std::uint64_t h = mix(seed ^ 0x5eed5a3b1e5ULL);
  h = mix(h ^ identity);
  h = mix(h ^ (camera + 0x100000000ULL));
  return mix(h ^ (index + 0x200000000ULL));
}

}  // namespace

void SynthConfig::validate() const {
  require(num_identities >= 1 && attribute_count >= 1 && feature_dim >= 1 && cameras >= 1 &&
              samples_per_camera >= 1,
          ErrorKind::config, "synthetic world counts must be >= 1");
  require(flip_rate >= 0.0 && flip_rate < 0.5, ErrorKind::config, "flip rate must be in [0, 0.5)");
  require(mean_positive_attributes >= 1.0 &&
              mean_positive_attributes <= static_cast<double>(attribute_count),
          ErrorKind::config, "mean positive attributes must be in [1, K]");
  require(noise_sigma >= 0.0 && camera_offset_scale >= 0.0 && nuisance_scale >= 0.0,
          ErrorKind::config,
          "noise scales must be non-negative");
  // Prototypes are distinct and non-zero.
  require(attribute_count >= 63 ||
              static_cast<double>(num_identities) < std::ldexp(1.0, static_cast<int>(attribute_count)) / 2,
          ErrorKind::config, "too many identities for the attribute count");
}

SynthWorld generate_world(const SynthConfig& config) {
  config.validate();
  SynthWorld world;
  world.config = config;
  const std::size_t k = config.attribute_count;
  const std::size_t d = config.feature_dim;
  Rng rng(config.seed);

  const double rate = config.mean_positive_attributes / static_cast<double>(k);
  std::set<std::vector<std::uint8_t>> seen;
  while (world.prototypes.size() < config.num_identities) {
    std::vector<std::uint8_t> bits(k);
    for (auto& b : bits) b = rng.bernoulli(rate) ? 1 : 0;
    bool any = false;
    for (auto b : bits) any = any || b;
    if (!any || !seen.insert(bits).second) continue;
    world.prototypes.emplace_back(std::move(bits));
  }

  // Flip probabilities uniform on [0, 2·rate) so each camera averages flip_rate.
  world.flip_probability.assign(config.cameras, std::vector<double>(k, 0.0));
  for (auto& camera : world.flip_probability) {
    for (double& q : camera) q = rng.uniform(0.0, 2.0 * config.flip_rate);
  }

  world.camera_offsets = Matrix(config.cameras, d);
  for (double& v : world.camera_offsets.values()) v = config.camera_offset_scale * rng.normal();

  world.mixing = Matrix(d, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (double& v : world.mixing.values()) v = scale * rng.normal();

  for (std::size_t c = 0; c < config.cameras && config.nuisance_rank > 0; ++c) {
    Matrix basis(d, config.nuisance_rank);
    const double unit = 1.0 / std::sqrt(static_cast<double>(config.nuisance_rank));
    for (double& v : basis.values()) v = unit * rng.normal();
    world.nuisance_bases.push_back(std::move(basis));
  }
  return world;
}

SynthWorld::Sample SynthWorld::sample(std::size_t identity, std::size_t camera,
                                      std::size_t index) const {
  require(identity < prototypes.size(), ErrorKind::data,
          "identity " + std::to_string(identity) + " outside the world");
  require(camera < config.cameras, ErrorKind::data,
          "camera " + std::to_string(camera) + " outside the world");
  Rng rng(sample_seed(config.seed, identity, camera, index));
  const AttributeVector& proto = prototypes[identity];
  const std::size_t k = proto.size();

  Sample out;
  out.attributes = proto;
  for (std::size_t a = 0; a < k; ++a) {
    if (rng.bernoulli(flip_probability[camera][a])) out.attributes.set(a, !proto[a]);
  }
  std::vector<double> pose(config.nuisance_rank);
  for (double& z : pose) z = config.nuisance_scale * rng.normal();
  // Features see the prototype in ±1 coding.
  out.features.assign(mixing.rows(), 0.0);
  for (std::size_t i = 0; i < mixing.rows(); ++i) {
    const auto m = mixing.row(i);
    double acc = camera_offsets(camera, i);
    for (std::size_t a = 0; a < k; ++a) acc += m[a] * (proto[a] ? 1.0 : -1.0);
    if (!pose.empty()) {
      const auto b = nuisance_bases[camera].row(i);
      for (std::size_t r = 0; r < pose.size(); ++r) acc += b[r] * pose[r];
    }
    out.features[i] = acc + config.noise_sigma * rng.normal();
  }
  return out;
}

std::vector<std::size_t> identity_range(std::size_t first, std::size_t count) {
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = first + i;
  return out;
}

LabeledSet emit_labeled_set(const SynthWorld& world, std::span<const std::size_t> identities) {
  require(!identities.empty(), ErrorKind::data, "empty identity subset");
  const auto& cfg = world.config;
  LabeledSet out;
  std::vector<double> values;
  for (std::size_t id : identities) {
    for (std::size_t cam = 0; cam < cfg.cameras; ++cam) {
      for (std::size_t s = 0; s < cfg.samples_per_camera; ++s) {
        auto sample = world.sample(id, cam, s);
        values.insert(values.end(), sample.features.begin(), sample.features.end());
        out.labels.push_back(std::move(sample.attributes));
        out.person_ids.push_back(static_cast<std::int64_t>(id));
        out.camera_ids.push_back(static_cast<std::int64_t>(cam));
      }
    }
  }
  out.features = Matrix(out.labels.size(), cfg.feature_dim, std::move(values));
  return out;
}

IdSet emit_id_set(const SynthWorld& world, std::span<const std::size_t> identities) {
  LabeledSet labeled = emit_labeled_set(world, identities);
  return {std::move(labeled.features), std::move(labeled.person_ids),
          std::move(labeled.camera_ids)};
}

ProbeGallery emit_probe_gallery(const SynthWorld& world, std::span<const std::size_t> identities,
                                std::size_t probe_camera,
                                std::span<const std::size_t> gallery_cameras,
                                std::span<const std::size_t> distractor_identities,
                                bool allow_probe_camera_in_gallery) {
  require(!identities.empty(), ErrorKind::data, "empty identity subset");
  require(!gallery_cameras.empty(), ErrorKind::config, "no gallery cameras");
  const auto& cfg = world.config;
  for (std::size_t cam : gallery_cameras) {
    if (cam != probe_camera) continue;
    require(allow_probe_camera_in_gallery, ErrorKind::config,
            "probe camera is also a gallery camera");
    require(cfg.samples_per_camera >= 2, ErrorKind::config,
            "probe camera in gallery needs two samples per camera");
  }
  std::set<std::size_t> probe_ids(identities.begin(), identities.end());
  for (std::size_t id : distractor_identities) {
    require(!probe_ids.contains(id), ErrorKind::data,
            "distractor identity " + std::to_string(id) + " is also a probe identity");
  }

  ProbeGallery out;
  std::vector<double> probe_values, gallery_values;
  auto add = [&](IdSet& set, std::vector<double>& values, std::vector<AttributeVector>& labels,
                 std::size_t id, std::size_t cam, std::size_t index) {
    auto sample = world.sample(id, cam, index);
    values.insert(values.end(), sample.features.begin(), sample.features.end());
    labels.push_back(std::move(sample.attributes));
    set.person_ids.push_back(static_cast<std::int64_t>(id));
    set.camera_ids.push_back(static_cast<std::int64_t>(cam));
  };
  for (std::size_t id : identities) add(out.probe, probe_values, out.probe_labels, id, probe_camera, 0);
  auto add_gallery = [&](std::size_t id) {
    for (std::size_t cam : gallery_cameras) {
      add(out.gallery, gallery_values, out.gallery_labels, id, cam, cam == probe_camera ? 1 : 0);
    }
  };
  for (std::size_t id : identities) add_gallery(id);
  for (std::size_t id : distractor_identities) add_gallery(id);
  out.distractor_count = distractor_identities.size() * gallery_cameras.size();

  out.probe.features = Matrix(out.probe.person_ids.size(), cfg.feature_dim, std::move(probe_values));
  out.gallery.features =
      Matrix(out.gallery.person_ids.size(), cfg.feature_dim, std::move(gallery_values));
  return out;
}

}  // namespace ssdal
