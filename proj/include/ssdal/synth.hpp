#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ssdal/attributes.hpp"
#include "ssdal/dataset.hpp"
#include "ssdal/matrix.hpp"

namespace ssdal {

struct SynthConfig {
  std::size_t num_identities = 160;
  std::size_t attribute_count = 105;
  std::size_t feature_dim = 64;
  std::size_t cameras = 2;
  std::size_t samples_per_camera = 2;
  double mean_positive_attributes = 15.0;
  /// Mean per-attribute flip probability of a camera.
  double flip_rate = 0.0;
  double noise_sigma = 0.0;
  /// Standard deviation of the per-camera feature offsets.
  double camera_offset_scale = 1.0;
  /// Per-sample appearance variation (pose, background) confined to a
  /// camera-specific subspace of this rank; 0 disables it.
  std::size_t nuisance_rank = 0;
  double nuisance_scale = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Identity prototypes, per-camera corruption, and the linear feature map.
struct SynthWorld {
  SynthConfig config;
  std::vector<AttributeVector> prototypes;         // one per identity, all distinct
  std::vector<std::vector<double>> flip_probability;  // camera × attribute
  Matrix camera_offsets;                           // camera × d
  Matrix mixing;                                   // d × K
  std::vector<Matrix> nuisance_bases;              // per camera, d × rank

  struct Sample {
    std::vector<double> features;
    AttributeVector attributes;  // prototype after the camera's flips
  };

  /// One observation; depends only on (seed, identity, camera, index).
  Sample sample(std::size_t identity, std::size_t camera, std::size_t index) const;
};

SynthWorld generate_world(const SynthConfig& config);

/// Every camera × samples_per_camera observation of each identity.
LabeledSet emit_labeled_set(const SynthWorld& world, std::span<const std::size_t> identities);

IdSet emit_id_set(const SynthWorld& world, std::span<const std::size_t> identities);

/// One probe per identity (sample 0 of `probe_camera`); gallery holds sample 0
/// of each gallery camera for the identities and for every distractor.
ProbeGallery emit_probe_gallery(const SynthWorld& world, std::span<const std::size_t> identities,
                                std::size_t probe_camera,
                                std::span<const std::size_t> gallery_cameras,
                                std::span<const std::size_t> distractor_identities,
                                bool allow_probe_camera_in_gallery = false);

/// Consecutive identity ranges [first, first + count).
std::vector<std::size_t> identity_range(std::size_t first, std::size_t count);

}  // namespace ssdal
