#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ssdal/attributes.hpp"
#include "ssdal/matrix.hpp"

namespace ssdal {

/// Attribute-labelled training set. Person and camera ids are carried along
/// when known (synthetic data) and are −1 otherwise.
struct LabeledSet {
  Matrix features;  // N × d
  std::vector<AttributeVector> labels;
  std::vector<std::int64_t> person_ids;
  std::vector<std::int64_t> camera_ids;

  std::size_t size() const noexcept { return features.rows(); }
  void validate() const;
  Matrix label_matrix() const;
};

/// Samples labelled with person ids only.
struct IdSet {
  Matrix features;  // M × d
  std::vector<std::int64_t> person_ids;
  std::vector<std::int64_t> camera_ids;

  std::size_t size() const noexcept { return features.rows(); }
  void validate() const;
};

/// Probe and gallery samples of a re-identification test. Gallery identities
/// absent from the probe set are distractors.
struct ProbeGallery {
  IdSet probe;
  IdSet gallery;
  /// Ground-truth attributes of each sample when known (may be empty).
  std::vector<AttributeVector> probe_labels;
  std::vector<AttributeVector> gallery_labels;
  std::size_t distractor_count = 0;

  void validate() const;
};

}  // namespace ssdal
