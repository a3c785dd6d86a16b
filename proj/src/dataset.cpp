#include "ssdal/dataset.hpp"

#include <set>
#include <string>

#include "ssdal/error.hpp"

namespace ssdal {

void LabeledSet::validate() const {
  require(labels.size() == features.rows(), ErrorKind::shape,
          "labelled set has " + std::to_string(features.rows()) + " feature rows but " +
              std::to_string(labels.size()) + " labels");
  require(person_ids.empty() || person_ids.size() == features.rows(), ErrorKind::shape,
          "person id count mismatch");
  require(camera_ids.empty() || camera_ids.size() == features.rows(), ErrorKind::shape,
          "camera id count mismatch");
  for (const auto& label : labels) {
    require(label.size() == labels.front().size(), ErrorKind::shape,
            "labels differ in attribute count");
  }
}

Matrix LabeledSet::label_matrix() const {
  const std::size_t k = labels.empty() ? 0 : labels.front().size();
  Matrix out(labels.size(), k);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    for (std::size_t i = 0; i < k; ++i) out(n, i) = labels[n][i] ? 1.0 : 0.0;
  }
  return out;
}

void IdSet::validate() const {
  require(person_ids.size() == features.rows(), ErrorKind::shape,
          "id set has " + std::to_string(features.rows()) + " feature rows but " +
              std::to_string(person_ids.size()) + " person ids");
  require(camera_ids.size() == features.rows(), ErrorKind::shape, "camera id count mismatch");
  for (auto id : person_ids) require(id >= 0, ErrorKind::data, "person ids must be non-negative");
}

void ProbeGallery::validate() const {
  probe.validate();
  gallery.validate();
  require(probe.features.cols() == gallery.features.cols() || probe.size() == 0 ||
              gallery.size() == 0,
          ErrorKind::shape, "probe and gallery feature dimensions differ");
  require(probe_labels.empty() || probe_labels.size() == probe.size(), ErrorKind::shape,
          "probe label count mismatch");
  require(gallery_labels.empty() || gallery_labels.size() == gallery.size(), ErrorKind::shape,
          "gallery label count mismatch");
}

}  // namespace ssdal
