#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ssdal {

/// Binary attribute label of length K.
class AttributeVector {
 public:
  AttributeVector() = default;
  explicit AttributeVector(std::size_t size) : bits_(size, 0) {}
  /// Every element must be 0 or 1.
  explicit AttributeVector(std::vector<std::uint8_t> bits);

  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t count() const noexcept;
  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  /// As 0.0/1.0 reals, e.g. for distances or cross-entropy targets.
  std::vector<double> as_reals() const;

  friend bool operator==(const AttributeVector&, const AttributeVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Real-valued per-attribute confidences (logits by convention).
using ConfidenceVector = std::span<const double>;

/// Ones at the p largest scores; ties go to the lower index.
AttributeVector binarize_top_p(ConfidenceVector scores, std::size_t p);

/// bit_i = scores_i > tau, strictly.
AttributeVector binarize_threshold(ConfidenceVector scores, double tau);

/// 1 − a·b/(‖a‖‖b‖), or 1 when either vector is zero.
double cosine_distance(std::span<const double> a, std::span<const double> b);

double squared_euclidean(std::span<const double> a, std::span<const double> b);

std::size_t hamming_distance(const AttributeVector& a, const AttributeVector& b);

/// |top-n(scores) ∩ positives| / n with n the number of ground-truth positives.
double attribute_accuracy(ConfidenceVector scores, const AttributeVector& ground_truth);

}  // namespace ssdal
