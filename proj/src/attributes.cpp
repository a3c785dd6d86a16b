#include "ssdal/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ssdal/error.hpp"

namespace ssdal {

namespace {

void require_same_length(std::size_t a, std::size_t b) {
  require(a == b, ErrorKind::shape,
          "vector lengths differ (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
}

}  // namespace

AttributeVector::AttributeVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    require(b <= 1, ErrorKind::validation, "attribute bits must be 0 or 1");
  }
}

std::size_t AttributeVector::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<double> AttributeVector::as_reals() const {
  return {bits_.begin(), bits_.end()};
}

AttributeVector binarize_top_p(ConfidenceVector scores, std::size_t p) {
  require(p >= 1 && p <= scores.size(), ErrorKind::validation,
          "top-p needs 1 <= p <= K (p=" + std::to_string(p) +
              ", K=" + std::to_string(scores.size()) + ")");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(p), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  AttributeVector out(scores.size());
  for (std::size_t i = 0; i < p; ++i) out.set(order[i], true);
  return out;
}

AttributeVector binarize_threshold(ConfidenceVector scores, double tau) {
  AttributeVector out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out.set(i, scores[i] > tau);
  return out;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

std::size_t hamming_distance(const AttributeVector& a, const AttributeVector& b) {
  require_same_length(a.size(), b.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] != b[i];
  return total;
}

double attribute_accuracy(ConfidenceVector scores, const AttributeVector& ground_truth) {
  require_same_length(scores.size(), ground_truth.size());
  const std::size_t n = ground_truth.count();
  require(n >= 1, ErrorKind::validation, "ground truth has no positive attributes");
  const AttributeVector top = binarize_top_p(scores, n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top.size(); ++i) hits += top[i] && ground_truth[i];
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace ssdal
