#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ssdal/attributes.hpp"
#include "ssdal/matrix.hpp"

namespace ssdal {

struct LossParams {
  double theta = 1.0;   // margin
  double gamma = 0.01;  // weight of the attribute drift term

  void validate() const;
};

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

using TripletBatch = std::vector<Triplet>;

/// Attribute labels predicted for every id-labelled sample before fine-tuning
/// starts; held fixed while the triplet loss is descended.
struct InitialLabels {
  std::vector<AttributeVector> labels;
};

struct TripletLoss {
  double loss = 0.0;
  std::vector<double> grad_anchor;
  std::vector<double> grad_positive;
  std::vector<double> grad_negative;
};

/// max(0, D(a,p) + θ − D(a,n)) with D the squared Euclidean distance. At the
/// kink the zero branch is taken.
TripletLoss hinge_triplet_loss(std::span<const double> anchor,
                               std::span<const double> positive,
                               std::span<const double> negative, const LossParams& params);

/// Hinge term plus γ·[D(a,ã) + D(p,p̃) + D(n,ñ)]. The initial labels are
/// constants. With γ = 0 the result is bitwise that of hinge_triplet_loss.
TripletLoss attributes_triplet_loss(std::span<const double> anchor,
                                    std::span<const double> positive,
                                    std::span<const double> negative,
                                    const AttributeVector& anchor_initial,
                                    const AttributeVector& positive_initial,
                                    const AttributeVector& negative_initial,
                                    const LossParams& params);

/// Drift term alone: D(a,ã) + D(p,p̃) + D(n,ñ).
double attribute_drift(std::span<const double> anchor, std::span<const double> positive,
                       std::span<const double> negative,
                       const AttributeVector& anchor_initial,
                       const AttributeVector& positive_initial,
                       const AttributeVector& negative_initial);

struct TripletBatchLoss {
  double loss = 0.0;   // mean over triplets
  double hinge = 0.0;  // mean hinge part
  double drift = 0.0;  // mean drift ℰ (unweighted)
  std::size_t active = 0;
  Matrix gradient;     // dL/d(outputs), same shape as outputs
};

/// Mean loss over `triplets`, whose indices address rows of `outputs`. When
/// `initial` is non-null it is aligned with the rows of `outputs` and the
/// attributes triplet loss is used; otherwise the plain hinge loss.
TripletBatchLoss triplet_batch_loss(const Matrix& outputs, std::span<const Triplet> triplets,
                                    const std::vector<AttributeVector>* initial,
                                    const LossParams& params);

/// Hard triplet mining. Anchors are drawn uniformly (redrawn when their id has
/// no second sample); the positive is the same-id sample farthest from the
/// anchor in Hamming distance of `predicted`, the negative the other-id sample
/// nearest to it. Ties go to the lowest index.
TripletBatch mine_triplets(std::span<const std::int64_t> person_ids,
                           const std::vector<AttributeVector>& predicted, std::size_t count,
                           std::uint64_t seed);

/// Throws a data error unless some id has two samples and two ids exist.
void require_minable(std::span<const std::int64_t> person_ids);

}  // namespace ssdal
