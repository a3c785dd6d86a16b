#include "ssdal/triplet.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "ssdal/error.hpp"
#include "ssdal/rng.hpp"

namespace ssdal {

namespace {

void require_lengths(std::size_t k, std::initializer_list<std::size_t> others) {
  for (std::size_t n : others) {
    require(n == k, ErrorKind::shape,
            "triplet vectors differ in length (" + std::to_string(n) + " vs " +
                std::to_string(k) + ")");
  }
}

double drift_distance(std::span<const double> scores, const AttributeVector& initial) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - (initial[i] ? 1.0 : 0.0);
    total += d * d;
  }
  return total;
}

void add_drift_gradient(std::vector<double>& grad, std::span<const double> scores,
                        const AttributeVector& initial, double gamma) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    grad[i] += gamma * 2.0 * (scores[i] - (initial[i] ? 1.0 : 0.0));
  }
}

}  // namespace

void LossParams::validate() const {
  require(theta >= 0.0 && std::isfinite(theta), ErrorKind::config, "theta must be >= 0");
  require(gamma >= 0.0 && std::isfinite(gamma), ErrorKind::config, "gamma must be >= 0");
}

TripletLoss hinge_triplet_loss(std::span<const double> anchor,
                               std::span<const double> positive,
                               std::span<const double> negative, const LossParams& params) {
  params.validate();
  const std::size_t k = anchor.size();
  require_lengths(k, {positive.size(), negative.size()});
  TripletLoss out;
  out.grad_anchor.assign(k, 0.0);
  out.grad_positive.assign(k, 0.0);
  out.grad_negative.assign(k, 0.0);
  const double margin =
      squared_euclidean(anchor, positive) + params.theta - squared_euclidean(anchor, negative);
  if (margin <= 0.0) return out;
  out.loss = margin;
  for (std::size_t i = 0; i < k; ++i) {
    out.grad_anchor[i] = 2.0 * (negative[i] - positive[i]);
    out.grad_positive[i] = -2.0 * (anchor[i] - positive[i]);
    out.grad_negative[i] = 2.0 * (anchor[i] - negative[i]);
  }
  return out;
}

double attribute_drift(std::span<const double> anchor, std::span<const double> positive,
                       std::span<const double> negative,
                       const AttributeVector& anchor_initial,
                       const AttributeVector& positive_initial,
                       const AttributeVector& negative_initial) {
  const std::size_t k = anchor.size();
  require_lengths(k, {positive.size(), negative.size(), anchor_initial.size(),
                      positive_initial.size(), negative_initial.size()});
  return drift_distance(anchor, anchor_initial) + drift_distance(positive, positive_initial) +
         drift_distance(negative, negative_initial);
}

TripletLoss attributes_triplet_loss(std::span<const double> anchor,
                                    std::span<const double> positive,
                                    std::span<const double> negative,
                                    const AttributeVector& anchor_initial,
                                    const AttributeVector& positive_initial,
                                    const AttributeVector& negative_initial,
                                    const LossParams& params) {
  const double drift = attribute_drift(anchor, positive, negative, anchor_initial,
                                       positive_initial, negative_initial);
  TripletLoss out = hinge_triplet_loss(anchor, positive, negative, params);
  // Adding a zero-weighted term would turn -0.0 gradients into +0.0.
  if (params.gamma == 0.0) return out;
  out.loss += params.gamma * drift;
  add_drift_gradient(out.grad_anchor, anchor, anchor_initial, params.gamma);
  add_drift_gradient(out.grad_positive, positive, positive_initial, params.gamma);
  add_drift_gradient(out.grad_negative, negative, negative_initial, params.gamma);
  return out;
}

TripletBatchLoss triplet_batch_loss(const Matrix& outputs, std::span<const Triplet> triplets,
                                    const std::vector<AttributeVector>* initial,
                                    const LossParams& params) {
  params.validate();
  if (initial != nullptr) {
    require(initial->size() == outputs.rows(), ErrorKind::shape,
            "initial labels do not cover the output rows");
  }
  TripletBatchLoss out;
  out.gradient = Matrix(outputs.rows(), outputs.cols());
  if (triplets.empty()) return out;
  const double inv = 1.0 / static_cast<double>(triplets.size());
  for (const Triplet& t : triplets) {
    require(t.anchor < outputs.rows() && t.positive < outputs.rows() &&
                t.negative < outputs.rows(),
            ErrorKind::shape, "triplet index out of range");
    const auto a = outputs.row(t.anchor);
    const auto p = outputs.row(t.positive);
    const auto n = outputs.row(t.negative);
    TripletLoss one;
    if (initial != nullptr) {
      const auto& init = *initial;
      one = attributes_triplet_loss(a, p, n, init[t.anchor], init[t.positive],
                                    init[t.negative], params);
      out.drift += attribute_drift(a, p, n, init[t.anchor], init[t.positive],
                                   init[t.negative]);
    } else {
      one = hinge_triplet_loss(a, p, n, params);
    }
    const double hinge = hinge_triplet_loss(a, p, n, params).loss;
    out.hinge += hinge;
    out.active += hinge > 0.0;
    out.loss += one.loss;
    auto ga = out.gradient.row(t.anchor);
    auto gp = out.gradient.row(t.positive);
    auto gn = out.gradient.row(t.negative);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga[i] += inv * one.grad_anchor[i];
      gp[i] += inv * one.grad_positive[i];
      gn[i] += inv * one.grad_negative[i];
    }
  }
  out.loss *= inv;
  out.hinge *= inv;
  out.drift *= inv;
  return out;
}

void require_minable(std::span<const std::int64_t> person_ids) {
  std::map<std::int64_t, std::size_t> counts;
  for (auto id : person_ids) ++counts[id];
  bool repeated = false;
  for (const auto& [id, n] : counts) repeated = repeated || n >= 2;
  require(repeated, ErrorKind::data, "no person id has two samples; no positive can be mined");
  require(counts.size() >= 2, ErrorKind::data, "only one person id; no negative can be mined");
}

TripletBatch mine_triplets(std::span<const std::int64_t> person_ids,
                           const std::vector<AttributeVector>& predicted, std::size_t count,
                           std::uint64_t seed) {
  require(predicted.size() == person_ids.size(), ErrorKind::shape,
          "predicted attributes do not cover all samples");
  require_minable(person_ids);
  std::map<std::int64_t, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < person_ids.size(); ++i) by_id[person_ids[i]].push_back(i);

  Rng rng(seed);
  TripletBatch batch;
  batch.reserve(count);
  while (batch.size() < count) {
    const std::size_t anchor = rng.index(person_ids.size());
    const auto& same = by_id[person_ids[anchor]];
    if (same.size() < 2) continue;

    Triplet t{anchor, 0, 0};
    std::size_t best = 0;
    bool found = false;
    for (std::size_t j : same) {
      if (j == anchor) continue;
      const std::size_t d = hamming_distance(predicted[anchor], predicted[j]);
      if (!found || d > best) {
        best = d;
        t.positive = j;
        found = true;
      }
    }
    found = false;
    for (std::size_t j = 0; j < person_ids.size(); ++j) {
      if (person_ids[j] == person_ids[anchor]) continue;
      const std::size_t d = hamming_distance(predicted[anchor], predicted[j]);
      if (!found || d < best) {
        best = d;
        t.negative = j;
        found = true;
      }
    }
    batch.push_back(t);
  }
  return batch;
}

}  // namespace ssdal
