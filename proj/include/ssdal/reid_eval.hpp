#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "ssdal/dataset.hpp"
#include "ssdal/matrix.hpp"
#include "ssdal/network.hpp"

namespace ssdal {

enum class Distance { cosine, squared_euclidean };

std::string_view to_string(Distance distance) noexcept;
Distance parse_distance(std::string_view name);

/// Gallery indices in order of increasing distance to the probe.
using Ranking = std::vector<std::size_t>;

/// Stable ascending sort on distance: equal distances keep gallery order.
Ranking rank_gallery(std::span<const double> probe, const Matrix& gallery, Distance distance);

/// Percent of probes matched within rank r, for r = 1..R (scores[r − 1]).
struct CmcCurve {
  std::vector<double> scores;

  double at_rank(std::size_t r) const { return scores.at(r - 1); }
};

/// Closed-set CMC: every probe must have a correct gallery match.
CmcCurve cmc(const std::vector<Ranking>& rankings, std::span<const std::int64_t> probe_ids,
             std::span<const std::int64_t> gallery_ids);

struct SplitProtocol {
  std::size_t num_tests = 10;
  /// Identities per test; 0 uses every matchable probe identity.
  std::size_t probe_size = 0;
  std::uint64_t seed = 0;
  Distance distance = Distance::cosine;

  void validate() const;
};

/// Mean of per-test CMC curves. Each test draws `probe_size` probe
/// identities; its gallery holds their samples plus all distractors. Curves
/// shorter than the longest are extended with their last value.
CmcCurve averaged_cmc(const ProbeGallery& data, const SplitProtocol& protocol);

/// Element-wise mean of curves, padded as in averaged_cmc.
CmcCurve average_curves(const std::vector<CmcCurve>& curves);

enum class QueryMode { single, multi_avg, multi_max };

std::string_view to_string(QueryMode mode) noexcept;
QueryMode parse_query_mode(std::string_view name);

struct MapResult {
  double map_percent = 0.0;
  double rank1_percent = 0.0;
  QueryMode mode = QueryMode::single;
};

/// AP of a query is the mean precision at the rank of each relevant item;
/// mAP is the mean AP in percent. Rank-1 counts queries whose first item is
/// relevant.
MapResult mean_average_precision(const std::vector<Ranking>& rankings,
                                 const std::vector<std::set<std::size_t>>& relevant,
                                 QueryMode mode = QueryMode::single);

enum class PoolMode { avg, max };

std::vector<double> pool_tracklet(const Matrix& frames, PoolMode mode);

struct RetrievalOptions {
  Distance distance = Distance::cosine;
  /// Same-id gallery items from the query's camera are dropped from the
  /// ranking instead of counting as relevant.
  bool exclude_same_camera = true;
};

/// Multi-camera retrieval. In single mode every query row is a query; in the
/// multi modes rows sharing (person id, camera) form one pooled tracklet.
MapResult evaluate_retrieval(const IdSet& queries, const IdSet& gallery, QueryMode mode,
                             const RetrievalOptions& options = {});

/// Mean of attribute_accuracy over samples, in percent.
double aggregate_attribute_accuracy(const Matrix& scores,
                                    const std::vector<AttributeVector>& labels);
double aggregate_attribute_accuracy(const NetworkParams& model, const LabeledSet& test_set);

}  // namespace ssdal
