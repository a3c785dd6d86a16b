#include "ssdal/reid_eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "ssdal/attributes.hpp"
#include "ssdal/error.hpp"
#include "ssdal/rng.hpp"

namespace ssdal {

std::string_view to_string(Distance distance) noexcept {
  return distance == Distance::cosine ? "cosine" : "squared_euclidean";
}

Distance parse_distance(std::string_view name) {
  if (name == "cosine") return Distance::cosine;
  if (name == "squared_euclidean" || name == "euclidean") return Distance::squared_euclidean;
  fail(ErrorKind::config, "unknown distance '" + std::string(name) + "'");
}

std::string_view to_string(QueryMode mode) noexcept {
  switch (mode) {
    case QueryMode::single:
      return "single";
    case QueryMode::multi_avg:
      return "multi_avg";
    case QueryMode::multi_max:
      return "multi_max";
  }
  return "?";
}

QueryMode parse_query_mode(std::string_view name) {
  if (name == "single") return QueryMode::single;
  if (name == "multi_avg" || name == "avg") return QueryMode::multi_avg;
  if (name == "multi_max" || name == "max") return QueryMode::multi_max;
  fail(ErrorKind::config, "unknown query mode '" + std::string(name) + "'");
}

Ranking rank_gallery(std::span<const double> probe, const Matrix& gallery, Distance distance) {
  require(gallery.rows() == 0 || gallery.cols() == probe.size(), ErrorKind::shape,
          "probe has " + std::to_string(probe.size()) + " dims, gallery " +
              std::to_string(gallery.cols()));
  std::vector<double> dist(gallery.rows());
  for (std::size_t g = 0; g < gallery.rows(); ++g) {
    dist[g] = distance == Distance::cosine ? cosine_distance(probe, gallery.row(g))
                                           : squared_euclidean(probe, gallery.row(g));
  }
  Ranking order(gallery.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  return order;
}

CmcCurve cmc(const std::vector<Ranking>& rankings, std::span<const std::int64_t> probe_ids,
             std::span<const std::int64_t> gallery_ids) {
  require(rankings.size() == probe_ids.size(), ErrorKind::shape,
          "one ranking per probe is required");
  require(!rankings.empty(), ErrorKind::data, "no probes");
  const std::size_t length = gallery_ids.size();
  std::vector<std::size_t> first_hits(length, 0);
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    require(rankings[q].size() == length, ErrorKind::shape, "ranking does not cover the gallery");
    std::size_t hit = length;
    for (std::size_t r = 0; r < length; ++r) {
      if (gallery_ids[rankings[q][r]] == probe_ids[q]) {
        hit = r;
        break;
      }
    }
    require(hit < length, ErrorKind::data,
            "probe " + std::to_string(q) + " (id " + std::to_string(probe_ids[q]) +
                ") has no match in the gallery");
    ++first_hits[hit];
  }
  CmcCurve curve;
  curve.scores.resize(length);
  std::size_t cumulative = 0;
  for (std::size_t r = 0; r < length; ++r) {
    cumulative += first_hits[r];
    curve.scores[r] = 100.0 * static_cast<double>(cumulative) / static_cast<double>(rankings.size());
  }
  return curve;
}

void SplitProtocol::validate() const {
  require(num_tests >= 1, ErrorKind::config, "num_tests must be >= 1");
}

CmcCurve average_curves(const std::vector<CmcCurve>& curves) {
  require(!curves.empty(), ErrorKind::data, "no curves to average");
  std::size_t length = 0;
  for (const auto& c : curves) length = std::max(length, c.scores.size());
  CmcCurve out;
  out.scores.assign(length, 0.0);
  for (const auto& c : curves) {
    for (std::size_t r = 0; r < length; ++r) {
      out.scores[r] += c.scores.empty() ? 0.0 : c.scores[std::min(r, c.scores.size() - 1)];
    }
  }
  for (double& s : out.scores) s /= static_cast<double>(curves.size());
  return out;
}

CmcCurve averaged_cmc(const ProbeGallery& data, const SplitProtocol& protocol) {
  protocol.validate();
  data.validate();
  const auto& probe_ids = data.probe.person_ids;
  const auto& gallery_ids = data.gallery.person_ids;
  std::set<std::int64_t> in_gallery(gallery_ids.begin(), gallery_ids.end());
  std::set<std::int64_t> probe_set(probe_ids.begin(), probe_ids.end());
  std::vector<std::int64_t> candidates;
  for (auto id : probe_set) {
    if (in_gallery.contains(id)) candidates.push_back(id);
  }
  const std::size_t take = protocol.probe_size == 0 ? candidates.size() : protocol.probe_size;
  require(take >= 1 && take <= candidates.size(), ErrorKind::data,
          "split needs " + std::to_string(take) + " identities, only " +
              std::to_string(candidates.size()) + " are matchable");

  Rng rng(protocol.seed);
  std::vector<CmcCurve> curves;
  for (std::size_t test = 0; test < protocol.num_tests; ++test) {
    std::vector<std::int64_t> pool = candidates;
    rng.shuffle(pool);
    std::set<std::int64_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));

    std::vector<std::size_t> probe_rows, gallery_rows;
    for (std::size_t i = 0; i < probe_ids.size(); ++i) {
      if (chosen.contains(probe_ids[i])) probe_rows.push_back(i);
    }
    for (std::size_t i = 0; i < gallery_ids.size(); ++i) {
      const bool distractor = !probe_set.contains(gallery_ids[i]);
      if (distractor || chosen.contains(gallery_ids[i])) gallery_rows.push_back(i);
    }
    const Matrix gallery = data.gallery.features.select_rows(gallery_rows);
    std::vector<std::int64_t> test_probe_ids, test_gallery_ids;
    for (auto i : probe_rows) test_probe_ids.push_back(probe_ids[i]);
    for (auto i : gallery_rows) test_gallery_ids.push_back(gallery_ids[i]);
    std::vector<Ranking> rankings;
    for (auto i : probe_rows) {
      rankings.push_back(rank_gallery(data.probe.features.row(i), gallery, protocol.distance));
    }
    curves.push_back(cmc(rankings, test_probe_ids, test_gallery_ids));
  }
  return average_curves(curves);
}

MapResult mean_average_precision(const std::vector<Ranking>& rankings,
                                 const std::vector<std::set<std::size_t>>& relevant,
                                 QueryMode mode) {
  require(rankings.size() == relevant.size(), ErrorKind::shape,
          "one relevance set per query is required");
  require(!rankings.empty(), ErrorKind::data, "no queries");
  double ap_total = 0.0;
  std::size_t rank1 = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    const auto& rel = relevant[q];
    require(!rel.empty(), ErrorKind::data,
            "query " + std::to_string(q) + " has no relevant gallery item");
    std::size_t hits = 0;
    double precision_sum = 0.0;
    for (std::size_t r = 0; r < rankings[q].size(); ++r) {
      if (!rel.contains(rankings[q][r])) continue;
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    require(hits == rel.size(), ErrorKind::data,
            "query " + std::to_string(q) + " has relevant items missing from its ranking");
    ap_total += precision_sum / static_cast<double>(rel.size());
    rank1 += !rankings[q].empty() && rel.contains(rankings[q][0]);
  }
  const double n = static_cast<double>(rankings.size());
  return {100.0 * ap_total / n, 100.0 * static_cast<double>(rank1) / n, mode};
}

std::vector<double> pool_tracklet(const Matrix& frames, PoolMode mode) {
  require(frames.rows() >= 1, ErrorKind::data, "cannot pool an empty tracklet");
  std::vector<double> out(frames.row(0).begin(), frames.row(0).end());
  for (std::size_t r = 1; r < frames.rows(); ++r) {
    const auto row = frames.row(r);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = mode == PoolMode::avg ? out[i] + row[i] : std::max(out[i], row[i]);
    }
  }
  if (mode == PoolMode::avg) {
    for (double& v : out) v /= static_cast<double>(frames.rows());
  }
  return out;
}

MapResult evaluate_retrieval(const IdSet& queries, const IdSet& gallery, QueryMode mode,
                             const RetrievalOptions& options) {
  queries.validate();
  gallery.validate();

  struct Query {
    std::vector<double> feature;
    std::int64_t person;
    std::int64_t camera;
  };
  std::vector<Query> list;
  if (mode == QueryMode::single) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto row = queries.features.row(i);
      list.push_back({{row.begin(), row.end()}, queries.person_ids[i], queries.camera_ids[i]});
    }
  } else {
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> tracklets;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      tracklets[{queries.person_ids[i], queries.camera_ids[i]}].push_back(i);
    }
    const PoolMode pool = mode == QueryMode::multi_avg ? PoolMode::avg : PoolMode::max;
    for (const auto& [key, rows] : tracklets) {
      list.push_back({pool_tracklet(queries.features.select_rows(rows), pool), key.first,
                      key.second});
    }
  }

  std::vector<Ranking> rankings;
  std::vector<std::set<std::size_t>> relevant;
  for (const auto& q : list) {
    Ranking full = rank_gallery(q.feature, gallery.features, options.distance);
    Ranking kept;
    std::set<std::size_t> rel;
    for (std::size_t g : full) {
      const bool same_id = gallery.person_ids[g] == q.person;
      const bool junk = same_id && options.exclude_same_camera && gallery.camera_ids[g] == q.camera;
      if (junk) continue;
      if (same_id) rel.insert(g);
      kept.push_back(g);
    }
    require(!rel.empty(), ErrorKind::data,
            "query id " + std::to_string(q.person) + " has no relevant gallery item");
    rankings.push_back(std::move(kept));
    relevant.push_back(std::move(rel));
  }
  return mean_average_precision(rankings, relevant, mode);
}

double aggregate_attribute_accuracy(const Matrix& scores,
                                    const std::vector<AttributeVector>& labels) {
  require(scores.rows() == labels.size(), ErrorKind::shape, "one label per score row required");
  require(!labels.empty(), ErrorKind::data, "empty test set");
  double total = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    require(labels[n].count() >= 1, ErrorKind::data,
            "test label " + std::to_string(n) + " has no positive attribute");
    total += attribute_accuracy(scores.row(n), labels[n]);
  }
  return 100.0 * total / static_cast<double>(labels.size());
}

double aggregate_attribute_accuracy(const NetworkParams& model, const LabeledSet& test_set) {
  test_set.validate();
  return aggregate_attribute_accuracy(forward(model, test_set.features).logits(), test_set.labels);
}

}  // namespace ssdal
