#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "ssdal/error.hpp"
#include "ssdal/reid_eval.hpp"
#include "support.hpp"

using namespace ssdal;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no ssdal::Error thrown");
  return ErrorKind::io;
}

bool monotone(const CmcCurve& c) {
  for (std::size_t r = 1; r < c.scores.size(); ++r) {
    if (c.scores[r] < c.scores[r - 1]) return false;
  }
  return c.scores.empty() || (c.scores.front() >= 0.0 && c.scores.back() <= 100.0);
}

IdSet id_set(const Matrix& features, std::vector<std::int64_t> ids, std::vector<std::int64_t> cams) {
  return {features, std::move(ids), std::move(cams)};
}

}  // namespace

TEST_SUITE("reid_eval") {

TEST_CASE("an exact copy of the probe ranks first") {
  const Matrix g = Matrix::from_rows({{1, 0}, {0.3, 0.7}, {0.2, 0.1}});
  const std::vector<double> probe{0.3, 0.7};
  CHECK(rank_gallery(probe, g, Distance::squared_euclidean).front() == 1);
  CHECK(rank_gallery(probe, g, Distance::cosine).front() == 1);
}

TEST_CASE("identical gallery vectors keep gallery order") {
  const Matrix g(5, 3, 0.5);
  const Ranking r = rank_gallery(std::vector<double>{1, 2, 3}, g, Distance::cosine);
  CHECK(r == Ranking{0, 1, 2, 3, 4});
  CHECK(kind_of([&] { rank_gallery(std::vector<double>{1, 2}, g, Distance::cosine); }) ==
        ErrorKind::shape);
}

TEST_CASE("ranking matches an exhaustive sort and is a permutation") {
  ssdal::Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix g = testing::random_matrix(rng, 6, 3);
    const auto probe = testing::random_vector(rng, 3, -1, 1);
    for (auto d : {Distance::cosine, Distance::squared_euclidean}) {
      const Ranking r = rank_gallery(probe, g, d);
      CHECK(r == oracle::rank(probe, g, d));
      Ranking sorted = r;
      std::sort(sorted.begin(), sorted.end());
      Ranking iota(6);
      std::iota(iota.begin(), iota.end(), 0);
      CHECK(sorted == iota);
    }
  }
}

TEST_CASE("cosine and squared euclidean agree on equal-weight binary vectors") {
  ssdal::Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto weighted = [&] {
      std::vector<double> s = testing::random_vector(rng, 8);
      return binarize_top_p(s, 3).as_reals();
    };
    Matrix g(7, 8);
    for (std::size_t i = 0; i < 7; ++i) {
      const auto row = weighted();
      std::copy(row.begin(), row.end(), g.row(i).begin());
    }
    const auto probe = weighted();
    CHECK(rank_gallery(probe, g, Distance::cosine) ==
          rank_gallery(probe, g, Distance::squared_euclidean));
  }
}

TEST_CASE("cmc examples") {
  const std::vector<std::int64_t> ids{0, 1, 2};
  const CmcCurve perfect = cmc({{0, 1, 2}, {1, 0, 2}, {2, 1, 0}}, ids, ids);
  CHECK(perfect.scores == std::vector<double>{100, 100, 100});

  const std::vector<std::int64_t> gallery{5, 6, 7, 8};
  const CmcCurve third = cmc({{0, 1, 2, 3}}, std::vector<std::int64_t>{7}, gallery);
  CHECK(third.scores == std::vector<double>{0, 0, 100, 100});
  CHECK(third.at_rank(3) == 100);

  CHECK(kind_of([&] { cmc({{0, 1, 2, 3}}, std::vector<std::int64_t>{9}, gallery); }) ==
        ErrorKind::data);
}

TEST_CASE("cmc against the first-hit oracle") {
  ssdal::Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto data = oracle::random_probe_gallery(rng, 20);
    std::vector<Ranking> rankings;
    for (std::size_t q = 0; q < data.probe.size(); ++q) {
      rankings.push_back(rank_gallery(data.probe.features.row(q), data.gallery.features,
                                      Distance::squared_euclidean));
    }
    const CmcCurve got = cmc(rankings, data.probe.person_ids, data.gallery.person_ids);
    CHECK(got.scores == oracle::cmc(rankings, data.probe.person_ids, data.gallery.person_ids));
    CHECK(monotone(got));
  }
}

TEST_CASE("averaged cmc reduces and averages as expected") {
  ssdal::Rng rng(4);
  const auto data = oracle::random_probe_gallery(rng, 12);
  SplitProtocol one{1, 0, 7, Distance::cosine};
  std::vector<Ranking> rankings;
  for (std::size_t q = 0; q < data.probe.size(); ++q) {
    rankings.push_back(rank_gallery(data.probe.features.row(q), data.gallery.features, Distance::cosine));
  }
  // All identities in one test: the full-set cmc.
  CHECK(averaged_cmc(data, one).scores ==
        cmc(rankings, data.probe.person_ids, data.gallery.person_ids).scores);

  const CmcCurve a{{0, 50, 100}}, b{{100, 100}}, c{{50, 50, 50, 100}};
  CHECK(average_curves({a, a}).scores == a.scores);
  const CmcCurve avg = average_curves({a, b, c});
  CHECK(avg.scores == std::vector<double>{50, 200.0 / 3.0, 250.0 / 3.0, 100});
}

TEST_CASE("averaged cmc against the brute-force protocol") {
  ssdal::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto data = oracle::random_probe_gallery(rng, 20);
    SplitProtocol protocol;
    protocol.num_tests = 1 + rng.index(4);
    protocol.probe_size = rng.index(data.probe.size() + 1);
    protocol.seed = rng.next();
    protocol.distance = trial % 2 ? Distance::cosine : Distance::squared_euclidean;
    const CmcCurve got = averaged_cmc(data, protocol);
    CHECK(got.scores == oracle::averaged_cmc(data, protocol));
    CHECK(monotone(got));
  }
}

TEST_CASE("averaged cmc needs enough identities") {
  ssdal::Rng rng(6);
  const auto data = oracle::random_probe_gallery(rng, 10);
  SplitProtocol protocol;
  protocol.probe_size = data.probe.size() + 1;
  CHECK(kind_of([&] { averaged_cmc(data, protocol); }) == ErrorKind::data);
  protocol.num_tests = 0;
  CHECK(kind_of([&] { averaged_cmc(data, protocol); }) == ErrorKind::config);
}

TEST_CASE("average precision examples") {
  // Relevant at ranks 1 and 3 of 4.
  const MapResult one = mean_average_precision({{0, 1, 2, 3}}, {{0, 2}});
  CHECK(one.map_percent / 100.0 == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
  CHECK(std::abs(one.map_percent / 100.0 - 0.8333333333) < 1e-9);
  CHECK(one.rank1_percent == 100);
  const MapResult all_first = mean_average_precision({{3, 1, 0, 2}, {2, 0, 1}}, {{3, 1}, {2}});
  CHECK(all_first.map_percent == 100);
  CHECK(kind_of([] { mean_average_precision({{0, 1}}, {{}}); }) == ErrorKind::data);
}

TEST_CASE("mAP against the oracle, invariant under query order") {
  ssdal::Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t queries = 1 + rng.index(5), gallery = 1 + rng.index(20);
    std::vector<Ranking> rankings;
    std::vector<std::set<std::size_t>> relevant;
    for (std::size_t q = 0; q < queries; ++q) {
      Ranking r(gallery);
      std::iota(r.begin(), r.end(), 0);
      rng.shuffle(r);
      std::set<std::size_t> rel{rng.index(gallery)};
      for (std::size_t g = 0; g < gallery; ++g) {
        if (rng.bernoulli(0.3)) rel.insert(g);
      }
      rankings.push_back(r);
      relevant.push_back(rel);
    }
    const MapResult got = mean_average_precision(rankings, relevant);
    const auto want = oracle::mean_average_precision(rankings, relevant);
    CHECK(got.map_percent == want.map_percent);
    CHECK(got.rank1_percent == want.rank1_percent);

    std::reverse(rankings.begin(), rankings.end());
    std::reverse(relevant.begin(), relevant.end());
    CHECK(mean_average_precision(rankings, relevant).map_percent ==
          doctest::Approx(got.map_percent).epsilon(1e-12));
  }
}

TEST_CASE("rank-1 from mAP equals CMC rank 1 on the same rankings") {
  ssdal::Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto data = oracle::random_probe_gallery(rng, 20);
    std::vector<Ranking> rankings;
    std::vector<std::set<std::size_t>> relevant;
    for (std::size_t q = 0; q < data.probe.size(); ++q) {
      rankings.push_back(rank_gallery(data.probe.features.row(q), data.gallery.features,
                                      Distance::cosine));
      std::set<std::size_t> rel;
      for (std::size_t g = 0; g < data.gallery.size(); ++g) {
        if (data.gallery.person_ids[g] == data.probe.person_ids[q]) rel.insert(g);
      }
      relevant.push_back(rel);
    }
    const CmcCurve curve = cmc(rankings, data.probe.person_ids, data.gallery.person_ids);
    CHECK(mean_average_precision(rankings, relevant).rank1_percent == curve.at_rank(1));
  }
}

TEST_CASE("tracklet pooling") {
  const Matrix single = Matrix::from_rows({{3, -1}});
  CHECK(pool_tracklet(single, PoolMode::avg) == std::vector<double>{3, -1});
  CHECK(pool_tracklet(single, PoolMode::max) == std::vector<double>{3, -1});
  const Matrix two = Matrix::from_rows({{0, 2}, {2, 0}});
  CHECK(pool_tracklet(two, PoolMode::avg) == std::vector<double>{1, 1});
  CHECK(pool_tracklet(two, PoolMode::max) == std::vector<double>{2, 2});
  CHECK(kind_of([] { pool_tracklet(Matrix(0, 2), PoolMode::avg); }) == ErrorKind::data);
}

TEST_CASE("multi-query retrieval equals ranking precomputed pooled features") {
  ssdal::Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    // Three people, two frames each in camera 0; gallery in camera 1.
    const Matrix q = testing::random_matrix(rng, 6, 4);
    const IdSet queries = id_set(q, {0, 0, 1, 1, 2, 2}, {0, 0, 0, 0, 0, 0});
    const IdSet gallery =
        id_set(testing::random_matrix(rng, 5, 4), {0, 1, 2, 1, 0}, {1, 1, 1, 1, 1});
    for (auto [mode, pool] : {std::pair{QueryMode::multi_avg, PoolMode::avg},
                              std::pair{QueryMode::multi_max, PoolMode::max}}) {
      Matrix pooled(3, 4);
      for (std::size_t p = 0; p < 3; ++p) {
        const std::vector<std::size_t> rows{2 * p, 2 * p + 1};
        const auto v = pool_tracklet(q.select_rows(rows), pool);
        std::copy(v.begin(), v.end(), pooled.row(p).begin());
      }
      const MapResult direct = evaluate_retrieval(queries, gallery, mode);
      const MapResult precomputed =
          evaluate_retrieval(id_set(pooled, {0, 1, 2}, {0, 0, 0}), gallery, QueryMode::single);
      CHECK(direct.map_percent == precomputed.map_percent);
      CHECK(direct.rank1_percent == precomputed.rank1_percent);
      CHECK(direct.mode == mode);
    }
  }
}

TEST_CASE("same-camera matches are dropped unless disabled") {
  // Query 0 in camera 0; the gallery copy in camera 0 would rank first.
  const IdSet queries = id_set(Matrix::from_rows({{1, 0}}), {0}, {0});
  const IdSet gallery = id_set(Matrix::from_rows({{1, 0}, {0, 1}, {0.9, 0.5}}), {0, 1, 0}, {0, 1, 1});
  const MapResult excluded = evaluate_retrieval(queries, gallery, QueryMode::single);
  CHECK(excluded.map_percent == 100);  // only item 2 is relevant and it ranks first
  RetrievalOptions keep;
  keep.exclude_same_camera = false;
  CHECK(evaluate_retrieval(queries, gallery, QueryMode::single, keep).map_percent == 100);
  const IdSet lonely = id_set(Matrix::from_rows({{1, 0}, {0, 1}}), {0, 1}, {0, 1});
  CHECK(kind_of([&] { evaluate_retrieval(queries, lonely, QueryMode::single); }) ==
        ErrorKind::data);
}

TEST_CASE("aggregate attribute accuracy") {
  ssdal::Rng rng(10);
  std::vector<AttributeVector> labels;
  Matrix perfect(20, 9), adversarial(20, 9);
  for (std::size_t n = 0; n < 20; ++n) {
    AttributeVector l = testing::random_bits(rng, 9, 0.25);
    while (l.count() == 0 || l.count() >= 4) l = testing::random_bits(rng, 9, 0.25);
    for (std::size_t k = 0; k < 9; ++k) {
      perfect(n, k) = l[k] ? 1.0 : 0.0;
      adversarial(n, k) = l[k] ? 0.0 : 1.0;
    }
    labels.push_back(l);
  }
  CHECK(aggregate_attribute_accuracy(perfect, labels) == 100.0);
  CHECK(aggregate_attribute_accuracy(adversarial, labels) == 0.0);

  const Matrix scores = testing::random_matrix(rng, 20, 9);
  double streaming = 0.0;
  for (std::size_t n = 0; n < 20; ++n) {
    const std::vector<double> row(scores.row(n).begin(), scores.row(n).end());
    streaming += oracle::attribute_accuracy(row, labels[n]);
  }
  CHECK(aggregate_attribute_accuracy(scores, labels) ==
        doctest::Approx(100.0 * streaming / 20.0).epsilon(1e-12));
  labels[3] = AttributeVector(9);
  CHECK(kind_of([&] { aggregate_attribute_accuracy(scores, labels); }) == ErrorKind::data);
}

}
