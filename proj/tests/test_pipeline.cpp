#include <cmath>
#include <limits>

#include "doctest.h"
#include "ssdal/error.hpp"
#include "ssdal/pipeline.hpp"
#include "ssdal/run_config.hpp"
#include "ssdal/synth.hpp"
#include "support.hpp"

using namespace ssdal;

namespace {

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an ssdal::Error");
  return ErrorKind::io;
}

struct World {
  RunConfig config;
  LabeledSet t;
  IdSet u;
  PipelineConfig pipeline;
};

RunConfig small_config(std::uint64_t seed) {
  RunConfig rc;
  rc.set("synth.seed", std::to_string(seed));
  rc.set("synth.labeled_identities", "10");
  rc.set("synth.id_identities", "12");
  rc.set("synth.test_identities", "8");
  rc.set("synth.attributes", "12");
  rc.set("synth.feature_dim", "16");
  rc.set("synth.mean_positive_attributes", "5");
  rc.set("net.hidden", "16");
  rc.set("p", "4");
  rc.set("stage1.epochs", "15");
  rc.set("stage2.epochs", "3");
  rc.set("stage2.triplets", "32");
  rc.set("stage3.epochs", "3");
  rc.set("baseline.epochs", "3");
  rc.set("baseline.triplets", "32");
  return rc;
}

World small_world(std::uint64_t seed = 3) {
  World w;
  w.config = small_config(seed);
  const auto sc = synth_config(w.config);
  const auto split = world_split(w.config);
  const auto world = generate_world(sc);
  w.t = emit_labeled_set(world, split.labeled_ids());
  w.u = emit_id_set(world, split.id_only_ids());
  w.pipeline = pipeline_config(w.config, sc.feature_dim, sc.attribute_count);
  return w;
}

// Mean squared distance between current scores and the frozen initial labels.
double drift(const NetworkParams& model, const IdSet& u, const InitialLabels& initial) {
  const auto scores = forward(model, u.features).scores();
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    total += squared_euclidean(scores.row(i), initial.labels[i].as_reals());
  }
  return total / static_cast<double>(u.size());
}

NetworkParams zero_network(std::vector<std::size_t> sizes) {
  auto net = testing::small_network(std::move(sizes), 1);
  for (auto& layer : net.layers) {
    for (double& v : layer.weight.values()) v = 0.0;
    for (double& b : layer.bias) b = 0.0;
  }
  return net;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("stage 1 overfits a single sample") {
  LabeledSet t;
  t.features = Matrix(1, 5, {0.5, -1.0, 0.25, 2.0, -0.75});
  t.labels = {AttributeVector(std::vector<std::uint8_t>{1, 0, 0, 1, 1, 0})};
  t.person_ids = {0};
  t.camera_ids = {0};
  NetworkConfig net{{5, 8, 6}, Activation::tanh, 4};
  StageConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.5;
  const auto result = stage1_train(t, cfg, net);
  const auto logits = forward(result.model, t.features).logits();
  CHECK(binarize_threshold(logits.row(0), 0.0) == t.labels[0]);
  CHECK(attribute_accuracy(logits.row(0), t.labels[0]) == 1.0);
  CHECK(result.final_loss() < 0.05);
  CHECK(result.loss_trace.size() == 300);
}

TEST_CASE("stage 1 validation and determinism") {
  auto w = small_world();
  auto cfg = w.pipeline.stage1;

  const auto a = stage1_train(w.t, cfg, w.pipeline.network);
  const auto b = stage1_train(w.t, cfg, w.pipeline.network);
  CHECK(a.model == b.model);
  CHECK(a.loss_trace == b.loss_trace);
  double lowest = a.initial_loss;
  for (double l : a.loss_trace) lowest = std::min(lowest, l);
  CHECK(lowest <= a.initial_loss);
  CHECK(a.final_loss() < a.initial_loss);

  auto zero = cfg;
  zero.epochs = 0;
  CHECK(kind_of([&] { stage1_train(w.t, zero, w.pipeline.network); }) == ErrorKind::config);

  LabeledSet empty;
  empty.features = Matrix(0, w.t.features.cols());
  CHECK(kind_of([&] { stage1_train(empty, cfg, w.pipeline.network); }) == ErrorKind::data);

  auto wrong = w.pipeline.network;
  wrong.layer_sizes.front() += 1;
  CHECK(kind_of([&] { stage1_train(w.t, cfg, wrong); }) == ErrorKind::shape);
  wrong = w.pipeline.network;
  wrong.layer_sizes.back() += 1;
  CHECK(kind_of([&] { stage1_train(w.t, cfg, wrong); }) == ErrorKind::shape);
}

TEST_CASE("initial labels carry exactly p ones") {
  Rng rng(8);
  const auto net = testing::small_network({7, 9, 11}, 2);
  const auto x = testing::random_matrix(rng, 25, 7);
  for (std::size_t p : {1u, 3u, 11u}) {
    const auto labels = predict_initial_labels(net, x, p);
    REQUIRE(labels.labels.size() == 25);
    for (const auto& v : labels.labels) CHECK(v.count() == p);
  }
  for (const auto& v : predict_initial_labels(net, x, 11).labels) {
    for (std::size_t k = 0; k < 11; ++k) CHECK(v[k]);
  }
  CHECK(kind_of([&] { predict_initial_labels(net, x, 0); }) == ErrorKind::validation);
  CHECK(kind_of([&] { predict_initial_labels(net, x, 12); }) == ErrorKind::validation);
  const auto narrow = testing::random_matrix(rng, 3, 6);
  CHECK(kind_of([&] { predict_initial_labels(net, narrow, 3); }) == ErrorKind::shape);
}

TEST_CASE("tied logits pick the lowest indices") {
  const auto net = zero_network({4, 3, 6});
  const Matrix x(2, 4, {1, 2, 3, 4, -1, 0, 5, 2});
  for (const auto& v : predict_initial_labels(net, x, 2).labels) {
    CHECK(v == AttributeVector(std::vector<std::uint8_t>{1, 1, 0, 0, 0, 0}));
  }
}

TEST_CASE("stage 2 drift term dominates at large gamma") {
  RunConfig rc;
  rc.set("synth.seed", "1");
  const auto sc = synth_config(rc);
  const auto split = world_split(rc);
  const auto world = generate_world(sc);
  const auto t = emit_labeled_set(world, split.labeled_ids());
  const auto u = emit_id_set(world, split.id_only_ids());
  const auto pc = pipeline_config(rc, sc.feature_dim, sc.attribute_count);
  const auto s1 = stage1_train(t, pc.stage1, pc.network);
  const auto initial = predict_initial_labels(s1.model, u.features, pc.stage2.p);
  const double start = drift(s1.model, u, initial);

  auto small = pc.stage2;
  small.loss.gamma = 0.01;
  auto large = pc.stage2;
  large.loss.gamma = 1e6;
  large.learning_rate = 5e-10;
  const double small_drift = drift(stage2_finetune(s1.model, u, initial, small).model, u, initial);
  const double large_drift = drift(stage2_finetune(s1.model, u, initial, large).model, u, initial);
  MESSAGE("drift start " << start << " gamma=0.01 " << small_drift << " gamma=1e6 "
                         << large_drift);
  CHECK(large_drift < start);
  CHECK(small_drift > start);
  CHECK(large_drift < 0.5 * small_drift);
}

TEST_CASE("stage 2 validation and determinism") {
  auto w = small_world();
  const auto s1 = stage1_train(w.t, w.pipeline.stage1, w.pipeline.network);
  const auto initial = predict_initial_labels(s1.model, w.u.features, w.pipeline.stage2.p);
  const auto a = stage2_finetune(s1.model, w.u, initial, w.pipeline.stage2);
  const auto b = stage2_finetune(s1.model, w.u, initial, w.pipeline.stage2);
  CHECK(a.model == b.model);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.loss_trace.size() == w.pipeline.stage2.epochs);

  auto single = w.u;
  for (auto& id : single.person_ids) id = 7;
  CHECK(kind_of([&] { stage2_finetune(s1.model, single, initial, w.pipeline.stage2); }) ==
        ErrorKind::data);

  InitialLabels short_labels = initial;
  short_labels.labels.pop_back();
  CHECK(kind_of([&] { stage2_finetune(s1.model, w.u, short_labels, w.pipeline.stage2); }) ==
        ErrorKind::data);
}

TEST_CASE("stage 3 with an empty id set is plain cross-entropy on T") {
  auto w = small_world();
  const auto s1 = stage1_train(w.t, w.pipeline.stage1, w.pipeline.network);
  IdSet empty;
  empty.features = Matrix(0, w.t.features.cols());
  const auto merged = stage3_combine(s1.model, w.t, empty, w.pipeline.stage3);
  const auto direct =
      train_cross_entropy(s1.model, w.t.features, w.t.label_matrix(), w.pipeline.stage3);
  CHECK(merged.merged_size == w.t.size());
  CHECK(merged.pseudo_labels.empty());
  CHECK(merged.stage.model == direct.model);
  CHECK(merged.stage.loss_trace == direct.loss_trace);
}

TEST_CASE("merged set keeps T labels and appends top-p pseudo-labels") {
  auto w = small_world();
  const auto s1 = stage1_train(w.t, w.pipeline.stage1, w.pipeline.network);
  const std::size_t p = w.pipeline.stage3.p;
  const auto merged = merge_datasets(s1.model, w.t, w.u, p);
  REQUIRE(merged.features.rows() == w.t.size() + w.u.size());
  REQUIRE(merged.pseudo_labels.size() == w.u.size());
  const auto t_targets = w.t.label_matrix();
  for (std::size_t n = 0; n < w.t.size(); ++n) {
    for (std::size_t k = 0; k < t_targets.cols(); ++k) {
      CHECK(merged.targets(n, k) == t_targets(n, k));
    }
  }
  const auto expected = predict_initial_labels(s1.model, w.u.features, p);
  for (std::size_t m = 0; m < w.u.size(); ++m) {
    CHECK(merged.pseudo_labels[m].count() == p);
    CHECK(merged.pseudo_labels[m] == expected.labels[m]);
    for (std::size_t k = 0; k < t_targets.cols(); ++k) {
      CHECK(merged.targets(w.t.size() + m, k) == (expected.labels[m][k] ? 1.0 : 0.0));
    }
  }
  CHECK(merged.features.row(w.t.size())[0] == w.u.features(0, 0));

  LabeledSet wide = w.t;
  for (auto& label : wide.labels) {
    std::vector<std::uint8_t> bits(label.size() + 1, 0);
    bits[0] = 1;
    label = AttributeVector(std::move(bits));
  }
  CHECK(kind_of([&] { stage3_combine(s1.model, wide, w.u, w.pipeline.stage3); }) ==
        ErrorKind::shape);
}

TEST_CASE("deep attributes threshold logits strictly") {
  const auto zero = zero_network({3, 4, 5});
  const Matrix x(3, 3, {1, 2, 3, -4, 5, 0.5, 0, 0, 0});
  for (const auto& v : predict_deep_attributes(zero, x, 0.0)) CHECK(v.count() == 0);
  for (const auto& v : predict_deep_attributes(zero, x, std::numeric_limits<double>::lowest())) {
    CHECK(v.count() == 5);
  }

  Rng rng(12);
  const auto net = testing::small_network({6, 10, 8}, 9);
  const auto features = testing::random_matrix(rng, 20, 6);
  const auto logits = forward(net, features).logits();
  for (double tau : {-0.3, 0.0, 0.4}) {
    const auto attrs = predict_deep_attributes(net, features, tau);
    const auto matrix = deep_attribute_features(net, features, tau);
    for (std::size_t n = 0; n < 20; ++n) {
      for (std::size_t k = 0; k < 8; ++k) {
        CHECK(attrs[n][k] == (logits(n, k) > tau));
        CHECK(matrix(n, k) == (logits(n, k) > tau ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("embedding baseline trains the penultimate layer only") {
  auto w = small_world();
  const auto s1 = stage1_train(w.t, w.pipeline.stage1, w.pipeline.network);
  const auto cfg = baseline_config(w.config);
  const auto result = embedding_triplet_baseline(s1.model, w.u, cfg);
  CHECK(result.model.layers.back() == s1.model.layers.back());
  CHECK_FALSE(result.model.layers.front() == s1.model.layers.front());
  CHECK(result.loss_trace.size() == cfg.epochs);

  auto none = cfg;
  none.triplets_per_epoch = 0;
  CHECK(embedding_triplet_baseline(s1.model, w.u, none).model == s1.model);

  const auto flat = testing::small_network({16, 12}, 2);
  CHECK(kind_of([&] { embedding_triplet_baseline(flat, w.u, cfg); }) == ErrorKind::config);
  CHECK(kind_of([&] { penultimate_features(flat, w.u.features); }) == ErrorKind::config);

  const auto emb = penultimate_features(s1.model, w.u.features);
  CHECK(emb.rows() == w.u.size());
  CHECK(emb.cols() == 16);
}

TEST_CASE("embedding baseline is already closed on separated identical samples") {
  // Every sample of an id shares one feature vector; ids sit far apart.
  IdSet u;
  std::vector<double> values;
  for (std::int64_t id = 0; id < 4; ++id) {
    for (int s = 0; s < 3; ++s) {
      for (int j = 0; j < 4; ++j) values.push_back(j == id ? 3.0 : -3.0);
      u.person_ids.push_back(id);
      u.camera_ids.push_back(s % 2);
    }
  }
  u.features = Matrix(12, 4, std::move(values));
  const auto net = testing::small_network({4, 6, 5}, 21);
  StageConfig cfg;
  cfg.epochs = 2;
  cfg.triplets_per_epoch = 12;
  cfg.batch_size = 4;
  cfg.p = 2;
  cfg.loss.theta = 1e-3;
  const auto result = embedding_triplet_baseline(net, u, cfg);
  CHECK(result.initial_loss == 0.0);
  CHECK(result.final_loss() == 0.0);
  CHECK(result.model == net);
}

TEST_CASE("run_pipeline equals the stages run one after another") {
  auto w = small_world(5);
  const auto all = run_pipeline(w.t, w.u, w.pipeline);

  const auto s1 = stage1_train(w.t, w.pipeline.stage1, w.pipeline.network);
  const auto initial = predict_initial_labels(s1.model, w.u.features, w.pipeline.stage2.p);
  const auto s2 = stage2_finetune(s1.model, w.u, initial, w.pipeline.stage2);
  const auto s3 = stage3_combine(s2.model, w.t, w.u, w.pipeline.stage3);

  CHECK(all.stage1_model == s1.model);
  CHECK(all.stage2_model == s2.model);
  CHECK(all.final_model == s3.stage.model);
  CHECK(all.pseudo_labels == s3.pseudo_labels);
  CHECK(all.report.metrics.at("merged_size") == w.t.size() + w.u.size());
  CHECK(all.report.stages.at("stage3").checkpoint == checkpoint_digest(s3.stage.model));
  for (const auto& [name, stage] : all.report.stages) {
    CHECK(std::isfinite(stage.final_loss));
    CHECK(stage.final_loss >= 0.0);
  }
}

}  // TEST_SUITE
