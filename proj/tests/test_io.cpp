#include <sstream>

#include "doctest.h"
#include "ssdal/error.hpp"
#include "ssdal/io.hpp"
#include "ssdal/run_config.hpp"
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

std::string path_in(const std::filesystem::path& dir, const char* name) {
  return (dir / name).string();
}

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return RunConfig::parse(in);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("feature csv round trip keeps every bit") {
  const auto dir = testing::scratch_dir("io_features");
  Rng rng(4);
  FeatureTable table;
  table.sample_ids = {"a", "b", "c"};
  table.camera_ids = {0, 1, 1};
  table.person_ids = {5, -1, 7};
  table.features = testing::random_matrix(rng, 3, 4);
  table.features(1, 2) = 1e-300;
  table.features(2, 3) = -0.1;
  write_features_csv(path_in(dir, "f.csv"), table);
  const auto back = read_features_csv(path_in(dir, "f.csv"));
  CHECK(back.sample_ids == table.sample_ids);
  CHECK(back.camera_ids == table.camera_ids);
  CHECK(back.person_ids == table.person_ids);
  CHECK(back.features == table.features);

  write_features_csv(path_in(dir, "g.csv"), back);
  CHECK(testing::read_file(dir / "f.csv") == testing::read_file(dir / "g.csv"));
  CHECK(testing::read_file(dir / "f.csv").rfind("sample_id,camera_id,person_id,f0,f1,f2,f3\n", 0) ==
        0);
}

TEST_CASE("attribute csv round trip") {
  const auto dir = testing::scratch_dir("io_attributes");
  AttributeTable table;
  table.sample_ids = {"x1", "x2"};
  table.rows = {AttributeVector(std::vector<std::uint8_t>{1, 0, 1}),
                AttributeVector(std::vector<std::uint8_t>{0, 0, 0})};
  write_attributes_csv(path_in(dir, "a.csv"), table);
  CHECK(testing::read_file(dir / "a.csv") == "sample_id,a0,a1,a2\nx1,1,0,1\nx2,0,0,0\n");
  const auto back = read_attributes_csv(path_in(dir, "a.csv"));
  CHECK(back.sample_ids == table.sample_ids);
  CHECK(back.rows == table.rows);
}

TEST_CASE("malformed csv files") {
  const auto dir = testing::scratch_dir("io_bad");
  auto write = [&](const char* name, const std::string& text) {
    testing::write_file(dir / name, text);
    return path_in(dir, name);
  };
  CHECK(kind_of([&] { read_features_csv(path_in(dir, "missing.csv")); }) == ErrorKind::io);
  CHECK(kind_of([&] { read_features_csv(write("empty.csv", "")); }) == ErrorKind::data);
  CHECK(kind_of([&] { read_features_csv(write("h1.csv", "id,camera_id,person_id,f0\n")); }) ==
        ErrorKind::data);
  CHECK(kind_of([&] {
          read_features_csv(write("h2.csv", "sample_id,camera_id,person_id,f1\n"));
        }) == ErrorKind::data);
  CHECK(kind_of([&] { read_features_csv(write("h3.csv", "sample_id,camera_id,person_id\n")); }) ==
        ErrorKind::data);
  CHECK(kind_of([&] {
          read_features_csv(write("r1.csv", "sample_id,camera_id,person_id,f0,f1\na,0,1,2\n"));
        }) == ErrorKind::data);
  CHECK(kind_of([&] {
          read_features_csv(write("r2.csv", "sample_id,camera_id,person_id,f0\na,0,1,zz\n"));
        }) == ErrorKind::data);
  CHECK(kind_of([&] {
          read_features_csv(write("r3.csv", "sample_id,camera_id,person_id,f0\na,0,1,nan\n"));
        }) == ErrorKind::data);
  CHECK(kind_of([&] { read_attributes_csv(write("a1.csv", "sample_id,a0\na,2\n")); }) ==
        ErrorKind::data);
  CHECK(kind_of([&] { read_attributes_csv(write("a2.csv", "sample_id,a1\na,1\n")); }) ==
        ErrorKind::data);
  CHECK(kind_of([&] { read_attributes_csv(write("a3.csv", "sample_id\n")); }) == ErrorKind::data);
}

TEST_CASE("feature and attribute rows are joined by sample id") {
  FeatureTable f;
  f.sample_ids = {"s0", "s1"};
  f.camera_ids = {0, 1};
  f.person_ids = {3, 4};
  f.features = Matrix(2, 2, {1, 2, 3, 4});
  AttributeTable a;
  a.sample_ids = {"s1", "s0"};
  a.rows = {AttributeVector(std::vector<std::uint8_t>{0, 1}),
            AttributeVector(std::vector<std::uint8_t>{1, 0})};
  const auto set = to_labeled_set(f, a);
  CHECK(set.labels[0] == a.rows[1]);
  CHECK(set.labels[1] == a.rows[0]);

  a.sample_ids[0] = "other";
  CHECK(kind_of([&] { to_labeled_set(f, a); }) == ErrorKind::data);
  a.sample_ids.pop_back();
  a.rows.pop_back();
  CHECK(kind_of([&] { to_labeled_set(f, a); }) == ErrorKind::data);

  f.person_ids[1] = -1;
  CHECK(kind_of([&] { to_id_set(f); }) == ErrorKind::data);
}

TEST_CASE("config parsing") {
  const auto cfg = parse("# comment\n data_dir = /tmp/x \n\np = 7\nnet.hidden = 8, 4\n");
  CHECK(cfg.get_string("data_dir") == "/tmp/x");
  CHECK(cfg.get_uint("p") == 7);
  CHECK(cfg.get_sizes("net.hidden") == std::vector<std::size_t>{8, 4});
  CHECK(cfg.get_real("loss.gamma") == 0.01);
  CHECK(cfg.effective().at("p") == "7");
  CHECK(cfg.effective().size() == RunConfig::known_keys().size() - 2);

  CHECK(kind_of([] { parse("bogus = 1\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse("p = 1\np = 2\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse("just text\n"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse("p = seven\n").get_uint("p"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse("p = -1\n").get_uint("p"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse("").get_string("data_dir"); }) == ErrorKind::config);
  CHECK(kind_of([] { parse("report.include_timing = maybe\n").get_bool("report.include_timing"); }) ==
        ErrorKind::config);
  CHECK(kind_of([] { RunConfig::load("/nonexistent/run.cfg"); }) == ErrorKind::config);
  CHECK(kind_of([] { pipeline_config(parse("stage1.trainable = 1,2\n"), 4, 3); }) ==
        ErrorKind::config);
}

TEST_CASE("json output is key ordered and stable") {
  Json j = {{"zeta", 1}, {"alpha", {{"b", 2}, {"a", 0.1}}}};
  CHECK(dump_json(j) == "{\n  \"alpha\": {\n    \"a\": 0.1,\n    \"b\": 2\n  },\n  \"zeta\": 1\n}\n");

  PipelineReport report;
  report.stages["stage2"] = {1.5, 0.5, {1.0, 0.5}, "abc", 3.25};
  report.stages["stage1"] = {2.0, 1.0, {1.0}, "def", 1.0};
  report.metrics["merged_size"] = 12;
  const auto plain = to_json(report, false);
  CHECK_FALSE(plain["stages"]["stage1"].contains("wall_seconds"));
  CHECK(plain["stages"].begin().key() == "stage1");
  CHECK(plain["stages"]["stage2"]["loss_trace"] == Json::array({1.0, 0.5}));
  CHECK(to_json(report, true)["stages"]["stage2"]["wall_seconds"] == 3.25);

  CmcCurve curve{{40, 60, 80, 90, 100}};
  const auto c = to_json(curve);
  CHECK(c["rank1"] == 40.0);
  CHECK(c["rank5"] == 100.0);
  CHECK_FALSE(c.contains("rank10"));
}

TEST_CASE("csv writers for results") {
  const auto dir = testing::scratch_dir("io_results");
  write_cmc_csv(path_in(dir, "c.csv"), CmcCurve{{50, 100}});
  CHECK(testing::read_file(dir / "c.csv") == "rank,score\n1,50\n2,100\n");
  write_metrics_csv(path_in(dir, "m.csv"), {{"map", 0.1}, {"rank1", 2.5}});
  CHECK(testing::read_file(dir / "m.csv") == "metric,value\nmap,0.10000000000000001\nrank1,2.5\n");
  CHECK(format_real(1.0 / 3.0) == "0.33333333333333331");
  CHECK(kind_of([&] { write_text_file(path_in(dir, "no/such/dir.txt"), "x"); }) == ErrorKind::io);
  ensure_directory(path_in(dir, "made/deeper"));
  CHECK(std::filesystem::is_directory(dir / "made" / "deeper"));
}

}  // TEST_SUITE
