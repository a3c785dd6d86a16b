#include "ssdal/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ssdal/error.hpp"

namespace ssdal {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && end == text.data() + text.size(), ErrorKind::data,
          "bad number '" + text + "' in " + where);
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path + "'");
  return in;
}

void expect_header(const std::vector<std::string>& header, std::size_t fixed,
                   const std::vector<std::string>& leading, char prefix, const std::string& path) {
  require(header.size() >= fixed, ErrorKind::data, "short header in '" + path + "'");
  for (std::size_t i = 0; i < leading.size(); ++i) {
    require(header[i] == leading[i], ErrorKind::data,
            "expected column '" + leading[i] + "' in '" + path + "', found '" + header[i] + "'");
  }
  for (std::size_t i = fixed; i < header.size(); ++i) {
    const std::string want = prefix + std::to_string(i - fixed);
    require(header[i] == want, ErrorKind::data,
            "expected column '" + want + "' in '" + path + "', found '" + header[i] + "'");
  }
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::io, "failed writing '" + path + "'");
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  require(!ec && std::filesystem::is_directory(path), ErrorKind::io,
          "cannot create directory '" + path + "'");
}

std::vector<std::string> default_sample_ids(std::size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::to_string(i));
  return out;
}

FeatureTable read_features_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::data, "'" + path + "' is empty");
  const auto header = split_csv(strip_cr(line));
  expect_header(header, 3, {"sample_id", "camera_id", "person_id"}, 'f', path);
  const std::size_t dim = header.size() - 3;
  require(dim >= 1, ErrorKind::data, "'" + path + "' has no feature columns");

  FeatureTable table;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path + ":" + std::to_string(line_no);
    require(fields.size() == header.size(), ErrorKind::data, "wrong field count at " + where);
    table.sample_ids.push_back(fields[0]);
    table.camera_ids.push_back(parse_number<std::int64_t>(fields[1], where));
    table.person_ids.push_back(parse_number<std::int64_t>(fields[2], where));
    for (std::size_t i = 3; i < fields.size(); ++i) {
      values.push_back(parse_number<double>(fields[i], where));
    }
  }
  table.features = Matrix(table.sample_ids.size(), dim, std::move(values));
  require(table.features.all_finite(), ErrorKind::data, "non-finite feature in '" + path + "'");
  return table;
}

void write_features_csv(const std::string& path, const FeatureTable& table) {
  std::ostringstream out;
  out << "sample_id,camera_id,person_id";
  for (std::size_t i = 0; i < table.features.cols(); ++i) out << ",f" << i;
  out << '\n';
  for (std::size_t n = 0; n < table.features.rows(); ++n) {
    out << table.sample_ids[n] << ',' << table.camera_ids[n] << ',' << table.person_ids[n];
    for (double v : table.features.row(n)) out << ',' << format_real(v);
    out << '\n';
  }
  write_text_file(path, out.str());
}

AttributeTable read_attributes_csv(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::data, "'" + path + "' is empty");
  const auto header = split_csv(strip_cr(line));
  expect_header(header, 1, {"sample_id"}, 'a', path);
  const std::size_t k = header.size() - 1;
  require(k >= 1, ErrorKind::data, "'" + path + "' has no attribute columns");

  AttributeTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path + ":" + std::to_string(line_no);
    require(fields.size() == header.size(), ErrorKind::data, "wrong field count at " + where);
    std::vector<std::uint8_t> bits(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto bit = parse_number<int>(fields[i + 1], where);
      require(bit == 0 || bit == 1, ErrorKind::data, "non-binary attribute at " + where);
      bits[i] = static_cast<std::uint8_t>(bit);
    }
    table.sample_ids.push_back(fields[0]);
    table.rows.emplace_back(std::move(bits));
  }
  return table;
}

void write_attributes_csv(const std::string& path, const AttributeTable& table) {
  require(table.sample_ids.size() == table.rows.size(), ErrorKind::shape,
          "attribute table sample id count mismatch");
  std::ostringstream out;
  out << "sample_id";
  const std::size_t k = table.rows.empty() ? 0 : table.rows.front().size();
  for (std::size_t i = 0; i < k; ++i) out << ",a" << i;
  out << '\n';
  for (std::size_t n = 0; n < table.rows.size(); ++n) {
    out << table.sample_ids[n];
    for (auto b : table.rows[n].bits()) out << ',' << static_cast<int>(b);
    out << '\n';
  }
  write_text_file(path, out.str());
}

FeatureTable to_feature_table(const IdSet& set) {
  set.validate();
  return {default_sample_ids(set.size()), set.camera_ids, set.person_ids, set.features};
}

FeatureTable to_feature_table(const LabeledSet& set) {
  set.validate();
  const std::size_t n = set.size();
  FeatureTable table{default_sample_ids(n), set.camera_ids, set.person_ids, set.features};
  if (table.camera_ids.empty()) table.camera_ids.assign(n, 0);
  if (table.person_ids.empty()) table.person_ids.assign(n, -1);
  return table;
}

IdSet to_id_set(const FeatureTable& table) {
  IdSet set{table.features, table.person_ids, table.camera_ids};
  for (std::size_t i = 0; i < set.person_ids.size(); ++i) {
    require(set.person_ids[i] >= 0, ErrorKind::data,
            "sample '" + table.sample_ids[i] + "' has no person id");
  }
  set.validate();
  return set;
}

LabeledSet to_labeled_set(const FeatureTable& features, const AttributeTable& attributes) {
  require(features.sample_ids.size() == attributes.sample_ids.size(), ErrorKind::data,
          "feature and attribute files differ in row count");
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < attributes.sample_ids.size(); ++i) {
    position[attributes.sample_ids[i]] = i;
  }
  LabeledSet set;
  set.features = features.features;
  set.person_ids = features.person_ids;
  set.camera_ids = features.camera_ids;
  for (const auto& id : features.sample_ids) {
    const auto it = position.find(id);
    require(it != position.end(), ErrorKind::data,
            "sample '" + id + "' has no attribute row");
    set.labels.push_back(attributes.rows[it->second]);
  }
  set.validate();
  return set;
}

void write_cmc_csv(const std::string& path, const CmcCurve& curve) {
  std::ostringstream out;
  out << "rank,score\n";
  for (std::size_t r = 0; r < curve.scores.size(); ++r) {
    out << r + 1 << ',' << format_real(curve.scores[r]) << '\n';
  }
  write_text_file(path, out.str());
}

void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, double>>& metrics) {
  std::ostringstream out;
  out << "metric,value\n";
  for (const auto& [name, value] : metrics) out << name << ',' << format_real(value) << '\n';
  write_text_file(path, out.str());
}

std::string dump_json(const Json& value) { return value.dump(2) + "\n"; }

void write_json(const std::string& path, const Json& value) {
  write_text_file(path, dump_json(value));
}

Json to_json(const PipelineReport& report, bool include_timing) {
  Json stages = Json::object();
  for (const auto& [name, stage] : report.stages) {
    Json entry = {{"checkpoint", stage.checkpoint},
                  {"final_loss", stage.final_loss},
                  {"initial_loss", stage.initial_loss},
                  {"loss_trace", stage.loss_trace}};
    if (include_timing) entry["wall_seconds"] = stage.wall_seconds;
    stages[name] = std::move(entry);
  }
  Json metrics = Json::object();
  for (const auto& [name, value] : report.metrics) metrics[name] = value;
  return {{"metrics", metrics}, {"stages", stages}};
}

Json to_json(const CmcCurve& curve) {
  Json out = {{"curve", curve.scores}};
  for (std::size_t r : {1u, 5u, 10u, 20u}) {
    if (r <= curve.scores.size()) out["rank" + std::to_string(r)] = curve.at_rank(r);
  }
  return out;
}

Json to_json(const MapResult& result) {
  return {{"map", result.map_percent},
          {"mode", std::string(to_string(result.mode))},
          {"rank1", result.rank1_percent}};
}

}  // namespace ssdal
