// Text checkpoint:
//   SSDAL-MODEL 1
//   <layer count>
//   per layer: "<rows> <cols> <activation>", <rows> weight lines, one bias line
// Reals use 17 significant digits so a save/load cycle is value-exact.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ssdal/error.hpp"
#include "ssdal/network.hpp"

namespace ssdal {

namespace {

constexpr const char* kMagic = "SSDAL-MODEL 1";

void write_real(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

void write_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    write_real(out, values[i]);
  }
  out << '\n';
}

std::vector<double> read_row(std::istream& in, std::size_t expected, const char* what) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::data,
          std::string("checkpoint truncated while reading ") + what);
  std::istringstream fields(line);
  std::vector<double> values;
  std::string token;
  while (fields >> token) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    require(ec == std::errc() && end == token.data() + token.size(), ErrorKind::data,
            "bad number '" + token + "' in checkpoint");
    values.push_back(v);
  }
  require(values.size() == expected, ErrorKind::data,
          std::string("checkpoint ") + what + " has " + std::to_string(values.size()) +
              " values, expected " + std::to_string(expected));
  return values;
}

}  // namespace

void save_checkpoint(const NetworkParams& params, std::ostream& out) {
  params.validate();
  out << kMagic << '\n' << params.layers.size() << '\n';
  for (const auto& layer : params.layers) {
    out << layer.weight.rows() << ' ' << layer.weight.cols() << ' '
        << to_string(layer.activation) << '\n';
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) write_row(out, layer.weight.row(r));
    write_row(out, layer.bias);
  }
}

NetworkParams load_checkpoint(std::istream& in) {
  std::string line;
  require(std::getline(in, line) && line == kMagic, ErrorKind::data,
          "not an SSDAL model checkpoint");
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::data, "missing layer count");
  std::size_t count = 0;
  try {
    count = std::stoul(line);
  } catch (const std::logic_error&) {
    fail(ErrorKind::data, "bad layer count '" + line + "'");
  }
  require(count >= 1, ErrorKind::data, "checkpoint declares no layers");
  NetworkParams params;
  for (std::size_t l = 0; l < count; ++l) {
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::data,
            "missing layer header");
    std::istringstream header(line);
    std::size_t rows = 0, cols = 0;
    std::string activation;
    require(static_cast<bool>(header >> rows >> cols >> activation) && rows > 0 && cols > 0,
            ErrorKind::data, "bad layer header '" + line + "'");
    Layer layer;
    try {
      layer.activation = parse_activation(activation);
    } catch (const Error&) {
      fail(ErrorKind::data, "unknown activation '" + activation + "' in checkpoint");
    }
    layer.weight = Matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto values = read_row(in, cols, "weight row");
      std::copy(values.begin(), values.end(), layer.weight.row(r).begin());
    }
    layer.bias = read_row(in, rows, "bias");
    params.layers.push_back(std::move(layer));
  }
  try {
    params.validate();
  } catch (const Error& e) {
    fail(ErrorKind::data, std::string("inconsistent checkpoint: ") + e.what());
  }
  return params;
}

void save_checkpoint(const NetworkParams& params, const std::string& path) {
  std::ostringstream buffer;
  save_checkpoint(params, buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path + "' for writing");
  out << buffer.str();
  require(static_cast<bool>(out), ErrorKind::io, "failed writing '" + path + "'");
}

NetworkParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::missing_prerequisite,
          "cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace ssdal
