#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ssdal/attributes.hpp"
#include "ssdal/matrix.hpp"
#include "ssdal/network.hpp"
#include "ssdal/rng.hpp"

namespace testing {

inline ssdal::Matrix random_matrix(ssdal::Rng& rng, std::size_t rows, std::size_t cols,
                                   double scale = 1.0) {
  ssdal::Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

inline std::vector<double> random_vector(ssdal::Rng& rng, std::size_t n, double lo = 0.0,
                                         double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline ssdal::AttributeVector random_bits(ssdal::Rng& rng, std::size_t k, double rate = 0.5) {
  std::vector<std::uint8_t> bits(k);
  for (auto& b : bits) b = rng.bernoulli(rate) ? 1 : 0;
  return ssdal::AttributeVector(std::move(bits));
}

inline ssdal::NetworkParams small_network(std::vector<std::size_t> sizes, std::uint64_t seed,
                                          ssdal::Activation hidden = ssdal::Activation::tanh) {
  ssdal::NetworkConfig cfg;
  cfg.layer_sizes = std::move(sizes);
  cfg.hidden_activation = hidden;
  cfg.init_seed = seed;
  return ssdal::init_network(cfg);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ssdal_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testing
