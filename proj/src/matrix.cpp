#include "ssdal/matrix.hpp"

#include <cmath>
#include <string>

#include "ssdal/error.hpp"

namespace ssdal {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
      return "configuration error";
    case ErrorKind::io:
      return "I/O error";
    case ErrorKind::missing_prerequisite:
      return "missing prerequisite";
    case ErrorKind::data:
      return "data error";
    case ErrorKind::shape:
      return "shape error";
    case ErrorKind::validation:
      return "validation error";
    case ErrorKind::verification:
      return "verification failure";
  }
  return "error";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require(values_.size() == rows * cols, ErrorKind::shape,
          "matrix value count " + std::to_string(values_.size()) + " != " +
              std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == out.cols(), ErrorKind::shape, "ragged rows");
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = rows[r][c];
  }
  return out;
}

bool Matrix::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < rows_, ErrorKind::shape, "row index out of range");
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void Matrix::append_rows(const Matrix& other) {
  if (other.rows() == 0) return;
  if (rows_ == 0) {
    *this = other;
    return;
  }
  require(other.cols() == cols_, ErrorKind::shape, "column mismatch on append");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  rows_ += other.rows();
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), ErrorKind::shape, "matmul_transposed inner dims");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < ai.size(); ++k) acc += ai[k] * bj[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorKind::shape, "transposed_matmul inner dims");
  Matrix out(a.cols(), b.cols());
  for (std::size_t n = 0; n < a.rows(); ++n) {
    const auto an = a.row(n);
    const auto bn = b.row(n);
    for (std::size_t i = 0; i < an.size(); ++i) {
      const double s = an[i];
      if (s == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < bn.size(); ++j) out_row[j] += s * bn[j];
    }
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorKind::shape, "matmul inner dims");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < ai.size(); ++k) {
      const double s = ai[k];
      if (s == 0.0) continue;
      const auto bk = b.row(k);
      for (std::size_t j = 0; j < bk.size(); ++j) out_row[j] += s * bk[j];
    }
  }
  return out;
}

}  // namespace ssdal
