#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ssdal {

/// Dense row-major matrix of doubles. A 0×0 or 0×n matrix is allowed and
/// stands for an empty batch.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  /// Rows picked by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  /// Appends the rows of `other`; column counts must agree unless this is empty.
  void append_rows(const Matrix& other);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// out = a · bᵀ   (a: n×k, b: m×k, out: n×m)
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
/// out = aᵀ · b   (a: n×k, b: n×m, out: k×m)
Matrix transposed_matmul(const Matrix& a, const Matrix& b);
/// out = a · b    (a: n×k, b: k×m)
Matrix matmul(const Matrix& a, const Matrix& b);

}  // namespace ssdal
