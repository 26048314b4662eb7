#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace schoenbat {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Takes ownership of `data`; throws ShapeError on a length mismatch and
  // InvalidArgument if any entry is NaN or infinite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  Matrix transposed() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

// Standard product; throws ShapeError unless a.cols() == b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

// acc += u v^T, with acc of shape |u| x |v|.
void outer_accumulate(std::span<const double> u, std::span<const double> v, Matrix& acc);

// Entrywise a * s.
Matrix scaled(const Matrix& a, double s);

double max_abs_difference(const Matrix& a, const Matrix& b);
double mean_abs_difference(const Matrix& a, const Matrix& b);

}  // namespace schoenbat
