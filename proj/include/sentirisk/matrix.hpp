// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices of doubles and the handful of operations the
// layers need. Column vectors are n x 1 matrices. There is no broadcasting:
// every binary operation requires the exact shapes it documents and throws
// ShapeError otherwise.
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "sentirisk/errors.hpp"

namespace sentirisk {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  /// Builds from nested rows; all rows must have the same length.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix column(std::vector<double> values);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  /// Bounds-checked element access.
  double at(std::size_t r, std::size_t c) const;

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  Matrix transpose() const;
  void fill(double v);

  /// "RxC", used in error messages.
  std::string shape_string() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
/// acc += b, shapes must match.
void add_into(Matrix& acc, const Matrix& b);
/// acc += s * b, shapes must match.
void axpy_into(Matrix& acc, double s, const Matrix& b);

/// Stacks two column vectors: [top; bottom].
Matrix concat_rows(const Matrix& top, const Matrix& bottom);
/// Rows [begin, begin + count) of a column vector.
Matrix slice_rows(const Matrix& v, std::size_t begin, std::size_t count);

double sum(const Matrix& a);
bool all_finite(const Matrix& a);

enum class Activation { sigmoid, tanh, relu };

double activate(Activation kind, double x);
Matrix activate(Activation kind, const Matrix& x);

/// Numerically stable softmax of an n x 1 column.
Matrix softmax(const Matrix& logits);

using ScalarFunction = std::function<double(const Matrix&)>;

/// Central-difference gradient of f at x, one coordinate at a time.
Matrix finite_diff_grad(const ScalarFunction& f, const Matrix& x, double h = 1e-5);
/// Central difference for a single coordinate.
double finite_diff_at(const ScalarFunction& f, const Matrix& x, std::size_t r, std::size_t c,
                      double h = 1e-5);

/// |a - b| / max(1e-8, |a| + |b|); the metric used by every gradient check.
double relative_error(double a, double b);

}  // namespace sentirisk
