// SPDX-License-Identifier: Apache-2.0
#include "sentirisk/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sentirisk {
namespace {

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

void require_column(const char* op, const Matrix& v) {
  if (v.cols() != 1 || v.rows() == 0) {
    throw ShapeError(std::string(op) + ": expected a non-empty column vector, got " +
                     v.shape_string());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("Matrix: dimensions must be positive, got " + shape_string());
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("Matrix: dimensions must be positive, got " + shape_string());
  }
  if (values_.size() != rows * cols) {
    throw ShapeError("Matrix: " + std::to_string(values_.size()) + " values for shape " +
                     shape_string());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

Matrix Matrix::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Matrix(n, 1, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Matrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) {
    throw ShapeError("Matrix::at: index (" + std::to_string(r) + "," + std::to_string(c) +
                     ") outside " + shape_string());
  }
  return (*this)(r, c);
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.shape_string() + " x " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at: shape mismatch " + a.shape_string() + "^T x " +
                     b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, i) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_bt: shape mismatch " + a.shape_string() + " x " +
                     b.shape_string() + "^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape("add", a, b);
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape("subtract", a, b);
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape("hadamard", a, b);
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

void add_into(Matrix& acc, const Matrix& b) {
  require_same_shape("add_into", acc, b);
  auto o = acc.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
}

void axpy_into(Matrix& acc, double s, const Matrix& b) {
  require_same_shape("axpy_into", acc, b);
  auto o = acc.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += s * bv[i];
}

Matrix concat_rows(const Matrix& top, const Matrix& bottom) {
  require_column("concat_rows", top);
  require_column("concat_rows", bottom);
  std::vector<double> values(top.values().begin(), top.values().end());
  values.insert(values.end(), bottom.values().begin(), bottom.values().end());
  return Matrix::column(std::move(values));
}

Matrix slice_rows(const Matrix& v, std::size_t begin, std::size_t count) {
  require_column("slice_rows", v);
  if (count == 0 || begin + count > v.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + "," +
                     std::to_string(begin + count) + ") outside " + v.shape_string());
  }
  auto src = v.values().subspan(begin, count);
  return Matrix::column(std::vector<double>(src.begin(), src.end()));
}

double sum(const Matrix& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return acc;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::sigmoid:
      // Split on sign so exp never overflows.
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Activation::tanh:
      return std::tanh(x);
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

Matrix activate(Activation kind, const Matrix& x) {
  Matrix out = x;
  for (double& v : out.values()) v = activate(kind, v);
  return out;
}

Matrix softmax(const Matrix& logits) {
  require_column("softmax", logits);
  const auto in = logits.values();
  const double max_logit = *std::max_element(in.begin(), in.end());
  Matrix out(logits.rows(), 1);
  auto o = out.values();
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    o[i] = std::exp(in[i] - max_logit);
    total += o[i];
  }
  for (double& v : o) v /= total;
  return out;
}

double finite_diff_at(const ScalarFunction& f, const Matrix& x, std::size_t r, std::size_t c,
                      double h) {
  Matrix probe = x;
  const double original = x.at(r, c);
  probe(r, c) = original + h;
  const double up = f(probe);
  probe(r, c) = original - h;
  const double down = f(probe);
  return (up - down) / (2.0 * h);
}

Matrix finite_diff_grad(const ScalarFunction& f, const Matrix& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  Matrix grad(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) grad(r, c) = finite_diff_at(f, x, r, c, h);
  return grad;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

}  // namespace sentirisk
