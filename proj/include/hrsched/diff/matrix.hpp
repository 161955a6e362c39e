#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrsched::diff {

struct Shape {
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  bool operator==(const Shape&) const = default;
};

inline std::string to_string(Shape s) { return "[" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "]"; }

/// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : shape_{rows, cols}, data_(Shape{rows, cols}.size(), fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
  }
  explicit Matrix(Shape s, double fill = 0.0) : Matrix(s.rows, s.cols, fill) {}
  Matrix(int rows, int cols, std::vector<double> values) : shape_{rows, cols}, data_(std::move(values)) {
    if (data_.size() != shape_.size())
      throw std::invalid_argument("Matrix: " + std::to_string(data_.size()) + " values for shape " +
                                  to_string(shape_));
  }

  static Matrix row(std::initializer_list<double> v) { return {1, static_cast<int>(v.size()), std::vector<double>(v)}; }
  static Matrix column(std::initializer_list<double> v) {
    return {static_cast<int>(v.size()), 1, std::vector<double>(v)};
  }
  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return shape_.rows; }
  int cols() const { return shape_.cols; }
  Shape shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_.cols + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_.cols + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * shape_.cols; }
  const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * shape_.cols; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void add_inplace(const Matrix& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  }

  bool operator==(const Matrix&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// C += A * B
inline void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* ci = c.row_ptr(i);
    const double* ai = a.row_ptr(i);
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b.row_ptr(p);
      for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// C += A * B^T
inline void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  const int n = a.rows(), k = a.cols(), m = b.rows();
  for (int i = 0; i < n; ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (int j = 0; j < m; ++j) {
      const double* bj = b.row_ptr(j);
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C += A^T * B
inline void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int p = 0; p < n; ++p) {
    const double* ap = a.row_ptr(p);
    const double* bp = b.row_ptr(p);
    for (int i = 0; i < k; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* ci = c.row_ptr(i);
      for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

}  // namespace hrsched::diff
