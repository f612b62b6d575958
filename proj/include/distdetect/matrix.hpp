#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "distdetect/error.hpp"

namespace distdetect {

// Dense row-major matrix of doubles. Only what the simulators need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_)
        fail(ErrorKind::DimensionMismatch, "ragged row " + std::to_string(i));
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
    return out;
  }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }

  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_)
      fail(ErrorKind::DimensionMismatch, "matrix product inner dimensions differ");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void require_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      fail(ErrorKind::DimensionMismatch, "matrix shapes differ");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::vector<double> multiply(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) fail(ErrorKind::DimensionMismatch, "matrix-vector size mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

}  // namespace distdetect
