#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "adco/errors.hpp"

namespace adco {

// Dense row-major matrix of doubles. Everything at desk scale, so no views,
// no expression templates, no BLAS.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> flat() { return {data_.data(), data_.size()}; }
  std::span<const double> flat() const { return {data_.data(), data_.size()}; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

  void fill(double value) { data_.assign(data_.size(), value); }
  void set_row(std::size_t r, std::span<const double> values);

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

// c = a * b, a is (m,k), b is (k,n)
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a * b^T, a is (m,k), b is (n,k); this is the similarity-matrix op
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// c = a^T * b, a is (k,m), b is (k,n); this is the weight-gradient op
Matrix matmul_tn(const Matrix& a, const Matrix& b);

void add_scaled(Matrix& dst, const Matrix& src, double scale);  // dst += scale*src
void scale(Matrix& m, double s);

}  // namespace adco
