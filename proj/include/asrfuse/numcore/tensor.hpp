// asrfuse/numcore/tensor.hpp

// Copyright 2026  The asrfuse Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASRFUSE_NUMCORE_TENSOR_HPP_
#define ASRFUSE_NUMCORE_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asrfuse/numcore/error.hpp"
#include "asrfuse/numcore/rng.hpp"

namespace asrfuse {

/// Dense row-major array of doubles.  Every operation in this library works on
/// rank-2 tensors (a scalar is 1x1, a vector is 1xN); higher ranks are only
/// carried around, e.g. when serializing.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (NumElements(shape_) != data_.size()) {
      FailValidation("Tensor: shape holds ", NumElements(shape_),
                     " elements but data has ", data_.size());
    }
  }

  static Tensor Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }

  /// Builds a matrix from nested initializer lists; rows must be equal length.
  static Tensor FromRows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Tensor t = Matrix(r, c);
    std::size_t i = 0;
    for (const auto &row : rows) {
      if (row.size() != c) FailValidation("Tensor::FromRows: ragged rows");
      for (double v : row) t.data_[i++] = v;
    }
    return t;
  }

  static Tensor Scalar(double v) { return Tensor({1, 1}, v); }

  static Tensor RowVector(std::span<const double> v) {
    return Tensor({1, v.size()}, std::vector<double>(v.begin(), v.end()));
  }

  static Tensor Identity(std::size_t n) {
    Tensor t = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  /// Entries drawn from N(0, stddev^2).
  static Tensor RandomNormal(std::size_t rows, std::size_t cols, double stddev,
                             Rng *rng) {
    Tensor t = Matrix(rows, cols);
    for (double &v : t.data_) v = rng->Normal() * stddev;
    return t;
  }

  static Tensor RandomUniform(std::size_t rows, std::size_t cols, double lo,
                              double hi, Rng *rng) {
    Tensor t = Matrix(rows, cols);
    for (double &v : t.data_) v = rng->Uniform(lo, hi);
    return t;
  }

  const std::vector<std::size_t> &shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rank() const { return shape_.size(); }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const {
    if (shape_.size() < 2) return shape_.empty() ? 0 : 1;
    return shape_[1];
  }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }
  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Only meaningful for 1x1 tensors.
  double item() const {
    if (data_.size() != 1) FailValidation("Tensor::item on tensor of size ", data_.size());
    return data_[0];
  }

  std::span<double> Row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> Row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  std::vector<double> &data() { return data_; }
  const std::vector<double> &data() const { return data_; }

  bool SameShape(const Tensor &o) const { return shape_ == o.shape_; }

  bool AllFinite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string ShapeString() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

  Tensor Reshaped(std::vector<std::size_t> shape) const {
    return Tensor(std::move(shape), data_);
  }

  /// Copy of rows [begin, begin + count).
  Tensor RowRange(std::size_t begin, std::size_t count) const {
    if (begin + count > rows())
      FailValidation("Tensor::RowRange: rows [", begin, ", ", begin + count, ") of ",
                     ShapeString());
    Tensor t = Matrix(count, cols());
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols()),
              data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols()),
              t.data_.begin());
    return t;
  }

  Tensor Transposed() const {
    Tensor t = Matrix(cols(), rows());
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Tensor &operator+=(const Tensor &o) {
    CheckSame(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  Tensor &Scale(double s) {
    for (double &v : data_) v *= s;
    return *this;
  }

  void Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  double Sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  static std::size_t NumElements(const std::vector<std::size_t> &shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

 private:
  void CheckSame(const Tensor &o, const char *what) const {
    if (shape_ != o.shape_)
      FailValidation(what, ": shape mismatch ", ShapeString(), " vs ", o.ShapeString());
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Plain (tape-free) matrix product, used by oracles and inference paths.
inline Tensor MatMulPlain(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.rows())
    FailValidation("MatMulPlain: ", a.ShapeString(), " x ", b.ShapeString());
  Tensor c = Tensor::Matrix(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double *ci = c.data().data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.data()[i * k + p];
      if (aip == 0.0) continue;
      const double *bp = b.data().data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

}  // namespace asrfuse

#endif  // ASRFUSE_NUMCORE_TENSOR_HPP_
