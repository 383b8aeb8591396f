// Copyright 2026 The SGFR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

// Small dense kernels shared by the solver, the bank projections and the
// synthetic generator. Accumulation is always in double.
namespace sgfr::linalg {

template <typename A, typename B>
double dot(std::span<const A> a, std::span<const B> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

template <typename A>
double norm(std::span<const A> a) noexcept {
  return std::sqrt(dot(a, a));
}

template <typename A>
double norm(const std::vector<A>& a) noexcept {
  return norm(std::span<const A>(a));
}

/// Thin QR factorization grown one column at a time with two-pass classical
/// Gram-Schmidt. Appending costs O(rows * rank).
class IncrementalQr {
 public:
  explicit IncrementalQr(std::size_t rows, double rank_tolerance = 1e-10);

  // Returns false, leaving the factorization untouched, when the column is
  // numerically inside the current span (||x - QQ^T x|| <= tol * ||x||).
  template <typename T>
  bool append(std::span<const T> column);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t rank() const noexcept { return rank_; }

  std::span<const double> q(std::size_t k) const noexcept {
    return {q_.data() + k * rows_, rows_};
  }
  // R is upper triangular; r(i, k) is the i-th coefficient of column k.
  double r(std::size_t i, std::size_t k) const noexcept {
    return r_[k * (k + 1) / 2 + i];
  }

  // Solves R c = rhs by back substitution.
  std::vector<double> back_substitute(std::span<const double> rhs) const;

  // b - Q Q^T b, evaluated with two projection passes.
  template <typename T>
  std::vector<double> residual_of(std::span<const T> b) const;

 private:
  void orthogonalize(std::vector<double>& v, std::vector<double>* coeffs) const;

  std::size_t rows_;
  double tolerance_;
  std::size_t rank_ = 0;
  std::vector<double> q_;
  std::vector<double> r_;  // packed columns of the upper triangle
};

template <typename T>
bool IncrementalQr::append(std::span<const T> column) {
  std::vector<double> v(column.begin(), column.end());
  const double column_norm = norm(std::span<const double>(v));
  if (column_norm == 0.0 || rank_ >= rows_) return false;
  std::vector<double> coeffs(rank_, 0.0);
  orthogonalize(v, &coeffs);
  const double rnorm = norm(std::span<const double>(v));
  if (!(rnorm > tolerance_ * column_norm)) return false;
  for (double& x : v) x /= rnorm;
  q_.insert(q_.end(), v.begin(), v.end());
  r_.insert(r_.end(), coeffs.begin(), coeffs.end());
  r_.push_back(rnorm);
  ++rank_;
  return true;
}

template <typename T>
std::vector<double> IncrementalQr::residual_of(std::span<const T> b) const {
  std::vector<double> v(b.begin(), b.end());
  orthogonalize(v, nullptr);
  return v;
}

/// Solves the symmetric positive definite system A x = b (A row-major n x n)
/// by Cholesky. Returns false if A is not numerically positive definite.
bool cholesky_solve(std::vector<double> a, std::vector<double>& b);

}  // namespace sgfr::linalg
