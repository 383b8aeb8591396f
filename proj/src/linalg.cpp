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

#include "sgfr/linalg.hpp"

namespace sgfr::linalg {

IncrementalQr::IncrementalQr(std::size_t rows, double rank_tolerance)
    : rows_(rows), tolerance_(rank_tolerance) {}

void IncrementalQr::orthogonalize(std::vector<double>& v,
                                  std::vector<double>* coeffs) const {
  // CGS2: a second pass restores orthogonality lost to cancellation.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < rank_; ++k) {
      const auto qk = q(k);
      const double h = dot(qk, std::span<const double>(v));
      for (std::size_t i = 0; i < rows_; ++i) v[i] -= h * qk[i];
      if (coeffs) (*coeffs)[k] += h;
    }
  }
}

std::vector<double> IncrementalQr::back_substitute(
    std::span<const double> rhs) const {
  std::vector<double> c(rank_, 0.0);
  for (std::size_t ii = rank_; ii-- > 0;) {
    double acc = rhs[ii];
    for (std::size_t k = ii + 1; k < rank_; ++k) acc -= r(ii, k) * c[k];
    c[ii] = acc / r(ii, ii);
  }
  return c;
}

bool cholesky_solve(std::vector<double> a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

}  // namespace sgfr::linalg
