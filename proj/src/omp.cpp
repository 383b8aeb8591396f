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

#include "sgfr/omp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <string>

#include "sgfr/error.hpp"
#include "sgfr/linalg.hpp"
#include "sgfr/log.hpp"

namespace sgfr {
namespace {

// Least squares on a growing support: the QR factor gives the solution while
// the columns stay independent, the ridge path takes over afterwards.
class SupportSystem {
 public:
  SupportSystem(std::span<const float> y, const DictionaryMatrix& dictionary)
      : y_(y), dictionary_(dictionary), qr_(dictionary.dim()) {}

  void add(std::size_t column) {
    support_.push_back(column);
    const auto x = dictionary_.column(column);
    if (qr_.append(x)) {
      qty_.push_back(linalg::dot(qr_.q(qr_.rank() - 1), y_));
    } else {
      degenerate_ = true;
    }
  }

  LeastSquaresSolution solve() const {
    if (!degenerate_) return {qr_.back_substitute(qty_), false};
    return {ridge(), true};
  }

  const std::vector<std::size_t>& support() const noexcept { return support_; }

 private:
  std::vector<double> ridge() const {
    const std::size_t n = support_.size();
    std::vector<double> gram(n * n);
    std::vector<double> rhs(n);
    double trace = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const auto xa = dictionary_.column(support_[a]);
      rhs[a] = linalg::dot(xa, y_);
      for (std::size_t b = 0; b <= a; ++b) {
        const double g = linalg::dot(xa, dictionary_.column(support_[b]));
        gram[a * n + b] = g;
        gram[b * n + a] = g;
      }
      trace += gram[a * n + a];
    }
    const double lambda = 1e-10 * trace / static_cast<double>(n);
    for (std::size_t a = 0; a < n; ++a) gram[a * n + a] += lambda;
    if (!linalg::cholesky_solve(std::move(gram), rhs)) {
      throw Error(ErrorCode::kNumerical,
                  "ridge fallback failed on a support of size " + std::to_string(n));
    }
    log::debug("rank-deficient support of size " + std::to_string(n) +
               ", ridge lambda " + std::to_string(lambda));
    return rhs;
  }

  std::span<const float> y_;
  const DictionaryMatrix& dictionary_;
  linalg::IncrementalQr qr_;
  std::vector<std::size_t> support_;
  std::vector<double> qty_;
  bool degenerate_ = false;
};

double score(std::span<const double> residual, const DictionaryMatrix& dictionary,
             std::size_t j, const OmpConfig& config) {
  double s = linalg::dot(dictionary.column(j), residual);
  if (config.normalize_columns) {
    const double n = dictionary.norm(j);
    s = n > 0.0 ? s / n : 0.0;
  }
  return config.correlation == CorrelationMode::kAbsolute ? std::abs(s) : s;
}

}  // namespace

void OmpConfig::validate() const {
  if (sparsity < 1) {
    throw Error(ErrorCode::kInvalidArgument, "sparsity budget must be >= 1");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be finite and >= 0");
  }
}

double SparseCode::coefficient(std::size_t column) const noexcept {
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] == column) return coefficients[i];
  }
  return 0.0;
}

std::size_t select_atom(std::span<const double> residual,
                        const DictionaryMatrix& dictionary,
                        std::span<const std::size_t> remaining,
                        const OmpConfig& config) {
  if (remaining.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no remaining atoms to select from");
  }
  std::size_t best = remaining.front();
  double best_score = score(residual, dictionary, best, config);
  for (std::size_t j : remaining.subspan(1)) {
    const double s = score(residual, dictionary, j, config);
    if (s > best_score || (s == best_score && j < best)) {
      best = j;
      best_score = s;
    }
  }
  return best;
}

LeastSquaresSolution ls_on_support(std::span<const float> y,
                                   const DictionaryMatrix& dictionary,
                                   std::span<const std::size_t> support) {
  if (support.empty()) {
    throw Error(ErrorCode::kEmptyInput, "least squares needs a non-empty support");
  }
  if (y.size() != dictionary.dim()) {
    throw Error(ErrorCode::kShapeMismatch, "query and dictionary dims differ");
  }
  SupportSystem system(y, dictionary);
  for (std::size_t j : support) {
    if (j >= dictionary.size()) {
      throw Error(ErrorCode::kInvalidArgument, "support index out of range");
    }
    system.add(j);
  }
  return system.solve();
}

std::vector<double> update_residual(std::span<const float> y,
                                    const DictionaryMatrix& dictionary,
                                    std::span<const std::size_t> support,
                                    std::span<const double> coefficients) {
  std::vector<double> e(y.begin(), y.end());
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto x = dictionary.column(support[k]);
    const double c = coefficients[k];
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= c * static_cast<double>(x[i]);
  }
  return e;
}

SparseCode omp_solve(std::span<const float> y,
                     const DictionaryMatrix& dictionary,
                     std::span<const std::size_t> candidates,
                     const OmpConfig& config) {
  config.validate();
  if (y.size() != dictionary.dim()) {
    throw Error(ErrorCode::kShapeMismatch,
                "query dim " + std::to_string(y.size()) +
                    " does not match dictionary dim " +
                    std::to_string(dictionary.dim()));
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::kEmptyInput, "candidate set is empty");
  }
  std::vector<std::size_t> remaining(candidates.begin(), candidates.end());
  std::sort(remaining.begin(), remaining.end());
  remaining.erase(std::unique(remaining.begin(), remaining.end()), remaining.end());
  if (remaining.back() >= dictionary.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "candidate index " + std::to_string(remaining.back()) +
                    " out of range for " + std::to_string(dictionary.size()) +
                    " columns");
  }
  // Zero columns can never reduce the residual.
  std::erase_if(remaining, [&](std::size_t j) { return dictionary.norm(j) == 0.0; });
  if (remaining.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "all candidate columns are zero");
  }

  SparseCode code;
  code.residual.assign(y.begin(), y.end());
  code.residual_norm = linalg::norm(code.residual);
  code.residual_history.push_back(code.residual_norm);

  SupportSystem system(y, dictionary);
  while (code.iterations < config.sparsity && code.residual_norm > config.epsilon &&
         !remaining.empty()) {
    const std::size_t j = select_atom(code.residual, dictionary, remaining, config);
    remaining.erase(std::find(remaining.begin(), remaining.end(), j));
    system.add(j);
    auto solution = system.solve();
    code.degenerate = code.degenerate || solution.degenerate;
    code.residual = update_residual(y, dictionary, system.support(), solution.coefficients);
    code.coefficients = std::move(solution.coefficients);
    const double previous = code.residual_norm;
    code.residual_norm = linalg::norm(code.residual);
    code.residual_history.push_back(code.residual_norm);
    ++code.iterations;
    assert(code.residual_norm <= previous * (1.0 + 1e-9) + 1e-12);
    (void)previous;
  }
  code.support = system.support();
  if (code.degenerate) {
    log::debug("rank-deficient support encountered; ridge fallback used");
  }
  return code;
}

std::vector<std::size_t> all_columns(const DictionaryMatrix& dictionary) {
  std::vector<std::size_t> idx(dictionary.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace sgfr
