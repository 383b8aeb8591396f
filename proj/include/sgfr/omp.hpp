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

#include <cstddef>
#include <span>
#include <vector>

#include "sgfr/tensor_io.hpp"

namespace sgfr {

enum class CorrelationMode { kSigned, kAbsolute };

struct OmpConfig {
  std::size_t sparsity = 17;  // s: maximum number of selected atoms
  double epsilon = 1e-6;      // stop once ||e||_2 <= epsilon
  // Defaults score atoms by |<x_j / ||x_j||, e>|. kSigned with
  // normalize_columns = false scores by the raw inner product x_j^T e.
  CorrelationMode correlation = CorrelationMode::kAbsolute;
  bool normalize_columns = true;

  void validate() const;
};

/// Result of a sparse self-expressive reconstruction y = X c + e.
struct SparseCode {
  std::vector<std::size_t> support;  // selection order
  std::vector<double> coefficients;  // coefficients[i] belongs to support[i]
  std::vector<double> residual;      // the anomalous term e
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  // Set when a support system was rank deficient and ridge-regularized.
  bool degenerate = false;
  // ||e|| before the first iteration and after each one.
  std::vector<double> residual_history;

  double coefficient(std::size_t column) const noexcept;
};

struct LeastSquaresSolution {
  std::vector<double> coefficients;  // aligned with the support argument
  bool degenerate = false;
};

/// Index of the best-scoring column in `remaining`; ties go to the smaller
/// column index. Throws kEmptyInput when `remaining` is empty.
std::size_t select_atom(std::span<const double> residual,
                        const DictionaryMatrix& dictionary,
                        std::span<const std::size_t> remaining,
                        const OmpConfig& config);

/// argmin_c ||y - X_S c||_2. A rank-deficient X_S falls back to ridge
/// regression with lambda = 1e-10 * trace(X_S^T X_S) / |S|.
LeastSquaresSolution ls_on_support(std::span<const float> y,
                                   const DictionaryMatrix& dictionary,
                                   std::span<const std::size_t> support);

std::vector<double> update_residual(std::span<const float> y,
                                    const DictionaryMatrix& dictionary,
                                    std::span<const std::size_t> support,
                                    std::span<const double> coefficients);

/// Orthogonal matching pursuit over the columns listed in `candidates`.
/// Runs while fewer than `sparsity` atoms are selected and ||e|| > epsilon.
SparseCode omp_solve(std::span<const float> y,
                     const DictionaryMatrix& dictionary,
                     std::span<const std::size_t> candidates,
                     const OmpConfig& config);

std::vector<std::size_t> all_columns(const DictionaryMatrix& dictionary);

}  // namespace sgfr
