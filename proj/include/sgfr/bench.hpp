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
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "sgfr/tensor_io.hpp"

namespace sgfr {

/// Timing harness: scores synthetic queries with and without subspace
/// sampling for every (bank size, s_ref) pair. Levels 2..4 form a halving
/// chain starting at `base_shape`; levels {2, 3} are scored, 4 samples.
struct BenchSpec {
  std::vector<std::size_t> bank_sizes{50, 100, 200};
  std::vector<std::size_t> s_ref_grid{20};
  TensorShape base_shape{32, 32, 16};
  std::size_t sparsity = 17;
  std::size_t queries = 3;
  std::uint32_t subspace_dim = 5;
  std::uint32_t n_subspaces = 10;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct BenchRow {
  std::size_t n = 0;
  std::size_t dim = 0;  // level-2 feature dimension
  std::size_t s_ref = 0;
  std::size_t sparsity = 0;
  double ms_with = 0.0;     // median per query, subspace sampling
  double ms_without = 0.0;  // median per query, full bank
  double ratio() const { return ms_without > 0.0 ? ms_with / ms_without : 0.0; }
};

std::vector<BenchRow> run_bench(const BenchSpec& spec);

inline constexpr const char* kBenchCsvHeader = "n,dim,s_ref,s,ms_with,ms_without,ratio";
nlohmann::json to_json(const BenchRow& row);

}  // namespace sgfr
