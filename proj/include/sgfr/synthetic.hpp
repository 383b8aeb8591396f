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
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgfr/evaluation.hpp"
#include "sgfr/memory_bank.hpp"
#include "sgfr/pipeline.hpp"

namespace sgfr {

struct LevelSpec {
  std::uint32_t level = 0;
  TensorShape shape;
};

/// Union-of-subspaces feature data. Each image draws one latent point z on
/// the unit sphere of R^d; its level-l feature is U_{a,l} z for the
/// image's subspace a, with U_{a,l} a random orthonormal basis of a d-dim
/// subspace of R^{h_l w_l c_l}. Anomalies add a random perturbation to a
/// spatial block at every level.
struct SyntheticSpec {
  std::vector<LevelSpec> levels{{2, {16, 16, 8}}, {3, {8, 8, 16}}, {4, {4, 4, 32}}};
  std::uint32_t subspace_dim = 5;
  std::uint32_t n_subspaces = 10;
  std::uint32_t points_per_subspace = 20;
  std::uint32_t n_test = 30;
  // Expected norm of the additive Gaussian noise on each level feature.
  double noise_sigma = 0.0;
  // Per-pixel perturbation norm in units of the mean nominal pixel norm.
  double anomaly_magnitude = 1.0;
  double anomaly_fraction = 1.0;
  // Block size in cells of the finest level; placement is random.
  std::uint32_t block_height = 4;
  std::uint32_t block_width = 4;
  std::uint32_t output_height = 256;
  std::uint32_t output_width = 256;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);

  // Single level (level 1, shape 1 x 1 x ambient_dim), no test samples.
  static SyntheticSpec flat(std::uint32_t ambient_dim, std::uint32_t subspace_dim,
                            std::uint32_t n_subspaces, std::uint32_t points_per_subspace,
                            std::uint64_t seed);

  // Levels first_level.. with halving spatial size and doubling channels.
  static std::vector<LevelSpec> halving_chain(std::uint32_t first_level, TensorShape first,
                                              std::uint32_t count);
};

struct SyntheticSample {
  std::string id;
  SampleFeatures features;
  std::uint32_t subspace = 0;
  bool anomalous = false;
};

struct SyntheticDataset {
  SyntheticSpec spec;
  std::vector<SyntheticSample> nominal;
  std::vector<SyntheticSample> test;
  std::vector<GroundTruthMask> masks;  // one per test sample

  // Bank over the nominal samples, reference level = deepest level.
  MemoryBank bank() const;
  std::vector<SampleFeatures> test_features() const;
};

SyntheticDataset gen_synthetic(const SyntheticSpec& spec);

/// Writes nominal/, test/, masks/ (<id>_mask.sgt) and synth.json.
void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

/// Column-major dim x rank matrix with orthonormal columns.
std::vector<double> random_orthonormal_basis(std::size_t dim, std::size_t rank,
                                             std::mt19937_64& rng);

/// U z for a uniformly random unit vector z in R^rank.
std::vector<double> subspace_point(std::span<const double> basis, std::size_t dim,
                                   std::size_t rank, std::mt19937_64& rng);

}  // namespace sgfr
