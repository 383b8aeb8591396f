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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgfr/omp.hpp"
#include "sgfr/tensor_io.hpp"

namespace sgfr {

struct LevelDictionary {
  TensorShape shape;
  DictionaryMatrix matrix;
};

/// Nominal feature dictionaries for every extracted level. Column i of every
/// level comes from nominal image ids()[i]. Immutable after construction.
class MemoryBank {
 public:
  MemoryBank(std::vector<std::string> ids,
             std::map<std::uint32_t, LevelDictionary> levels,
             std::uint32_t ref_level, nlohmann::json created_params = {});

  // per_image[i] maps level -> tensor for image ids[i].
  static MemoryBank from_tensors(
      std::vector<std::string> ids,
      const std::vector<std::map<std::uint32_t, FeatureTensor>>& per_image,
      std::uint32_t ref_level, nlohmann::json created_params = {});

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::uint32_t ref_level() const noexcept { return ref_level_; }
  std::vector<std::uint32_t> levels() const;
  bool has_level(std::uint32_t level) const { return levels_.contains(level); }

  const LevelDictionary& level(std::uint32_t level) const;
  const DictionaryMatrix& dictionary(std::uint32_t level) const {
    return this->level(level).matrix;
  }
  const DictionaryMatrix& reference() const { return dictionary(ref_level_); }

  nlohmann::json manifest() const;

 private:
  std::vector<std::string> ids_;
  std::map<std::uint32_t, LevelDictionary> levels_;
  std::uint32_t ref_level_;
  nlohmann::json created_params_;
};

inline constexpr int kManifestVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";

// Feature files are named <image_id>_l<level>.sgt.
std::string feature_file_name(const std::string& id, std::uint32_t level);

/// Lists image ids that have at least one <id>_l<level>.sgt file in `dir`.
std::vector<std::string> list_feature_ids(const std::filesystem::path& dir);

/// Reads every id's tensor at every requested level. The reference level
/// defaults to the deepest requested level and is added if missing.
MemoryBank build_bank(const std::filesystem::path& feature_dir,
                      std::span<const std::uint32_t> levels,
                      std::optional<std::uint32_t> ref_level = std::nullopt);

void save_bank(const MemoryBank& bank, const std::filesystem::path& dir);
MemoryBank load_bank(const std::filesystem::path& dir);

enum class SamplingMethod { kSubspace, kRandom, kNearest, kFull };

const char* to_string(SamplingMethod method) noexcept;
SamplingMethod parse_sampling_method(const std::string& name);

struct SampledSubset {
  std::vector<std::size_t> indices;
  SparseCode ref_code;  // only filled by subspace sampling
  SamplingMethod method = SamplingMethod::kFull;
};

/// Support of the reference-level OMP solution with budget s_ref. With
/// s_ref == N the candidate set is the whole bank.
SampledSubset sample_subspace(const MemoryBank& bank,
                              std::span<const float> y_ref, std::size_t s_ref,
                              const OmpConfig& config);

/// Uniform sample without replacement, sorted ascending.
SampledSubset sample_random(const MemoryBank& bank, std::size_t s_ref,
                            std::uint64_t seed);

/// The s_ref reference-level features closest to y_ref in L2 distance
/// (the feature-matching comparator).
SampledSubset sample_nearest(const MemoryBank& bank,
                             std::span<const float> y_ref, std::size_t s_ref);

SampledSubset sample_full(const MemoryBank& bank);

/// (1/N) sum_j ||x_j - P x_j|| with P the orthogonal projector onto
/// span{x_i : i in subset}.
double coverage_error(const DictionaryMatrix& dictionary,
                      std::span<const std::size_t> subset);
double coverage_error(const MemoryBank& bank, std::uint32_t level,
                      std::span<const std::size_t> subset);

/// (1/N) sum_j min_{i in subset} ||x_j - x_i||.
double nn_matching_error(const DictionaryMatrix& dictionary,
                         std::span<const std::size_t> subset);
double nn_matching_error(const MemoryBank& bank, std::uint32_t level,
                         std::span<const std::size_t> subset);

}  // namespace sgfr
