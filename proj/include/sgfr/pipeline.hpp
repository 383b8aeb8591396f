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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgfr/memory_bank.hpp"
#include "sgfr/omp.hpp"
#include "sgfr/tensor_io.hpp"

namespace sgfr {

enum class Aggregation { kMean, kSum };

const char* to_string(Aggregation aggregation) noexcept;
Aggregation parse_aggregation(const std::string& name);

struct PipelineConfig {
  std::vector<std::uint32_t> scoring_levels{2, 3};
  std::uint32_t ref_level = 4;
  std::size_t s_ref = 40;
  std::size_t sparsity = 17;
  double epsilon = 1e-6;
  std::uint32_t output_height = 256;
  std::uint32_t output_width = 256;
  double sigma = 4.0;
  Aggregation aggregation = Aggregation::kMean;
  CorrelationMode correlation = CorrelationMode::kAbsolute;
  bool normalize_columns = true;
  SamplingMethod sampling = SamplingMethod::kSubspace;
  std::uint64_t seed = 0;  // random sampling only
  unsigned threads = 1;    // concurrent per-level solves inside one sample

  void validate() const;
  OmpConfig omp() const;
  nlohmann::json to_json() const;
};

/// Row-major h x w grid of per-pixel scores.
struct ScoreGrid {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> values;

  ScoreGrid() = default;
  ScoreGrid(std::uint32_t h, std::uint32_t w, float fill = 0.0f)
      : height(h), width(w), values(std::size_t{h} * w, fill) {}

  float& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  float max() const;

  friend bool operator==(const ScoreGrid&, const ScoreGrid&) = default;
};

struct LevelScore {
  std::uint32_t level = 0;
  ScoreGrid grid;  // h_l x w_l channel norms of the residual
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  bool degenerate = false;
  double elapsed_ms = 0.0;
};

struct AnomalyMap {
  ScoreGrid scores;  // output_height x output_width
  std::vector<LevelScore> per_level;
  SampledSubset subset;
  double sampling_ms = 0.0;
  double total_ms = 0.0;

  // Run report without config echo; timing lives under "timing_ms".
  nlohmann::json report(const std::string& sample_id) const;
  // The map as an SGT tensor: level 0, h x w x 1.
  FeatureTensor to_tensor() const;
};

using SampleFeatures = std::map<std::uint32_t, FeatureTensor>;

/// Scores one test sample: sample the bank at the reference level, solve
/// each scoring level on the sampled subset, turn residuals into per-pixel
/// scores, upsample, aggregate and smooth.
AnomalyMap score_sample(const MemoryBank& bank, const SampleFeatures& features,
                        const PipelineConfig& config, std::uint64_t sample_key = 0);

/// Scores samples on `threads` workers. Sample i uses sample_key = i, so
/// results do not depend on the thread count.
std::vector<AnomalyMap> score_batch(const MemoryBank& bank,
                                    std::span<const SampleFeatures> samples,
                                    const PipelineConfig& config, unsigned threads);

/// Per-pixel L2 norm of the residual over channels.
ScoreGrid residual_to_scores(std::span<const double> residual, const TensorShape& shape);

/// Bilinear resize with align-corners sampling.
ScoreGrid upsample_bilinear(const ScoreGrid& grid, std::uint32_t height,
                            std::uint32_t width);

/// Normalized 1-D Gaussian taps over [-ceil(4 sigma), ceil(4 sigma)].
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with reflect padding (edge sample not repeated).
ScoreGrid gaussian_smooth(const ScoreGrid& grid, double sigma);

ScoreGrid aggregate_levels(std::span<const ScoreGrid> grids, Aggregation mode);

/// 16-bit binary PGM, scaled so the map maximum is 65535.
void write_pgm16(const ScoreGrid& grid, const std::filesystem::path& path);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) noexcept;

}  // namespace sgfr
