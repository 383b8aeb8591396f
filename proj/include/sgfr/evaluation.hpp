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
#include <span>
#include <vector>

#include "json.hpp"
#include "sgfr/pipeline.hpp"

namespace sgfr {

/// Binary anomaly mask with its 8-connected components.
class GroundTruthMask {
 public:
  GroundTruthMask() = default;
  GroundTruthMask(std::uint32_t height, std::uint32_t width,
                  std::vector<std::uint8_t> values);

  std::uint32_t height() const noexcept { return height_; }
  std::uint32_t width() const noexcept { return width_; }
  bool at(std::size_t y, std::size_t x) const { return values_[y * width_ + x] != 0; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  std::size_t positives() const noexcept { return positives_; }

  // Pixel indices (y * width + x) of each component, in raster order of
  // their first pixel.
  const std::vector<std::vector<std::size_t>>& components() const noexcept {
    return components_;
  }

  FeatureTensor to_tensor() const;
  static GroundTruthMask from_tensor(const FeatureTensor& tensor);

 private:
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::vector<std::uint8_t> values_;
  std::size_t positives_ = 0;
  std::vector<std::vector<std::size_t>> components_;
};

struct CurvePoint {
  double fpr = 0.0;
  double value = 0.0;
};

/// Pixel AUROC pooled over all samples, trapezoidal over distinct thresholds.
double pixel_auroc(std::span<const ScoreGrid> scores,
                   std::span<const GroundTruthMask> masks,
                   std::vector<CurvePoint>* roc = nullptr);

/// Per-region overlap. For every distinct threshold t the operating point is
/// (FP(t) / negatives, mean over all components of |{score >= t} & C| / |C|).
/// The curve starts at (0, 0); points with fpr <= max_fpr are integrated by
/// the trapezoid rule, the last one is held flat up to max_fpr, and the area
/// is divided by max_fpr.
double pro_score(std::span<const ScoreGrid> scores, std::span<const GroundTruthMask> masks,
                 double max_fpr = 0.30, std::vector<CurvePoint>* curve = nullptr);

struct EvalReport {
  double auroc = 0.0;
  double pro = 0.0;
  double max_fpr = 0.30;
  std::vector<CurvePoint> pro_curve;
  std::size_t n_samples = 0;

  nlohmann::json to_json() const;
};

EvalReport evaluate(std::span<const ScoreGrid> scores,
                    std::span<const GroundTruthMask> masks, double max_fpr = 0.30);

}  // namespace sgfr
