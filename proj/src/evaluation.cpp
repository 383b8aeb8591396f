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

#include "sgfr/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include "sgfr/error.hpp"

namespace sgfr {
namespace {

struct Pixel {
  float score;
  // -1 for a negative pixel, otherwise the global component index
  std::int64_t component;
};

void check_inputs(std::span<const ScoreGrid> scores, std::span<const GroundTruthMask> masks) {
  if (scores.empty() || scores.size() != masks.size()) {
    throw Error(ErrorCode::kInvalidArgument, "need one mask per score map");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].height != masks[i].height() || scores[i].width != masks[i].width()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "score map " + std::to_string(i) + " does not match its mask");
    }
  }
}

// Pixels sorted by descending score; ties keep their pooled order.
std::vector<Pixel> pool(std::span<const ScoreGrid> scores,
                        std::span<const GroundTruthMask> masks,
                        std::vector<std::size_t>* component_sizes) {
  std::vector<Pixel> pixels;
  std::int64_t next_component = 0;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    std::vector<std::int64_t> label(scores[s].values.size(), -1);
    for (const auto& comp : masks[s].components()) {
      for (std::size_t p : comp) label[p] = next_component;
      if (component_sizes) component_sizes->push_back(comp.size());
      ++next_component;
    }
    for (std::size_t p = 0; p < label.size(); ++p) {
      pixels.push_back({scores[s].values[p], label[p]});
    }
  }
  std::stable_sort(pixels.begin(), pixels.end(),
                   [](const Pixel& a, const Pixel& b) { return a.score > b.score; });
  return pixels;
}

}  // namespace

GroundTruthMask::GroundTruthMask(std::uint32_t height, std::uint32_t width,
                                 std::vector<std::uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != std::size_t{height_} * width_) {
    throw Error(ErrorCode::kShapeMismatch, "mask storage does not match its size");
  }
  for (auto& v : values_) v = v ? 1 : 0;
  positives_ = static_cast<std::size_t>(std::count(values_.begin(), values_.end(), 1));

  std::vector<bool> seen(values_.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < values_.size(); ++start) {
    if (!values_[start] || seen[start]) continue;
    std::vector<std::size_t> comp;
    stack.push_back(start);
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      comp.push_back(p);
      const auto y = static_cast<std::ptrdiff_t>(p / width_);
      const auto x = static_cast<std::ptrdiff_t>(p % width_);
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          const auto ny = y + dy;
          const auto nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= height_ || nx >= width_) continue;
          const auto q = static_cast<std::size_t>(ny) * width_ + static_cast<std::size_t>(nx);
          if (values_[q] && !seen[q]) {
            seen[q] = true;
            stack.push_back(q);
          }
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    components_.push_back(std::move(comp));
  }
}

FeatureTensor GroundTruthMask::to_tensor() const {
  return FeatureTensor(0, TensorShape{height_, width_, 1},
                       std::vector<float>(values_.begin(), values_.end()));
}

GroundTruthMask GroundTruthMask::from_tensor(const FeatureTensor& tensor) {
  if (tensor.shape().channels != 1) {
    throw Error(ErrorCode::kShapeMismatch, "mask tensors must have one channel");
  }
  std::vector<std::uint8_t> values;
  values.reserve(tensor.data().size());
  for (float v : tensor.data()) values.push_back(v > 0.5f ? 1 : 0);
  return GroundTruthMask(tensor.shape().height, tensor.shape().width, std::move(values));
}

double pixel_auroc(std::span<const ScoreGrid> scores, std::span<const GroundTruthMask> masks,
                   std::vector<CurvePoint>* roc) {
  check_inputs(scores, masks);
  const auto pixels = pool(scores, masks, nullptr);
  const auto positives = static_cast<std::size_t>(std::count_if(
      pixels.begin(), pixels.end(), [](const Pixel& p) { return p.component >= 0; }));
  const std::size_t negatives = pixels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "AUROC needs both anomalous and normal pixels in the mask pool");
  }
  std::size_t tp = 0;
  std::size_t fp = 0;
  double prev_tpr = 0.0;
  double prev_fpr = 0.0;
  double area = 0.0;
  if (roc) roc->assign(1, {0.0, 0.0});
  for (std::size_t i = 0; i < pixels.size();) {
    const float t = pixels[i].score;
    for (; i < pixels.size() && pixels[i].score == t; ++i) {
      (pixels[i].component >= 0 ? tp : fp) += 1;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
    const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    area += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    prev_tpr = tpr;
    prev_fpr = fpr;
    if (roc) roc->push_back({fpr, tpr});
  }
  return area;
}

double pro_score(std::span<const ScoreGrid> scores, std::span<const GroundTruthMask> masks,
                 double max_fpr, std::vector<CurvePoint>* curve) {
  check_inputs(scores, masks);
  if (!(max_fpr > 0.0 && max_fpr <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "max_fpr must lie in (0, 1]");
  }
  std::vector<std::size_t> sizes;
  const auto pixels = pool(scores, masks, &sizes);
  if (sizes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "PRO needs at least one anomalous region");
  }
  std::size_t positives = 0;
  for (std::size_t n : sizes) positives += n;
  const std::size_t negatives = pixels.size() - positives;
  if (negatives == 0) {
    throw Error(ErrorCode::kInvalidArgument, "PRO needs normal pixels to measure FPR");
  }
  const auto n_components = static_cast<double>(sizes.size());

  std::size_t fp = 0;
  double overlap_sum = 0.0;
  CurvePoint last{0.0, 0.0};
  double area = 0.0;
  if (curve) curve->assign(1, last);
  for (std::size_t i = 0; i < pixels.size();) {
    const float t = pixels[i].score;
    for (; i < pixels.size() && pixels[i].score == t; ++i) {
      if (pixels[i].component < 0) {
        ++fp;
      } else {
        overlap_sum += 1.0 / static_cast<double>(sizes[static_cast<std::size_t>(pixels[i].component)]);
      }
    }
    const CurvePoint point{static_cast<double>(fp) / static_cast<double>(negatives),
                           overlap_sum / n_components};
    if (point.fpr > max_fpr) break;
    area += (point.fpr - last.fpr) * (point.value + last.value) * 0.5;
    last = point;
    if (curve) curve->push_back(point);
  }
  area += (max_fpr - last.fpr) * last.value;
  return area / max_fpr;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : pro_curve) points.push_back({p.fpr, p.value});
  return {{"auroc", auroc},
          {"pro", pro},
          {"max_fpr", max_fpr},
          {"n_samples", n_samples},
          {"pro_curve", points}};
}

EvalReport evaluate(std::span<const ScoreGrid> scores, std::span<const GroundTruthMask> masks,
                    double max_fpr) {
  EvalReport report;
  report.max_fpr = max_fpr;
  report.n_samples = scores.size();
  report.auroc = pixel_auroc(scores, masks);
  report.pro = pro_score(scores, masks, max_fpr, &report.pro_curve);
  return report;
}

}  // namespace sgfr
