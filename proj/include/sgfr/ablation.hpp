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
#include <string>
#include <vector>

#include "json.hpp"
#include "sgfr/evaluation.hpp"
#include "sgfr/memory_bank.hpp"
#include "sgfr/pipeline.hpp"

namespace sgfr {

struct AblationOptions {
  std::vector<std::size_t> s_ref_grid{10, 20, 30, 40, 50};
  std::vector<SamplingMethod> methods{SamplingMethod::kSubspace, SamplingMethod::kRandom};
  bool tie_sparsity = true;  // s = s_ref / 2
  unsigned threads = 1;
  double max_fpr = 0.30;
};

struct AblationRow {
  SamplingMethod method = SamplingMethod::kSubspace;
  std::size_t s_ref = 0;
  std::size_t sparsity = 0;
  double auroc = 0.0;
  double pro = 0.0;
  double coverage_error = 0.0;  // mean over test samples, reference level
  double ms_per_sample = 0.0;
};

/// One row per (method, s_ref), methods outermost.
std::vector<AblationRow> ablate_sampling(const MemoryBank& bank,
                                         std::span<const SampleFeatures> tests,
                                         std::span<const GroundTruthMask> masks,
                                         const PipelineConfig& base,
                                         const AblationOptions& options);

inline constexpr const char* kAblationCsvHeader =
    "method,s_ref,auroc,pro,coverage_error,ms_per_sample";

std::string ablation_csv_row(const AblationRow& row);
nlohmann::json to_json(const AblationRow& row);

}  // namespace sgfr
