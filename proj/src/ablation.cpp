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

#include "sgfr/ablation.hpp"

#include <algorithm>
#include <cstdio>

#include "sgfr/error.hpp"

namespace sgfr {

std::vector<AblationRow> ablate_sampling(const MemoryBank& bank,
                                         std::span<const SampleFeatures> tests,
                                         std::span<const GroundTruthMask> masks,
                                         const PipelineConfig& base,
                                         const AblationOptions& options) {
  if (tests.empty() || tests.size() != masks.size()) {
    throw Error(ErrorCode::kInvalidArgument, "ablation needs one mask per test sample");
  }
  if (options.s_ref_grid.empty() || options.methods.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty ablation grid");
  }
  for (std::size_t s_ref : options.s_ref_grid) {
    if (s_ref < 1 || s_ref > bank.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "s_ref " + std::to_string(s_ref) + " outside [1, " +
                      std::to_string(bank.size()) + "]");
    }
  }
  std::vector<AblationRow> rows;
  for (SamplingMethod method : options.methods) {
    for (std::size_t s_ref : options.s_ref_grid) {
      PipelineConfig config = base;
      config.sampling = method;
      config.s_ref = s_ref;
      if (options.tie_sparsity) config.sparsity = std::max<std::size_t>(1, s_ref / 2);
      const auto maps = score_batch(bank, tests, config, options.threads);

      std::vector<ScoreGrid> scores;
      scores.reserve(maps.size());
      AblationRow row{method, s_ref, config.sparsity};
      for (const auto& m : maps) {
        scores.push_back(m.scores);
        row.coverage_error += coverage_error(bank.reference(), m.subset.indices);
        row.ms_per_sample += m.total_ms;
      }
      const auto n = static_cast<double>(maps.size());
      row.coverage_error /= n;
      row.ms_per_sample /= n;
      row.auroc = pixel_auroc(scores, masks);
      row.pro = pro_score(scores, masks, options.max_fpr);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string ablation_csv_row(const AblationRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.10g,%.10g,%.10g,%.6g", to_string(row.method),
                row.s_ref, row.auroc, row.pro, row.coverage_error, row.ms_per_sample);
  return buf;
}

nlohmann::json to_json(const AblationRow& row) {
  return {{"method", to_string(row.method)}, {"s_ref", row.s_ref},
          {"s", row.sparsity},               {"auroc", row.auroc},
          {"pro", row.pro},                  {"coverage_error", row.coverage_error},
          {"ms_per_sample", row.ms_per_sample}};
}

}  // namespace sgfr
