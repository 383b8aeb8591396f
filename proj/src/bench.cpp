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

#include "sgfr/bench.hpp"

#include <algorithm>

#include "sgfr/error.hpp"
#include "sgfr/log.hpp"
#include "sgfr/pipeline.hpp"
#include "sgfr/synthetic.hpp"

namespace sgfr {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

nlohmann::json BenchSpec::to_json() const {
  return {{"bank_sizes", bank_sizes},
          {"s_ref_grid", s_ref_grid},
          {"base_shape", {base_shape.height, base_shape.width, base_shape.channels}},
          {"s", sparsity},
          {"queries", queries},
          {"subspace_dim", subspace_dim},
          {"n_subspaces", n_subspaces},
          {"seed", seed}};
}

std::vector<BenchRow> run_bench(const BenchSpec& spec) {
  if (spec.bank_sizes.empty() || spec.s_ref_grid.empty() || spec.queries == 0) {
    throw Error(ErrorCode::kInvalidArgument, "bench grids must be non-empty");
  }
  for (std::size_t n : spec.bank_sizes) {
    for (std::size_t s_ref : spec.s_ref_grid) {
      if (s_ref < 1 || s_ref > n) {
        throw Error(ErrorCode::kInvalidArgument,
                    "s_ref " + std::to_string(s_ref) + " invalid for bank size " +
                        std::to_string(n));
      }
    }
  }
  std::vector<BenchRow> rows;
  for (std::size_t n : spec.bank_sizes) {
    SyntheticSpec synth;
    synth.levels = SyntheticSpec::halving_chain(2, spec.base_shape, 3);
    synth.subspace_dim = spec.subspace_dim;
    synth.n_subspaces = spec.n_subspaces;
    synth.points_per_subspace =
        static_cast<std::uint32_t>((n + spec.n_subspaces - 1) / spec.n_subspaces);
    synth.n_test = static_cast<std::uint32_t>(spec.queries);
    synth.block_height = std::max(1u, spec.base_shape.height / 4);
    synth.block_width = std::max(1u, spec.base_shape.width / 4);
    synth.seed = spec.seed + n;
    auto data = gen_synthetic(synth);
    data.nominal.resize(n);
    const MemoryBank bank = data.bank();

    for (std::size_t s_ref : spec.s_ref_grid) {
      PipelineConfig config;
      config.s_ref = s_ref;
      config.sparsity = spec.sparsity;
      std::vector<double> with;
      std::vector<double> without;
      for (const auto& q : data.test) {
        config.sampling = SamplingMethod::kSubspace;
        with.push_back(score_sample(bank, q.features, config).total_ms);
        config.sampling = SamplingMethod::kFull;
        without.push_back(score_sample(bank, q.features, config).total_ms);
      }
      BenchRow row{n, spec.base_shape.size(), s_ref, spec.sparsity, median(with),
                   median(without)};
      log::info("bench N=" + std::to_string(n) + " s_ref=" + std::to_string(s_ref) +
                " with=" + std::to_string(row.ms_with) +
                "ms without=" + std::to_string(row.ms_without) + "ms");
      rows.push_back(row);
    }
  }
  return rows;
}

nlohmann::json to_json(const BenchRow& row) {
  return {{"n", row.n},           {"dim", row.dim},
          {"s_ref", row.s_ref},   {"s", row.sparsity},
          {"ms_with", row.ms_with}, {"ms_without", row.ms_without},
          {"ratio", row.ratio()}};
}

}  // namespace sgfr
