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

#include "sgfr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#include "sgfr/error.hpp"
#include "sgfr/linalg.hpp"

namespace sgfr {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i = std::abs(i) % period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

const FeatureTensor& feature_at(const SampleFeatures& features, const MemoryBank& bank,
                                std::uint32_t level) {
  const auto it = features.find(level);
  if (it == features.end()) {
    throw Error(ErrorCode::kMissingLevel,
                "test sample has no features at level " + std::to_string(level));
  }
  const auto& expected = bank.level(level).shape;
  if (it->second.shape() != expected) {
    throw Error(ErrorCode::kShapeMismatch,
                "level " + std::to_string(level) + " test features are " +
                    to_string(it->second.shape()) + " but the bank holds " +
                    to_string(expected));
  }
  return it->second;
}

struct LevelOutput {
  LevelScore score;
  ScoreGrid upsampled;
};

LevelOutput solve_level(const MemoryBank& bank, const FeatureTensor& feature,
                        std::span<const std::size_t> candidates, const OmpConfig& omp,
                        const PipelineConfig& config) {
  const auto start = Clock::now();
  const auto& entry = bank.level(feature.level());
  const SparseCode code = omp_solve(feature.data(), entry.matrix, candidates, omp);
  LevelOutput out;
  out.score.level = feature.level();
  out.score.grid = residual_to_scores(code.residual, entry.shape);
  out.upsampled =
      upsample_bilinear(out.score.grid, config.output_height, config.output_width);
  out.score.residual_norm = code.residual_norm;
  out.score.iterations = code.iterations;
  out.score.degenerate = code.degenerate;
  out.score.elapsed_ms = ms_since(start);
  return out;
}

}  // namespace

const char* to_string(Aggregation aggregation) noexcept {
  return aggregation == Aggregation::kSum ? "sum" : "mean";
}

Aggregation parse_aggregation(const std::string& name) {
  if (name == "mean") return Aggregation::kMean;
  if (name == "sum") return Aggregation::kSum;
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregation '" + name + "'");
}

void PipelineConfig::validate() const {
  if (scoring_levels.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one scoring level is required");
  }
  for (std::uint32_t l : scoring_levels) {
    if (l >= ref_level) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scoring level " + std::to_string(l) +
                      " must be below the reference level " + std::to_string(ref_level));
    }
  }
  if (std::set<std::uint32_t>(scoring_levels.begin(), scoring_levels.end()).size() !=
      scoring_levels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate scoring level");
  }
  if (s_ref < 1 || sparsity < 1) {
    throw Error(ErrorCode::kInvalidArgument, "s and s_ref must be >= 1");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  }
  if (output_height == 0 || output_width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "output size must be positive");
  }
  omp().validate();
}

OmpConfig PipelineConfig::omp() const {
  return OmpConfig{sparsity, epsilon, correlation, normalize_columns};
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"scoring_levels", scoring_levels},
          {"l_ref", ref_level},
          {"s_ref", s_ref},
          {"s", sparsity},
          {"eps", epsilon},
          {"output_size", {output_height, output_width}},
          {"sigma", sigma},
          {"agg", to_string(aggregation)},
          {"corr", correlation == CorrelationMode::kAbsolute ? "abs" : "signed"},
          {"normalize", normalize_columns},
          {"sampling", to_string(sampling)},
          {"seed", seed}};
}

float ScoreGrid::max() const {
  return values.empty() ? 0.0f : *std::max_element(values.begin(), values.end());
}

nlohmann::json AnomalyMap::report(const std::string& sample_id) const {
  nlohmann::json levels = nlohmann::json::object();
  nlohmann::json level_ms = nlohmann::json::object();
  for (const auto& l : per_level) {
    const std::string key = std::to_string(l.level);
    levels[key] = {{"residual_norm", l.residual_norm},
                   {"iterations", l.iterations},
                   {"degenerate", l.degenerate}};
    level_ms[key] = l.elapsed_ms;
  }
  return {{"sample_id", sample_id},
          {"sampling", to_string(subset.method)},
          {"subset_indices", subset.indices},
          {"per_level", levels},
          {"max_score", scores.max()},
          {"timing_ms", {{"sampling", sampling_ms}, {"per_level", level_ms}, {"total", total_ms}}}};
}

FeatureTensor AnomalyMap::to_tensor() const {
  return FeatureTensor(0, TensorShape{scores.height, scores.width, 1}, scores.values);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

AnomalyMap score_sample(const MemoryBank& bank, const SampleFeatures& features,
                        const PipelineConfig& config, std::uint64_t sample_key) {
  const auto start = Clock::now();
  config.validate();
  if (bank.ref_level() != config.ref_level) {
    throw Error(ErrorCode::kInvalidArgument,
                "bank reference level is " + std::to_string(bank.ref_level()) +
                    ", config asks for " + std::to_string(config.ref_level));
  }
  std::vector<const FeatureTensor*> inputs;
  for (std::uint32_t l : config.scoring_levels) {
    if (!bank.has_level(l)) {
      throw Error(ErrorCode::kMissingLevel,
                  "scoring level " + std::to_string(l) + " is not in the memory bank");
    }
    inputs.push_back(&feature_at(features, bank, l));
  }

  AnomalyMap map;
  const auto sampling_start = Clock::now();
  const OmpConfig omp = config.omp();
  const std::size_t s_ref = std::min(config.s_ref, bank.size());
  switch (config.sampling) {
    case SamplingMethod::kSubspace:
      map.subset = sample_subspace(
          bank, feature_at(features, bank, config.ref_level).data(), s_ref, omp);
      break;
    case SamplingMethod::kNearest:
      map.subset = sample_nearest(
          bank, feature_at(features, bank, config.ref_level).data(), s_ref);
      break;
    case SamplingMethod::kRandom:
      map.subset = sample_random(bank, s_ref, mix_seed(config.seed, sample_key));
      break;
    case SamplingMethod::kFull:
      map.subset = sample_full(bank);
      break;
  }
  map.sampling_ms = ms_since(sampling_start);

  std::vector<LevelOutput> outputs(inputs.size());
  if (config.threads > 1 && inputs.size() > 1) {
    std::vector<std::future<LevelOutput>> jobs;
    for (const FeatureTensor* in : inputs) {
      jobs.push_back(std::async(std::launch::async, [&, in] {
        return solve_level(bank, *in, map.subset.indices, omp, config);
      }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) outputs[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      outputs[i] = solve_level(bank, *inputs[i], map.subset.indices, omp, config);
    }
  }

  // Reduction runs in scoring-level order whatever the thread count.
  std::vector<ScoreGrid> grids;
  grids.reserve(outputs.size());
  for (auto& out : outputs) {
    grids.push_back(std::move(out.upsampled));
    map.per_level.push_back(std::move(out.score));
  }
  map.scores = gaussian_smooth(aggregate_levels(grids, config.aggregation), config.sigma);
  map.total_ms = ms_since(start);
  return map;
}

std::vector<AnomalyMap> score_batch(const MemoryBank& bank,
                                    std::span<const SampleFeatures> samples,
                                    const PipelineConfig& config, unsigned threads) {
  std::vector<AnomalyMap> maps(samples.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(samples.size())));
  PipelineConfig inner = config;
  if (workers > 1) inner.threads = 1;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      try {
        maps[i] = score_sample(bank, samples[i], inner, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return maps;
}

ScoreGrid residual_to_scores(std::span<const double> residual, const TensorShape& shape) {
  if (residual.size() != shape.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "residual has " + std::to_string(residual.size()) +
                    " entries, shape " + to_string(shape) + " needs " +
                    std::to_string(shape.size()));
  }
  ScoreGrid grid(shape.height, shape.width);
  for (std::size_t p = 0; p < shape.pixels(); ++p) {
    grid.values[p] = static_cast<float>(
        linalg::norm(residual.subspan(p * shape.channels, shape.channels)));
  }
  return grid;
}

ScoreGrid upsample_bilinear(const ScoreGrid& grid, std::uint32_t height,
                            std::uint32_t width) {
  if (grid.height == 0 || grid.width == 0) {
    throw Error(ErrorCode::kInvalidShape, "cannot upsample an empty grid");
  }
  auto source = [](std::uint32_t dst, std::uint32_t src_n, std::uint32_t dst_n) {
    return dst_n > 1 ? static_cast<double>(dst) * (src_n - 1) / (dst_n - 1) : 0.0;
  };
  ScoreGrid out(height, width);
  for (std::uint32_t y = 0; y < height; ++y) {
    const double sy = source(y, grid.height, height);
    const auto y0 = static_cast<std::uint32_t>(sy);
    const std::uint32_t y1 = std::min(y0 + 1, grid.height - 1);
    const double fy = sy - y0;
    for (std::uint32_t x = 0; x < width; ++x) {
      const double sx = source(x, grid.width, width);
      const auto x0 = static_cast<std::uint32_t>(sx);
      const std::uint32_t x1 = std::min(x0 + 1, grid.width - 1);
      const double fx = sx - x0;
      const double top = (1.0 - fx) * grid.at(y0, x0) + fx * grid.at(y0, x1);
      const double bottom = (1.0 - fx) * grid.at(y1, x0) + fx * grid.at(y1, x1);
      out.at(y, x) = static_cast<float>((1.0 - fy) * top + fy * bottom);
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

ScoreGrid gaussian_smooth(const ScoreGrid& grid, double sigma) {
  const auto taps = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::size_t h = grid.height;
  const std::size_t w = grid.width;
  std::vector<double> rows(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const std::size_t xs = reflect(static_cast<std::ptrdiff_t>(x) + k, w);
        acc += taps[static_cast<std::size_t>(k + radius)] * grid.values[y * w + xs];
      }
      rows[y * w + x] = acc;
    }
  }
  ScoreGrid out(grid.height, grid.width);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const std::size_t ys = reflect(static_cast<std::ptrdiff_t>(y) + k, h);
        acc += taps[static_cast<std::size_t>(k + radius)] * rows[ys * w + x];
      }
      out.values[y * w + x] = static_cast<float>(acc);
    }
  }
  return out;
}

ScoreGrid aggregate_levels(std::span<const ScoreGrid> grids, Aggregation mode) {
  if (grids.empty()) throw Error(ErrorCode::kEmptyInput, "no grids to aggregate");
  const auto& first = grids.front();
  std::vector<double> acc(first.values.size(), 0.0);
  for (const auto& g : grids) {
    if (g.height != first.height || g.width != first.width) {
      throw Error(ErrorCode::kShapeMismatch, "cannot aggregate grids of different sizes");
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g.values[i];
  }
  const double scale =
      mode == Aggregation::kMean ? 1.0 / static_cast<double>(grids.size()) : 1.0;
  ScoreGrid out(first.height, first.width);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out.values[i] = static_cast<float>(acc[i] * scale);
  }
  return out;
}

void write_pgm16(const ScoreGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  out << "P5\n" << grid.width << " " << grid.height << "\n65535\n";
  const double peak = grid.max();
  for (float v : grid.values) {
    const double scaled = peak > 0.0 ? std::round(65535.0 * v / peak) : 0.0;
    const auto q = static_cast<std::uint16_t>(std::clamp(scaled, 0.0, 65535.0));
    const char be[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    out.write(be, 2);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace sgfr
