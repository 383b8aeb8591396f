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

#include "sgfr/sgfr.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <regex>
#include <string>

#include "json.hpp"
#include "sgfr/ablation.hpp"
#include "sgfr/bench.hpp"
#include "sgfr/error.hpp"
#include "sgfr/evaluation.hpp"
#include "sgfr/memory_bank.hpp"
#include "sgfr/omp.hpp"
#include "sgfr/pipeline.hpp"
#include "sgfr/synthetic.hpp"
#include "sgfr/tensor_io.hpp"
#include "sgfr/version.hpp"

struct sgfr_tensor {
  sgfr::FeatureTensor value;
};
struct sgfr_dictionary {
  sgfr::DictionaryMatrix value;
};
struct sgfr_sparse_code {
  sgfr::SparseCode value;
};
struct sgfr_bank {
  sgfr::MemoryBank value;
};
struct sgfr_anomaly_map {
  sgfr::AnomalyMap value;
};

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

thread_local std::string last_error;

sgfr_status to_status(sgfr::ErrorCode code) {
  using sgfr::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return SGFR_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return SGFR_ERR_IO;
    case ErrorCode::kBadMagic: return SGFR_ERR_BAD_MAGIC;
    case ErrorCode::kBadRank: return SGFR_ERR_BAD_RANK;
    case ErrorCode::kInvalidShape: return SGFR_ERR_INVALID_SHAPE;
    case ErrorCode::kDimensionOverflow: return SGFR_ERR_DIMENSION_OVERFLOW;
    case ErrorCode::kNonFinite: return SGFR_ERR_NON_FINITE;
    case ErrorCode::kTruncated: return SGFR_ERR_TRUNCATED;
    case ErrorCode::kTrailingData: return SGFR_ERR_TRAILING_DATA;
    case ErrorCode::kShapeMismatch: return SGFR_ERR_SHAPE_MISMATCH;
    case ErrorCode::kMissingLevel: return SGFR_ERR_MISSING_LEVEL;
    case ErrorCode::kEmptyInput: return SGFR_ERR_EMPTY_INPUT;
    case ErrorCode::kNumerical: return SGFR_ERR_NUMERICAL;
  }
  return SGFR_ERR_INTERNAL;
}

template <typename F>
sgfr_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return SGFR_OK;
  } catch (const sgfr::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    last_error = std::string("json: ") + e.what();
    return SGFR_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SGFR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SGFR_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return SGFR_ERR_INTERNAL;
  }
}

void require(bool condition, const char* what) {
  if (!condition) throw sgfr::Error(sgfr::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

sgfr::OmpConfig to_cpp(const sgfr_omp_config& c) {
  return {c.sparsity, c.epsilon,
          c.correlation == SGFR_CORR_SIGNED ? sgfr::CorrelationMode::kSigned
                                            : sgfr::CorrelationMode::kAbsolute,
          c.normalize_columns != 0};
}

sgfr::SamplingMethod to_cpp(sgfr_sampling s) {
  switch (s) {
    case SGFR_SAMPLING_SUBSPACE: return sgfr::SamplingMethod::kSubspace;
    case SGFR_SAMPLING_RANDOM: return sgfr::SamplingMethod::kRandom;
    case SGFR_SAMPLING_NEAREST: return sgfr::SamplingMethod::kNearest;
    case SGFR_SAMPLING_FULL: return sgfr::SamplingMethod::kFull;
  }
  throw sgfr::Error(sgfr::ErrorCode::kInvalidArgument, "unknown sampling method");
}

sgfr::PipelineConfig to_cpp(const sgfr_pipeline_config& c) {
  require(c.n_scoring_levels <= SGFR_MAX_LEVELS, "too many scoring levels");
  sgfr::PipelineConfig p;
  p.scoring_levels.assign(c.scoring_levels, c.scoring_levels + c.n_scoring_levels);
  p.ref_level = c.l_ref;
  p.s_ref = c.s_ref;
  p.sparsity = c.sparsity;
  p.epsilon = c.epsilon;
  p.output_height = c.output_height;
  p.output_width = c.output_width;
  p.sigma = c.sigma;
  p.aggregation = c.aggregation == SGFR_AGG_SUM ? sgfr::Aggregation::kSum : sgfr::Aggregation::kMean;
  p.correlation = c.correlation == SGFR_CORR_SIGNED ? sgfr::CorrelationMode::kSigned
                                                   : sgfr::CorrelationMode::kAbsolute;
  p.normalize_columns = c.normalize_columns != 0;
  p.sampling = to_cpp(c.sampling);
  p.seed = c.seed;
  p.threads = c.threads;
  return p;
}

std::vector<std::uint32_t> needed_levels(const sgfr::PipelineConfig& config) {
  std::vector<std::uint32_t> levels = config.scoring_levels;
  levels.push_back(config.ref_level);
  return levels;
}

sgfr::SampleFeatures load_sample(const fs::path& dir, const std::string& id,
                                 const std::vector<std::uint32_t>& levels) {
  sgfr::SampleFeatures features;
  for (std::uint32_t l : levels) {
    const fs::path path = dir / sgfr::feature_file_name(id, l);
    if (!fs::exists(path)) {
      throw sgfr::Error(sgfr::ErrorCode::kMissingLevel,
                        "sample '" + id + "' is missing level " + std::to_string(l));
    }
    features.emplace(l, sgfr::read_tensor(path));
  }
  return features;
}

std::vector<std::string> list_suffixed(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) {
    throw sgfr::Error(sgfr::ErrorCode::kIo, "directory not found: " + dir.string());
  }
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw sgfr::Error(sgfr::ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::vector<sgfr::GroundTruthMask> load_masks(const fs::path& dir,
                                              const std::vector<std::string>& ids) {
  std::vector<sgfr::GroundTruthMask> masks;
  for (const auto& id : ids) {
    const fs::path path = dir / (id + "_mask.sgt");
    if (!fs::exists(path)) {
      throw sgfr::Error(sgfr::ErrorCode::kIo, "no mask for sample '" + id + "'");
    }
    masks.push_back(sgfr::GroundTruthMask::from_tensor(sgfr::read_tensor(path)));
  }
  return masks;
}

std::vector<sgfr::ScoreGrid> wrap_scores(const float* const* scores, size_t n, uint32_t h,
                                         uint32_t w) {
  require(scores != nullptr && n > 0, "scores must be non-empty");
  std::vector<sgfr::ScoreGrid> grids;
  for (size_t i = 0; i < n; ++i) {
    require(scores[i] != nullptr, "null score map");
    sgfr::ScoreGrid g(h, w);
    std::copy(scores[i], scores[i] + g.values.size(), g.values.begin());
    grids.push_back(std::move(g));
  }
  return grids;
}

std::vector<sgfr::GroundTruthMask> wrap_masks(const uint8_t* const* masks, size_t n, uint32_t h,
                                              uint32_t w) {
  require(masks != nullptr, "masks must be non-null");
  std::vector<sgfr::GroundTruthMask> out;
  for (size_t i = 0; i < n; ++i) {
    require(masks[i] != nullptr, "null mask");
    out.emplace_back(h, w, std::vector<std::uint8_t>(masks[i], masks[i] + std::size_t{h} * w));
  }
  return out;
}

}  // namespace

extern "C" {

const char* sgfr_version(void) { return sgfr::version_string(); }

const char* sgfr_status_string(sgfr_status status) {
  switch (status) {
    case SGFR_OK: return "ok";
    case SGFR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SGFR_ERR_IO: return "i/o error";
    case SGFR_ERR_BAD_MAGIC: return "bad magic";
    case SGFR_ERR_BAD_RANK: return "unsupported rank";
    case SGFR_ERR_INVALID_SHAPE: return "invalid shape";
    case SGFR_ERR_DIMENSION_OVERFLOW: return "dimension overflow";
    case SGFR_ERR_NON_FINITE: return "non-finite value";
    case SGFR_ERR_TRUNCATED: return "truncated payload";
    case SGFR_ERR_TRAILING_DATA: return "trailing data";
    case SGFR_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case SGFR_ERR_MISSING_LEVEL: return "missing level";
    case SGFR_ERR_EMPTY_INPUT: return "empty input";
    case SGFR_ERR_NUMERICAL: return "numerical failure";
    case SGFR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sgfr_last_error(void) { return last_error.c_str(); }

int sgfr_exit_code(sgfr_status status) {
  switch (status) {
    case SGFR_OK: return 0;
    case SGFR_ERR_INVALID_ARGUMENT:
    case SGFR_ERR_EMPTY_INPUT: return 1;
    case SGFR_ERR_NUMERICAL:
    case SGFR_ERR_INTERNAL: return 3;
    default: return 2;
  }
}

void sgfr_string_free(char* s) { delete[] s; }

sgfr_status sgfr_tensor_create(uint32_t level, uint32_t h, uint32_t w, uint32_t c,
                               const float* data, sgfr_tensor** out) {
  return guarded([&] {
    require(data != nullptr && out != nullptr, "null argument");
    const std::size_t n = std::size_t{h} * w * c;
    *out = new sgfr_tensor{sgfr::FeatureTensor(level, {h, w, c}, std::vector<float>(data, data + n))};
  });
}

sgfr_status sgfr_tensor_read(const char* path, sgfr_tensor** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new sgfr_tensor{sgfr::read_tensor(path)};
  });
}

sgfr_status sgfr_tensor_write(const sgfr_tensor* t, const char* path) {
  return guarded([&] {
    require(t != nullptr && path != nullptr, "null argument");
    sgfr::write_tensor(t->value, path);
  });
}

void sgfr_tensor_shape(const sgfr_tensor* t, uint32_t* level, uint32_t* h, uint32_t* w,
                       uint32_t* c) {
  if (level) *level = t->value.level();
  if (h) *h = t->value.shape().height;
  if (w) *w = t->value.shape().width;
  if (c) *c = t->value.shape().channels;
}

const float* sgfr_tensor_data(const sgfr_tensor* t, size_t* count) {
  if (count) *count = t->value.data().size();
  return t->value.data().data();
}

void sgfr_tensor_free(sgfr_tensor* t) { delete t; }

void sgfr_omp_config_default(sgfr_omp_config* config) {
  const sgfr::OmpConfig d;
  config->sparsity = static_cast<uint32_t>(d.sparsity);
  config->epsilon = d.epsilon;
  config->correlation = SGFR_CORR_ABSOLUTE;
  config->normalize_columns = 1;
}

sgfr_status sgfr_dictionary_create(size_t dim, size_t n, const float* columns,
                                   sgfr_dictionary** out) {
  return guarded([&] {
    require(columns != nullptr && out != nullptr, "null argument");
    *out = new sgfr_dictionary{
        sgfr::DictionaryMatrix(dim, n, std::vector<float>(columns, columns + dim * n))};
  });
}

void sgfr_dictionary_free(sgfr_dictionary* d) { delete d; }

sgfr_status sgfr_omp_solve(const sgfr_dictionary* d, const float* y, size_t dim,
                           const size_t* candidates, size_t n_candidates,
                           const sgfr_omp_config* config, sgfr_sparse_code** out) {
  return guarded([&] {
    require(d != nullptr && y != nullptr && config != nullptr && out != nullptr, "null argument");
    const auto cand = candidates ? std::vector<std::size_t>(candidates, candidates + n_candidates)
                                 : sgfr::all_columns(d->value);
    *out = new sgfr_sparse_code{
        sgfr::omp_solve(std::span<const float>(y, dim), d->value, cand, to_cpp(*config))};
  });
}

size_t sgfr_code_support(const sgfr_sparse_code* code, const size_t** support,
                         const double** coefficients) {
  if (support) *support = code->value.support.data();
  if (coefficients) *coefficients = code->value.coefficients.data();
  return code->value.support.size();
}

const double* sgfr_code_residual(const sgfr_sparse_code* code, size_t* dim) {
  if (dim) *dim = code->value.residual.size();
  return code->value.residual.data();
}

double sgfr_code_residual_norm(const sgfr_sparse_code* code) { return code->value.residual_norm; }
size_t sgfr_code_iterations(const sgfr_sparse_code* code) { return code->value.iterations; }
int sgfr_code_degenerate(const sgfr_sparse_code* code) { return code->value.degenerate ? 1 : 0; }
void sgfr_code_free(sgfr_sparse_code* code) { delete code; }

sgfr_status sgfr_bank_build(const char* feature_dir, const uint32_t* levels, size_t n_levels,
                            uint32_t l_ref, sgfr_bank** out) {
  return guarded([&] {
    require(feature_dir != nullptr && levels != nullptr && out != nullptr, "null argument");
    std::optional<std::uint32_t> ref;
    if (l_ref != 0) ref = l_ref;
    *out = new sgfr_bank{
        sgfr::build_bank(feature_dir, std::span<const std::uint32_t>(levels, n_levels), ref)};
  });
}

sgfr_status sgfr_bank_save(const sgfr_bank* bank, const char* dir) {
  return guarded([&] {
    require(bank != nullptr && dir != nullptr, "null argument");
    sgfr::save_bank(bank->value, dir);
  });
}

sgfr_status sgfr_bank_load(const char* dir, sgfr_bank** out) {
  return guarded([&] {
    require(dir != nullptr && out != nullptr, "null argument");
    *out = new sgfr_bank{sgfr::load_bank(dir)};
  });
}

size_t sgfr_bank_size(const sgfr_bank* bank) { return bank->value.size(); }
uint32_t sgfr_bank_ref_level(const sgfr_bank* bank) { return bank->value.ref_level(); }

sgfr_status sgfr_bank_manifest_json(const sgfr_bank* bank, char** out) {
  return guarded([&] {
    require(bank != nullptr && out != nullptr, "null argument");
    *out = dup_string(bank->value.manifest().dump(2));
  });
}

void sgfr_bank_free(sgfr_bank* bank) { delete bank; }

sgfr_status sgfr_bank_sample(const sgfr_bank* bank, sgfr_sampling method, const sgfr_tensor* y_ref,
                             size_t s_ref, const sgfr_omp_config* config, uint64_t seed,
                             size_t* out_indices, size_t* out_count) {
  return guarded([&] {
    require(bank != nullptr && out_indices != nullptr && out_count != nullptr, "null argument");
    sgfr::SampledSubset subset;
    switch (to_cpp(method)) {
      case sgfr::SamplingMethod::kSubspace:
        require(y_ref != nullptr && config != nullptr, "subspace sampling needs y_ref and config");
        subset = sgfr::sample_subspace(bank->value, y_ref->value.data(), s_ref, to_cpp(*config));
        break;
      case sgfr::SamplingMethod::kNearest:
        require(y_ref != nullptr, "nearest sampling needs y_ref");
        subset = sgfr::sample_nearest(bank->value, y_ref->value.data(), s_ref);
        break;
      case sgfr::SamplingMethod::kRandom:
        subset = sgfr::sample_random(bank->value, s_ref, seed);
        break;
      case sgfr::SamplingMethod::kFull:
        subset = sgfr::sample_full(bank->value);
        break;
    }
    std::copy(subset.indices.begin(), subset.indices.end(), out_indices);
    *out_count = subset.indices.size();
  });
}

sgfr_status sgfr_bank_coverage_error(const sgfr_bank* bank, uint32_t level, const size_t* subset,
                                     size_t n, double* out) {
  return guarded([&] {
    require(bank != nullptr && subset != nullptr && out != nullptr, "null argument");
    *out = sgfr::coverage_error(bank->value, level, std::span<const std::size_t>(subset, n));
  });
}

sgfr_status sgfr_bank_nn_matching_error(const sgfr_bank* bank, uint32_t level,
                                        const size_t* subset, size_t n, double* out) {
  return guarded([&] {
    require(bank != nullptr && subset != nullptr && out != nullptr, "null argument");
    *out = sgfr::nn_matching_error(bank->value, level, std::span<const std::size_t>(subset, n));
  });
}

void sgfr_pipeline_config_default(sgfr_pipeline_config* config) {
  const sgfr::PipelineConfig d;
  *config = sgfr_pipeline_config{};
  for (size_t i = 0; i < d.scoring_levels.size(); ++i) config->scoring_levels[i] = d.scoring_levels[i];
  config->n_scoring_levels = d.scoring_levels.size();
  config->l_ref = d.ref_level;
  config->s_ref = static_cast<uint32_t>(d.s_ref);
  config->sparsity = static_cast<uint32_t>(d.sparsity);
  config->epsilon = d.epsilon;
  config->output_height = d.output_height;
  config->output_width = d.output_width;
  config->sigma = d.sigma;
  config->aggregation = SGFR_AGG_MEAN;
  config->correlation = SGFR_CORR_ABSOLUTE;
  config->normalize_columns = 1;
  config->sampling = SGFR_SAMPLING_SUBSPACE;
  config->seed = d.seed;
  config->threads = 1;
}

sgfr_status sgfr_pipeline_config_validate(const sgfr_pipeline_config* config) {
  return guarded([&] {
    require(config != nullptr, "null argument");
    to_cpp(*config).validate();
  });
}

sgfr_status sgfr_pipeline_config_json(const sgfr_pipeline_config* config, char** out) {
  return guarded([&] {
    require(config != nullptr && out != nullptr, "null argument");
    *out = dup_string(to_cpp(*config).to_json().dump());
  });
}

sgfr_status sgfr_score_sample(const sgfr_bank* bank, const sgfr_tensor* const* features,
                              size_t n_features, const sgfr_pipeline_config* config,
                              sgfr_anomaly_map** out) {
  return guarded([&] {
    require(bank != nullptr && features != nullptr && config != nullptr && out != nullptr,
            "null argument");
    sgfr::SampleFeatures sample;
    for (size_t i = 0; i < n_features; ++i) {
      require(features[i] != nullptr, "null feature tensor");
      sample.emplace(features[i]->value.level(), features[i]->value);
    }
    *out = new sgfr_anomaly_map{sgfr::score_sample(bank->value, sample, to_cpp(*config))};
  });
}

const float* sgfr_map_scores(const sgfr_anomaly_map* map, uint32_t* h, uint32_t* w) {
  if (h) *h = map->value.scores.height;
  if (w) *w = map->value.scores.width;
  return map->value.scores.values.data();
}

sgfr_status sgfr_map_report_json(const sgfr_anomaly_map* map, const char* sample_id, char** out) {
  return guarded([&] {
    require(map != nullptr && out != nullptr, "null argument");
    *out = dup_string(map->value.report(sample_id ? sample_id : "").dump(2));
  });
}

sgfr_status sgfr_map_write_sgt(const sgfr_anomaly_map* map, const char* path) {
  return guarded([&] {
    require(map != nullptr && path != nullptr, "null argument");
    sgfr::write_tensor(map->value.to_tensor(), path);
  });
}

sgfr_status sgfr_map_write_pgm(const sgfr_anomaly_map* map, const char* path) {
  return guarded([&] {
    require(map != nullptr && path != nullptr, "null argument");
    sgfr::write_pgm16(map->value.scores, path);
  });
}

void sgfr_map_free(sgfr_anomaly_map* map) { delete map; }

sgfr_status sgfr_score_directory(const sgfr_bank* bank, const char* features_dir,
                                 const char* out_dir, const sgfr_pipeline_config* config,
                                 uint32_t threads, int write_pgm, const char* extra_json,
                                 char** out) {
  return guarded([&] {
    require(bank != nullptr && features_dir != nullptr && out_dir != nullptr &&
                config != nullptr,
            "null argument");
    const sgfr::PipelineConfig cfg = to_cpp(*config);
    cfg.validate();
    const json extra = extra_json ? json::parse(extra_json) : json::object();
    require(extra.is_object(), "extra_json must be a JSON object");

    const auto ids = sgfr::list_feature_ids(features_dir);
    if (ids.empty()) {
      throw sgfr::Error(sgfr::ErrorCode::kEmptyInput,
                        std::string("no test samples in ") + features_dir);
    }
    const auto levels = needed_levels(cfg);
    std::vector<sgfr::SampleFeatures> samples;
    for (const auto& id : ids) samples.push_back(load_sample(features_dir, id, levels));
    const auto maps = sgfr::score_batch(bank->value, samples, cfg, threads);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw sgfr::Error(sgfr::ErrorCode::kIo, std::string("cannot create ") + out_dir);
    json summary = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const fs::path base = fs::path(out_dir) / ids[i];
      sgfr::write_tensor(maps[i].to_tensor(), base.string() + "_map.sgt");
      if (write_pgm) sgfr::write_pgm16(maps[i].scores, base.string() + "_map.pgm");
      json report = maps[i].report(ids[i]);
      report.update(extra);
      write_text(base.string() + "_report.json", report.dump(2) + "\n");
      summary.push_back({{"sample_id", ids[i]}, {"max_score", maps[i].scores.max()}});
    }
    if (out) *out = dup_string(json{{"samples", summary}}.dump(2));
  });
}

sgfr_status sgfr_pixel_auroc(const float* const* scores, const uint8_t* const* masks,
                             size_t n_samples, uint32_t h, uint32_t w, double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = sgfr::pixel_auroc(wrap_scores(scores, n_samples, h, w),
                             wrap_masks(masks, n_samples, h, w));
  });
}

sgfr_status sgfr_pro_score(const float* const* scores, const uint8_t* const* masks,
                           size_t n_samples, uint32_t h, uint32_t w, double max_fpr,
                           double* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = sgfr::pro_score(wrap_scores(scores, n_samples, h, w),
                           wrap_masks(masks, n_samples, h, w), max_fpr);
  });
}

sgfr_status sgfr_eval_directory(const char* scores_dir, const char* masks_dir, double max_fpr,
                                char** out) {
  return guarded([&] {
    require(scores_dir != nullptr && masks_dir != nullptr && out != nullptr, "null argument");
    const auto ids = list_suffixed(scores_dir, "_map.sgt");
    if (ids.empty()) {
      throw sgfr::Error(sgfr::ErrorCode::kEmptyInput,
                        std::string("no <id>_map.sgt files in ") + scores_dir);
    }
    std::vector<sgfr::ScoreGrid> scores;
    for (const auto& id : ids) {
      const auto t = sgfr::read_tensor(fs::path(scores_dir) / (id + "_map.sgt"));
      require(t.shape().channels == 1, "score maps must have one channel");
      sgfr::ScoreGrid g(t.shape().height, t.shape().width);
      std::copy(t.data().begin(), t.data().end(), g.values.begin());
      scores.push_back(std::move(g));
    }
    const auto masks = load_masks(masks_dir, ids);
    json report = sgfr::evaluate(scores, masks, max_fpr).to_json();
    report["sample_ids"] = ids;
    *out = dup_string(report.dump(2));
  });
}

void sgfr_synth_spec_default(sgfr_synth_spec* spec) {
  const sgfr::SyntheticSpec d;
  *spec = sgfr_synth_spec{};
  for (size_t i = 0; i < d.levels.size(); ++i) {
    spec->level_ids[i] = d.levels[i].level;
    spec->level_shapes[i][0] = d.levels[i].shape.height;
    spec->level_shapes[i][1] = d.levels[i].shape.width;
    spec->level_shapes[i][2] = d.levels[i].shape.channels;
  }
  spec->n_levels = d.levels.size();
  spec->subspace_dim = d.subspace_dim;
  spec->n_subspaces = d.n_subspaces;
  spec->points_per_subspace = d.points_per_subspace;
  spec->n_test = d.n_test;
  spec->noise_sigma = d.noise_sigma;
  spec->anomaly_magnitude = d.anomaly_magnitude;
  spec->anomaly_fraction = d.anomaly_fraction;
  spec->block_height = d.block_height;
  spec->block_width = d.block_width;
  spec->output_height = d.output_height;
  spec->output_width = d.output_width;
  spec->seed = d.seed;
}

sgfr_status sgfr_synth_generate(const sgfr_synth_spec* spec, const char* out_dir) {
  return guarded([&] {
    require(spec != nullptr && out_dir != nullptr, "null argument");
    require(spec->n_levels >= 1 && spec->n_levels <= SGFR_MAX_LEVELS, "bad level count");
    sgfr::SyntheticSpec s;
    s.levels.clear();
    for (size_t i = 0; i < spec->n_levels; ++i) {
      s.levels.push_back({spec->level_ids[i],
                          {spec->level_shapes[i][0], spec->level_shapes[i][1],
                           spec->level_shapes[i][2]}});
    }
    s.subspace_dim = spec->subspace_dim;
    s.n_subspaces = spec->n_subspaces;
    s.points_per_subspace = spec->points_per_subspace;
    s.n_test = spec->n_test;
    s.noise_sigma = spec->noise_sigma;
    s.anomaly_magnitude = spec->anomaly_magnitude;
    s.anomaly_fraction = spec->anomaly_fraction;
    s.block_height = spec->block_height;
    s.block_width = spec->block_width;
    s.output_height = spec->output_height;
    s.output_width = spec->output_width;
    s.seed = spec->seed;
    sgfr::write_synthetic(sgfr::gen_synthetic(s), out_dir);
  });
}

sgfr_status sgfr_ablate(const sgfr_bank* bank, const char* features_dir, const char* masks_dir,
                        const sgfr_pipeline_config* base, const uint32_t* s_ref_grid,
                        size_t n_grid, const sgfr_sampling* methods, size_t n_methods,
                        int tie_sparsity, uint32_t threads, char** out) {
  return guarded([&] {
    require(bank != nullptr && features_dir != nullptr && masks_dir != nullptr &&
                base != nullptr && s_ref_grid != nullptr && methods != nullptr && out != nullptr,
            "null argument");
    const sgfr::PipelineConfig cfg = to_cpp(*base);
    const auto ids = sgfr::list_feature_ids(features_dir);
    if (ids.empty()) {
      throw sgfr::Error(sgfr::ErrorCode::kEmptyInput,
                        std::string("no test samples in ") + features_dir);
    }
    const auto levels = needed_levels(cfg);
    std::vector<sgfr::SampleFeatures> samples;
    for (const auto& id : ids) samples.push_back(load_sample(features_dir, id, levels));
    const auto masks = load_masks(masks_dir, ids);

    sgfr::AblationOptions options;
    options.s_ref_grid.assign(s_ref_grid, s_ref_grid + n_grid);
    options.methods.clear();
    for (size_t i = 0; i < n_methods; ++i) options.methods.push_back(to_cpp(methods[i]));
    options.tie_sparsity = tie_sparsity != 0;
    options.threads = threads;
    const auto rows = sgfr::ablate_sampling(bank->value, samples, masks, cfg, options);

    json jrows = json::array();
    std::string csv = std::string(sgfr::kAblationCsvHeader) + "\n";
    for (const auto& r : rows) {
      jrows.push_back(sgfr::to_json(r));
      csv += sgfr::ablation_csv_row(r) + "\n";
    }
    *out = dup_string(json{{"rows", jrows}, {"csv", csv}}.dump(2));
  });
}

sgfr_status sgfr_bench(const sgfr_bench_spec* spec, char** out) {
  return guarded([&] {
    require(spec != nullptr && out != nullptr, "null argument");
    require(spec->bank_sizes != nullptr && spec->s_ref_grid != nullptr, "null grid");
    sgfr::BenchSpec b;
    b.bank_sizes.assign(spec->bank_sizes, spec->bank_sizes + spec->n_bank_sizes);
    b.s_ref_grid.assign(spec->s_ref_grid, spec->s_ref_grid + spec->n_s_ref);
    b.base_shape = {spec->base_shape[0], spec->base_shape[1], spec->base_shape[2]};
    b.sparsity = spec->sparsity;
    b.queries = spec->queries;
    b.seed = spec->seed;
    const auto rows = sgfr::run_bench(b);
    json jrows = json::array();
    std::string csv = std::string(sgfr::kBenchCsvHeader) + "\n";
    for (const auto& r : rows) {
      jrows.push_back(sgfr::to_json(r));
      char line[160];
      std::snprintf(line, sizeof line, "%zu,%zu,%zu,%zu,%.4f,%.4f,%.4f\n", r.n, r.dim, r.s_ref,
                    r.sparsity, r.ms_with, r.ms_without, r.ratio());
      csv += line;
    }
    *out = dup_string(json{{"rows", jrows}, {"csv", csv}, {"spec", b.to_json()}}.dump(2));
  });
}

}  // extern "C"
