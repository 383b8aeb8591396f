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

/*
 * C interface to the sgfr library: sparse self-expressive reconstruction of
 * deep feature maps for anomaly localization.
 *
 * Objects are opaque handles created by sgfr_*_create/read/load/build and
 * released with the matching sgfr_*_free. Every fallible call returns an
 * sgfr_status; on failure sgfr_last_error() holds a message for the calling
 * thread. Strings returned through char** are released with
 * sgfr_string_free. All functions are safe to call concurrently on distinct
 * or shared read-only handles.
 */
#ifndef SGFR_SGFR_H_
#define SGFR_SGFR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SGFR_BUILDING_LIBRARY)
#define SGFR_API __attribute__((visibility("default")))
#else
#define SGFR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgfr_status {
  SGFR_OK = 0,
  SGFR_ERR_INVALID_ARGUMENT = 1,
  SGFR_ERR_IO = 2,
  SGFR_ERR_BAD_MAGIC = 3,
  SGFR_ERR_BAD_RANK = 4,
  SGFR_ERR_INVALID_SHAPE = 5,
  SGFR_ERR_DIMENSION_OVERFLOW = 6,
  SGFR_ERR_NON_FINITE = 7,
  SGFR_ERR_TRUNCATED = 8,
  SGFR_ERR_TRAILING_DATA = 9,
  SGFR_ERR_SHAPE_MISMATCH = 10,
  SGFR_ERR_MISSING_LEVEL = 11,
  SGFR_ERR_EMPTY_INPUT = 12,
  SGFR_ERR_NUMERICAL = 13,
  SGFR_ERR_INTERNAL = 14
} sgfr_status;

typedef enum sgfr_correlation { SGFR_CORR_ABSOLUTE = 0, SGFR_CORR_SIGNED = 1 } sgfr_correlation;
typedef enum sgfr_aggregation { SGFR_AGG_MEAN = 0, SGFR_AGG_SUM = 1 } sgfr_aggregation;
typedef enum sgfr_sampling {
  SGFR_SAMPLING_SUBSPACE = 0,
  SGFR_SAMPLING_RANDOM = 1,
  SGFR_SAMPLING_NEAREST = 2,
  SGFR_SAMPLING_FULL = 3
} sgfr_sampling;

typedef struct sgfr_tensor sgfr_tensor;
typedef struct sgfr_dictionary sgfr_dictionary;
typedef struct sgfr_sparse_code sgfr_sparse_code;
typedef struct sgfr_bank sgfr_bank;
typedef struct sgfr_anomaly_map sgfr_anomaly_map;

/* ---- status, version, strings ---------------------------------------- */

SGFR_API const char* sgfr_version(void);
SGFR_API const char* sgfr_status_string(sgfr_status status);
SGFR_API const char* sgfr_last_error(void);
/* Process exit code for a status: 0 ok, 1 usage, 2 data/format, 3 numerical. */
SGFR_API int sgfr_exit_code(sgfr_status status);
SGFR_API void sgfr_string_free(char* s);

/* ---- tensors ----------------------------------------------------------- */

/* data holds h*w*c floats in (y*w + x)*c + ch order. */
SGFR_API sgfr_status sgfr_tensor_create(uint32_t level, uint32_t h, uint32_t w, uint32_t c,
                                        const float* data, sgfr_tensor** out);
SGFR_API sgfr_status sgfr_tensor_read(const char* path, sgfr_tensor** out);
SGFR_API sgfr_status sgfr_tensor_write(const sgfr_tensor* t, const char* path);
SGFR_API void sgfr_tensor_shape(const sgfr_tensor* t, uint32_t* level, uint32_t* h,
                                uint32_t* w, uint32_t* c);
SGFR_API const float* sgfr_tensor_data(const sgfr_tensor* t, size_t* count);
SGFR_API void sgfr_tensor_free(sgfr_tensor* t);

/* ---- sparse reconstruction -------------------------------------------- */

typedef struct sgfr_omp_config {
  uint32_t sparsity;
  double epsilon;
  sgfr_correlation correlation;
  int normalize_columns;
} sgfr_omp_config;

SGFR_API void sgfr_omp_config_default(sgfr_omp_config* config);

/* columns: dim*n floats, column j at columns[j*dim]. */
SGFR_API sgfr_status sgfr_dictionary_create(size_t dim, size_t n, const float* columns,
                                            sgfr_dictionary** out);
SGFR_API void sgfr_dictionary_free(sgfr_dictionary* d);

/* candidates == NULL selects every column. */
SGFR_API sgfr_status sgfr_omp_solve(const sgfr_dictionary* d, const float* y, size_t dim,
                                    const size_t* candidates, size_t n_candidates,
                                    const sgfr_omp_config* config, sgfr_sparse_code** out);
/* Returns |support|; *support and *coefficients stay owned by the code. */
SGFR_API size_t sgfr_code_support(const sgfr_sparse_code* code, const size_t** support,
                                  const double** coefficients);
SGFR_API const double* sgfr_code_residual(const sgfr_sparse_code* code, size_t* dim);
SGFR_API double sgfr_code_residual_norm(const sgfr_sparse_code* code);
SGFR_API size_t sgfr_code_iterations(const sgfr_sparse_code* code);
SGFR_API int sgfr_code_degenerate(const sgfr_sparse_code* code);
SGFR_API void sgfr_code_free(sgfr_sparse_code* code);

/* ---- memory bank ------------------------------------------------------- */

/* Reads <id>_l<level>.sgt for every id found in feature_dir. l_ref == 0
 * selects the deepest requested level. */
SGFR_API sgfr_status sgfr_bank_build(const char* feature_dir, const uint32_t* levels,
                                     size_t n_levels, uint32_t l_ref, sgfr_bank** out);
/* Writes the tensors and manifest.json into dir. */
SGFR_API sgfr_status sgfr_bank_save(const sgfr_bank* bank, const char* dir);
SGFR_API sgfr_status sgfr_bank_load(const char* dir, sgfr_bank** out);
SGFR_API size_t sgfr_bank_size(const sgfr_bank* bank);
SGFR_API uint32_t sgfr_bank_ref_level(const sgfr_bank* bank);
SGFR_API sgfr_status sgfr_bank_manifest_json(const sgfr_bank* bank, char** out);
SGFR_API void sgfr_bank_free(sgfr_bank* bank);

/* Subset writers: out_indices must hold at least s_ref entries (N for FULL). */
SGFR_API sgfr_status sgfr_bank_sample(const sgfr_bank* bank, sgfr_sampling method,
                                      const sgfr_tensor* y_ref, size_t s_ref,
                                      const sgfr_omp_config* config, uint64_t seed,
                                      size_t* out_indices, size_t* out_count);
SGFR_API sgfr_status sgfr_bank_coverage_error(const sgfr_bank* bank, uint32_t level,
                                              const size_t* subset, size_t n, double* out);
SGFR_API sgfr_status sgfr_bank_nn_matching_error(const sgfr_bank* bank, uint32_t level,
                                                 const size_t* subset, size_t n,
                                                 double* out);

/* ---- scoring pipeline -------------------------------------------------- */

#define SGFR_MAX_LEVELS 8

typedef struct sgfr_pipeline_config {
  uint32_t scoring_levels[SGFR_MAX_LEVELS];
  size_t n_scoring_levels;
  uint32_t l_ref;
  uint32_t s_ref;
  uint32_t sparsity;
  double epsilon;
  uint32_t output_height;
  uint32_t output_width;
  double sigma;
  sgfr_aggregation aggregation;
  sgfr_correlation correlation;
  int normalize_columns;
  sgfr_sampling sampling;
  uint64_t seed;
  uint32_t threads;
} sgfr_pipeline_config;

SGFR_API void sgfr_pipeline_config_default(sgfr_pipeline_config* config);
SGFR_API sgfr_status sgfr_pipeline_config_validate(const sgfr_pipeline_config* config);
/* Resolved configuration as a JSON object. */
SGFR_API sgfr_status sgfr_pipeline_config_json(const sgfr_pipeline_config* config, char** out);

/* features: one tensor per level (at least l_ref and every scoring level). */
SGFR_API sgfr_status sgfr_score_sample(const sgfr_bank* bank, const sgfr_tensor* const* features,
                                       size_t n_features, const sgfr_pipeline_config* config,
                                       sgfr_anomaly_map** out);
SGFR_API const float* sgfr_map_scores(const sgfr_anomaly_map* map, uint32_t* h, uint32_t* w);
SGFR_API sgfr_status sgfr_map_report_json(const sgfr_anomaly_map* map, const char* sample_id,
                                          char** out);
SGFR_API sgfr_status sgfr_map_write_sgt(const sgfr_anomaly_map* map, const char* path);
SGFR_API sgfr_status sgfr_map_write_pgm(const sgfr_anomaly_map* map, const char* path);
SGFR_API void sgfr_map_free(sgfr_anomaly_map* map);

/* Scores every <id>_l<level>.sgt sample in features_dir on `threads` workers
 * and writes <id>_map.sgt, <id>_report.json (and <id>_map.pgm if write_pgm).
 * extra_json (may be NULL) is a JSON object merged into every report.
 * *out receives a JSON summary {"samples": [...]}. */
SGFR_API sgfr_status sgfr_score_directory(const sgfr_bank* bank, const char* features_dir,
                                          const char* out_dir,
                                          const sgfr_pipeline_config* config,
                                          uint32_t threads, int write_pgm,
                                          const char* extra_json, char** out);

/* ---- evaluation -------------------------------------------------------- */

/* scores[i] and masks[i] are h*w row-major arrays for sample i. */
SGFR_API sgfr_status sgfr_pixel_auroc(const float* const* scores, const uint8_t* const* masks,
                                      size_t n_samples, uint32_t h, uint32_t w, double* out);
SGFR_API sgfr_status sgfr_pro_score(const float* const* scores, const uint8_t* const* masks,
                                    size_t n_samples, uint32_t h, uint32_t w, double max_fpr,
                                    double* out);

/* Pairs <id>_map.sgt in scores_dir with <id>_mask.sgt in masks_dir.
 * *out receives {"auroc","pro","max_fpr","n_samples","pro_curve"}. */
SGFR_API sgfr_status sgfr_eval_directory(const char* scores_dir, const char* masks_dir,
                                         double max_fpr, char** out);

/* ---- synthetic data, ablation, timing --------------------------------- */

typedef struct sgfr_synth_spec {
  uint32_t level_ids[SGFR_MAX_LEVELS];
  uint32_t level_shapes[SGFR_MAX_LEVELS][3]; /* h, w, c */
  size_t n_levels;
  uint32_t subspace_dim;
  uint32_t n_subspaces;
  uint32_t points_per_subspace;
  uint32_t n_test;
  double noise_sigma;
  double anomaly_magnitude;
  double anomaly_fraction;
  uint32_t block_height;
  uint32_t block_width;
  uint32_t output_height;
  uint32_t output_width;
  uint64_t seed;
} sgfr_synth_spec;

SGFR_API void sgfr_synth_spec_default(sgfr_synth_spec* spec);
/* Writes nominal/, test/, masks/ and synth.json under out_dir. */
SGFR_API sgfr_status sgfr_synth_generate(const sgfr_synth_spec* spec, const char* out_dir);

/* Runs the sampling ablation on the test samples of features_dir with masks
 * from masks_dir. *out receives {"rows": [...], "csv": "..."}. */
SGFR_API sgfr_status sgfr_ablate(const sgfr_bank* bank, const char* features_dir,
                                 const char* masks_dir, const sgfr_pipeline_config* base,
                                 const uint32_t* s_ref_grid, size_t n_grid,
                                 const sgfr_sampling* methods, size_t n_methods,
                                 int tie_sparsity, uint32_t threads, char** out);

typedef struct sgfr_bench_spec {
  const uint32_t* bank_sizes;
  size_t n_bank_sizes;
  const uint32_t* s_ref_grid;
  size_t n_s_ref;
  uint32_t base_shape[3];
  uint32_t sparsity;
  uint32_t queries;
  uint64_t seed;
} sgfr_bench_spec;

/* *out receives {"rows": [...], "csv": "..."}. */
SGFR_API sgfr_status sgfr_bench(const sgfr_bench_spec* spec, char** out);

#ifdef __cplusplus
}
#endif

#endif /* SGFR_SGFR_H_ */
