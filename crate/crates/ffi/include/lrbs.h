#ifndef LRBS_H
#define LRBS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LrbsStatus {
  LRBS_STATUS_OK = 0,
  LRBS_STATUS_NULL_POINTER = 1,
  LRBS_STATUS_INVALID_ARGUMENT = 2,
  LRBS_STATUS_IO = 3,
  LRBS_STATUS_VALIDATION = 4,
  LRBS_STATUS_NUMERICAL = 5,
  LRBS_STATUS_PANIC = 6,
} LrbsStatus;

/**
 * Opaque trained model.
 */
typedef struct LrbsModel LrbsModel;

/**
 * Training options. `pca_energy <= 0` disables PCA.
 */
typedef struct LrbsTrainConfig {
  double lambda;
  size_t max_iters;
  double rel_tol;
  double eta0;
  double backtrack_shrink;
  uint64_t seed;
  double pca_energy;
} LrbsTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lrbs_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *lrbs_last_error_message(void);

struct LrbsTrainConfig lrbs_train_config_default(void);

/**
 * Loads a model file; on success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LrbsStatus lrbs_model_load(const char *path, struct LrbsModel **out);

/**
 * # Safety
 * `model` must come from this library and `path` be NUL-terminated.
 */
enum LrbsStatus lrbs_model_save(const struct LrbsModel *model, const char *path);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void lrbs_model_free(struct LrbsModel *model);

/**
 * Raw input dimensions and the shape of `M`.
 *
 * # Safety
 * All pointers must be valid; output pointers may be NULL to skip them.
 */
enum LrbsStatus lrbs_model_dims(const struct LrbsModel *model,
                                size_t *dim_x,
                                size_t *dim_z,
                                size_t *m_rows,
                                size_t *m_cols);

/**
 * Writes the `n_x x n_z` row-major score matrix `x_i^T M z_j` to `out`.
 *
 * # Safety
 * `x` holds `n_x * dim_x` doubles, `z` holds `n_z * dim_z` doubles and `out`
 * has room for `n_x * n_z`.
 */
enum LrbsStatus lrbs_model_score(const struct LrbsModel *model,
                                 const double *x,
                                 size_t n_x,
                                 const double *z,
                                 size_t n_z,
                                 double *out);

/**
 * Trains a model from labeled samples of both modalities.
 *
 * # Safety
 * `x` holds `n_x * dim_x` doubles and `x_labels` `n_x` labels (likewise for
 * `z`); `config` may be NULL for defaults; `out` must be valid;
 * `objective` may be NULL.
 */
enum LrbsStatus lrbs_train(const double *x,
                           const int64_t *x_labels,
                           size_t n_x,
                           size_t dim_x,
                           const double *z,
                           const int64_t *z_labels,
                           size_t n_z,
                           size_t dim_z,
                           const struct LrbsTrainConfig *config,
                           struct LrbsModel **out,
                           double *objective);

/**
 * Average precision of a ranked relevance list (nonzero bytes are relevant).
 *
 * # Safety
 * `relevance` holds `len` bytes and `out` is valid.
 */
enum LrbsStatus lrbs_average_precision(const uint8_t *relevance, size_t len, double *out);

/**
 * Singular value thresholding of a row-major `rows x cols` matrix.
 *
 * # Safety
 * `l` and `out` each hold `rows * cols` doubles; `rank` may be NULL.
 */
enum LrbsStatus lrbs_svt(const double *l,
                         size_t rows,
                         size_t cols,
                         double gamma,
                         double *out,
                         size_t *rank);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRBS_H */
