#ifndef TRIFUSE_H
#define TRIFUSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TfStatus {
  TF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TF_STATUS_NULL_ARGUMENT = 1,
  TF_STATUS_CONFIG = 2,
  TF_STATUS_DATA = 3,
  TF_STATUS_NUMERIC = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  TF_STATUS_INVALID_STRING = 5,
  /**
   * The library panicked; the handle involved should not be reused.
   */
  TF_STATUS_INTERNAL = 6,
} TfStatus;

/**
 * Opaque autoencoder.
 */
typedef struct TfAutoencoder TfAutoencoder;

/**
 * Opaque pipeline configuration.
 */
typedef struct TfConfig TfConfig;

/**
 * Opaque fitted Gaussian mixture.
 */
typedef struct TfGmm TfGmm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *tf_last_error_message(void);

/**
 * Min-max normalizes `n` scores into `out` (equal scores map to 0.5).
 *
 * # Safety
 * `scores` and `out` must point to `n` readable/writable doubles.
 */
enum TfStatus tf_min_max_normalize(const double *scores, size_t n, double *out);

/**
 * Inverted min-max normalization: the lowest score maps to 1.
 *
 * # Safety
 * As for [`tf_min_max_normalize`].
 */
enum TfStatus tf_min_max_invert_normalize(const double *scores, size_t n, double *out);

/**
 * Magnitude histogram of the `w`x`h` box at (`x`,`y`) in a row-major flow
 * field of interleaved (dx, dy) pairs. Writes `n_bins + 1` values.
 *
 * # Safety
 * `flow` must hold `2 * width * height` floats and `out` `out_len` doubles.
 */
enum TfStatus tf_hmof(const float *flow,
                      uint32_t width,
                      uint32_t height,
                      uint32_t x,
                      uint32_t y,
                      uint32_t w,
                      uint32_t h,
                      size_t n_bins,
                      double magnitude_cap,
                      double *out,
                      size_t out_len);

/**
 * Fits a `k`-component diagonal mixture to `n` row-major samples of `dim`
 * values with the default iteration limits.
 *
 * # Safety
 * `samples` must hold `n * dim` doubles; `out` must be writable.
 */
enum TfStatus tf_gmm_fit(const double *samples,
                         size_t n,
                         size_t dim,
                         size_t k,
                         uint64_t seed,
                         struct TfGmm **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TfStatus tf_gmm_load(const char *path, struct TfGmm **out);

/**
 * # Safety
 * `gmm` must come from this library; `path` must be NUL-terminated.
 */
enum TfStatus tf_gmm_save(const struct TfGmm *gmm, const char *path);

/**
 * # Safety
 * `gmm` must come from this library; `dim` and `k` must be writable.
 */
enum TfStatus tf_gmm_shape(const struct TfGmm *gmm, size_t *k, size_t *dim);

/**
 * Log density of one point.
 *
 * # Safety
 * `x` must hold `dim` doubles; `out` must be writable.
 */
enum TfStatus tf_gmm_log_likelihood(const struct TfGmm *gmm,
                                    const double *x,
                                    size_t dim,
                                    double *out);

/**
 * # Safety
 * `gmm` must be null or come from this library, and not be used afterwards.
 */
void tf_gmm_free(struct TfGmm *gmm);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TfStatus tf_autoencoder_load(const char *path, struct TfAutoencoder **out);

/**
 * # Safety
 * `ae` must come from this library; `out` must be writable.
 */
enum TfStatus tf_autoencoder_input_width(const struct TfAutoencoder *ae, size_t *out);

/**
 * Reconstruction of `x`; input and output hold the model's input width.
 *
 * # Safety
 * `x` and `out` must each hold `len` doubles.
 */
enum TfStatus tf_autoencoder_reconstruct(const struct TfAutoencoder *ae,
                                         const double *x,
                                         size_t len,
                                         double *out);

/**
 * # Safety
 * `ae` must be null or come from this library, and not be used afterwards.
 */
void tf_autoencoder_free(struct TfAutoencoder *ae);

/**
 * Weighted max of the normalized branch scores that are present; pass null
 * for a missing branch.
 *
 * # Safety
 * Each non-null score pointer must reference one double; `out` must be writable.
 */
enum TfStatus tf_fuse_raw(const double *obj,
                          const double *act,
                          const double *mot,
                          double w_obj,
                          double w_act,
                          double w_mot,
                          double *out);

/**
 * Frame-level ROC AUC and EER over `n` frames; `labels[i]` is non-zero for
 * abnormal frames. Either output may be null.
 *
 * # Safety
 * `scores` and `labels` must each hold `n` elements.
 */
enum TfStatus tf_roc_auc_eer(const double *scores,
                             const uint8_t *labels,
                             size_t n,
                             double *auc_out,
                             double *eer_out);

/**
 * Configuration of a named preset ("umn" or "ped2").
 *
 * # Safety
 * `name` must be NUL-terminated; `out` must be writable.
 */
enum TfStatus tf_config_preset(const char *name, struct TfConfig **out);

/**
 * Config file layered over `fallback_preset` (used when the file names none).
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` must be writable.
 */
enum TfStatus tf_config_load(const char *path, const char *fallback_preset, struct TfConfig **out);

/**
 * # Safety
 * `cfg` must come from this library.
 */
enum TfStatus tf_config_set_seed(struct TfConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be null or come from this library, and not be used afterwards.
 */
void tf_config_free(struct TfConfig *cfg);

/**
 * Runs train, score and eval on the dataset at `data_root`, writing all
 * artifacts to `out_dir`. On success `*summary_json` receives the summary,
 * to be released with [`tf_string_free`].
 *
 * # Safety
 * Strings must be NUL-terminated; `cfg` must come from this library.
 */
enum TfStatus tf_run_pipeline(const struct TfConfig *cfg,
                              const char *data_root,
                              const char *out_dir,
                              char **summary_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void tf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRIFUSE_H */
