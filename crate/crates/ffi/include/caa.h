#ifndef CAA_H
#define CAA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * How per-pair distances are combined into a detector score.
 */
typedef enum CaaAggregation {
  CAA_AGGREGATION_MAX = 0,
  CAA_AGGREGATION_SUM = 1,
} CaaAggregation;

/**
 * Result code of every fallible call.
 */
typedef enum CaaStatus {
  CAA_STATUS_OK = 0,
  CAA_STATUS_NULL_POINTER = 1,
  CAA_STATUS_INVALID_ARGUMENT = 2,
  CAA_STATUS_DIMENSION_MISMATCH = 3,
  CAA_STATUS_NON_FINITE = 4,
  CAA_STATUS_CONSTANT_COLUMN = 5,
  CAA_STATUS_NO_PAIRS_FOUND = 6,
  CAA_STATUS_DEGENERATE_PROJECTION = 7,
  CAA_STATUS_SINGLE_CLASS = 8,
  CAA_STATUS_INSUFFICIENT_DATA = 9,
  CAA_STATUS_CONVERGENCE_FAILURE = 10,
  CAA_STATUS_FORMAT_ERROR = 11,
  CAA_STATUS_BUFFER_TOO_SMALL = 12,
  CAA_STATUS_PANIC = 13,
  CAA_STATUS_OTHER = 14,
} CaaStatus;

/**
 * Opaque CAA detector.
 */
typedef struct CaaDetectorHandle CaaDetectorHandle;

/**
 * Opaque PCA residual detector.
 */
typedef struct CaaPcaHandle CaaPcaHandle;

/**
 * Training options. Zero caps and a zero pair limit select the library
 * defaults; obtain a filled-in value from `caa_fit_options_default`.
 */
typedef struct CaaFitOptions {
  double c1;
  double c2;
  size_t max_pairs;
  enum CaaAggregation aggregation;
} CaaFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or null if the
 * last call succeeded. Valid until the next call on the same thread.
 */
const char *caa_last_error_message(void);

struct CaaFitOptions caa_fit_options_default(void);

/**
 * Fits a detector on normal training rows. `options` may be null for the
 * defaults. On success `*out` owns a new handle.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles, `options` must be
 * null or valid, and `out` must be writable.
 */
enum CaaStatus caa_detector_fit(const double *data,
                                size_t rows,
                                size_t cols,
                                const struct CaaFitOptions *options,
                                struct CaaDetectorHandle **out);

/**
 * Loads a detector from its JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum CaaStatus caa_detector_from_json(const char *json, struct CaaDetectorHandle **out);

/**
 * Serializes a detector. Release `*out` with `caa_string_free`.
 *
 * # Safety
 * `h` must be a live handle and `out` writable.
 */
enum CaaStatus caa_detector_to_json(const struct CaaDetectorHandle *h, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void caa_string_free(char *s);

/**
 * Releases a detector. Null is ignored.
 *
 * # Safety
 * `h` must be null or a handle not yet freed.
 */
void caa_detector_free(struct CaaDetectorHandle *h);

/**
 * # Safety
 * `h` must be a live handle and `out` writable.
 */
enum CaaStatus caa_detector_num_pairs(const struct CaaDetectorHandle *h, size_t *out);

/**
 * # Safety
 * `h` must be a live handle and `out` writable.
 */
enum CaaStatus caa_detector_num_features(const struct CaaDetectorHandle *h, size_t *out);

/**
 * Copies the sorted feature indices used by pair `pair` into `buf`.
 * `*len` receives the number of indices; if it exceeds `cap` nothing is
 * copied and `CAA_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `h` must be a live handle, `buf` must hold `cap` values and `len` must
 * be writable.
 */
enum CaaStatus caa_detector_pair_support(const struct CaaDetectorHandle *h,
                                         size_t pair,
                                         size_t *buf,
                                         size_t cap,
                                         size_t *len);

/**
 * Scores one raw row of `len` values. `argmax` may be null.
 *
 * # Safety
 * `row` must hold `len` doubles, `score` must be writable and `argmax`
 * null or writable.
 */
enum CaaStatus caa_detector_score(const struct CaaDetectorHandle *h,
                                  const double *row,
                                  size_t len,
                                  double *score,
                                  size_t *argmax);

/**
 * Scores `rows` rows into `scores`, which must hold `rows` values.
 *
 * # Safety
 * `data` must hold `rows * cols` doubles and `scores` `rows` doubles.
 */
enum CaaStatus caa_detector_score_batch(const struct CaaDetectorHandle *h,
                                        const double *data,
                                        size_t rows,
                                        size_t cols,
                                        double *scores);

/**
 * Fits the PCA residual baseline. `k == 0` keeps enough components for
 * 95% of the variance.
 *
 * # Safety
 * `data` must hold `rows * cols` doubles and `out` be writable.
 */
enum CaaStatus caa_pca_fit(const double *data,
                           size_t rows,
                           size_t cols,
                           size_t k,
                           struct CaaPcaHandle **out);

/**
 * # Safety
 * `h` must be a live handle and `out` writable.
 */
enum CaaStatus caa_pca_num_components(const struct CaaPcaHandle *h, size_t *out);

/**
 * # Safety
 * `data` must hold `rows * cols` doubles and `scores` `rows` doubles.
 */
enum CaaStatus caa_pca_score_batch(const struct CaaPcaHandle *h,
                                   const double *data,
                                   size_t rows,
                                   size_t cols,
                                   double *scores);

/**
 * # Safety
 * `h` must be null or a handle not yet freed.
 */
void caa_pca_free(struct CaaPcaHandle *h);

/**
 * Area under the ROC curve of `scores` against 0/1 `labels` (1 =
 * anomalous), with ties counted as half.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values and `out` be writable.
 */
enum CaaStatus caa_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAA_H */
