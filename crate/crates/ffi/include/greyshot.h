#ifndef GREYSHOT_H
#define GREYSHOT_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_ARGUMENT = 2,
  GS_STATUS_OUT_OF_RANGE = 3,
  GS_STATUS_NEAR_SINGULAR = 4,
  GS_STATUS_NON_POSITIVE_TRANSFORM = 5,
  GS_STATUS_DEGENERATE = 6,
  GS_STATUS_IO = 7,
  GS_STATUS_PARSE = 8,
  GS_STATUS_PANIC = 9,
} GsStatus;

/**
 * Opaque handle to trained GreyShot parameters.
 */
typedef struct GsParams GsParams;

/**
 * Fitted GM(1,1) parameters.
 */
typedef struct GsGm11Model {
  double a;
  double b;
  double x0_first;
  double alpha;
} GsGm11Model;

/**
 * Training hyperparameters. `init_scale <= 0` selects `1/sqrt(rank)`.
 */
typedef struct GsTrainConfig {
  size_t rank;
  double learning_rate;
  uint64_t iterations;
  uint64_t seed;
  double init_scale;
  double g_floor;
  double a_init;
  double b_init;
  /**
   * Nonzero selects gradient ascent instead of descent.
   */
  uint8_t ascent;
} GsTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null.
 *
 * The pointer stays valid until the next greyshot call on this thread.
 */
const char *greyshot_last_error(void);

/**
 * Partial sums of `values[0..len]` into `out[0..len]`.
 *
 * # Safety
 * `values` and `out` must each point to `len` valid doubles.
 */
enum GsStatus greyshot_ago(const double *values, size_t len, double *out);

/**
 * First differences (first element kept) of `values[0..len]` into `out[0..len]`.
 *
 * # Safety
 * `values` and `out` must each point to `len` valid doubles.
 */
enum GsStatus greyshot_inverse_ago(const double *values, size_t len, double *out);

/**
 * Least-squares GM(1,1) fit.
 *
 * # Safety
 * `values` must point to `len` doubles and `out` to a writable model.
 */
enum GsStatus greyshot_gm11_fit(const double *values,
                                size_t len,
                                double alpha,
                                struct GsGm11Model *out);

/**
 * Cumulative forecast at step `t`.
 *
 * # Safety
 * `model` must point to a valid model and `out` to a writable double.
 */
enum GsStatus greyshot_gm11_forecast_cumulative(const struct GsGm11Model *model,
                                                uint64_t t,
                                                double *out);

/**
 * Restored forecast for steps `1..=horizon` into `out[0..horizon]`.
 *
 * # Safety
 * `model` must point to a valid model and `out` to `horizon` writable doubles.
 */
enum GsStatus greyshot_gm11_forecast_restored(const struct GsGm11Model *model,
                                              size_t horizon,
                                              double *out);

struct GsTrainConfig greyshot_train_config_default(void);

/**
 * Trains on an `m x n` grid. No rating data is involved.
 *
 * On success `*out` owns a new handle; `skipped` (may be null) receives the
 * number of skipped steps.
 *
 * # Safety
 * `config` must be valid, `out` writable, `skipped` null or writable.
 */
enum GsStatus greyshot_train(size_t m,
                             size_t n,
                             const struct GsTrainConfig *config,
                             struct GsParams **out,
                             uint64_t *skipped);

/**
 * Raw dot-product prediction `U_i . V_j`.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum GsStatus greyshot_params_predict(const struct GsParams *params,
                                      size_t i,
                                      size_t j,
                                      double *out);

/**
 * # Safety
 * `params` must be a live handle; out pointers may be null.
 */
enum GsStatus greyshot_params_dims(const struct GsParams *params,
                                   size_t *users,
                                   size_t *items,
                                   size_t *rank);

/**
 * # Safety
 * `params` must be a live handle; out pointers may be null.
 */
enum GsStatus greyshot_params_grey(const struct GsParams *params, double *a, double *b);

/**
 * Writes the `greyshot-params v1` text format.
 *
 * # Safety
 * `params` must be a live handle and `path` a NUL-terminated string.
 */
enum GsStatus greyshot_params_save(const struct GsParams *params, const char *path);

/**
 * Reads a `greyshot-params v1` file into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum GsStatus greyshot_params_load(const char *path, struct GsParams **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `params` must be null or a handle not yet freed.
 */
void greyshot_params_free(struct GsParams *params);

/**
 * `(1 - b/a) e^{-a x} + b/a`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GsStatus greyshot_grey_transform(double x, double a, double b, double *out);

/**
 * `g^g`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GsStatus greyshot_likelihood_term(double g, double *out);

/**
 * Gradients of `g^g` at dot product `x`: `d/da`, `d/db`, and the scalar `s`
 * with `d/dU_i = s V_j`, `d/dV_j = s U_i`. Any out pointer may be null.
 *
 * # Safety
 * Non-null out pointers must be writable.
 */
enum GsStatus greyshot_gradients(double x,
                                 double a,
                                 double b,
                                 double g_floor,
                                 double *grad_a,
                                 double *grad_b,
                                 double *factor_scale);

/**
 * Mean absolute error of `predictions` against `ratings` (no rescaling).
 *
 * # Safety
 * Both arrays must hold `len` doubles; `out` must be writable.
 */
enum GsStatus greyshot_mae(const double *predictions,
                           const double *ratings,
                           size_t len,
                           double *out);

/**
 * Degree of Matthew effect over per-item top-L counts (zeros are ignored).
 *
 * # Safety
 * `counts` must hold `len` values; `out` must be writable.
 */
enum GsStatus greyshot_dme(const uint64_t *counts, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GREYSHOT_H */
