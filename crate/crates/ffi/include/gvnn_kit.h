#ifndef GVNN_KIT_H
#define GVNN_KIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call. Nonzero codes other than `NullPointer` and
 * `Panic` match the command-line exit codes.
 */
typedef enum GvnnStatus {
  GVNN_STATUS_OK = 0,
  GVNN_STATUS_NULL_POINTER = 1,
  GVNN_STATUS_INVALID_ARGUMENT = 2,
  GVNN_STATUS_DATA_ERROR = 3,
  GVNN_STATUS_NUMERIC_ERROR = 4,
  GVNN_STATUS_VERIFICATION_FAILED = 5,
  GVNN_STATUS_PANIC = 6,
} GvnnStatus;

/**
 * A trained forecaster loaded from a checkpoint.
 */
typedef struct GvnnModel GvnnModel;

/**
 * A multivariate signal, `nodes × samples`.
 */
typedef struct GvnnSignal GvnnSignal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gvnn_version(void);

/**
 * Message for the last failed call on this thread, or null if the last call
 * succeeded. The pointer stays valid until the next call on this thread.
 */
const char *gvnn_last_error_message(void);

/**
 * Copies a row-major `nodes × samples` buffer into a new signal.
 *
 * # Safety
 * `values` must point to `nodes * samples` doubles; `out` must be writable.
 */
enum GvnnStatus gvnn_signal_from_buffer(const double *values,
                                        size_t nodes,
                                        size_t samples,
                                        struct GvnnSignal **out);

/**
 * Simulates one of the built-in maps: `"lorenz"`, `"hopfield"` or
 * `"macarthur"`. A `nodes` of 0 picks the map's default.
 *
 * # Safety
 * `map` must be a NUL-terminated string; `out` must be writable.
 */
enum GvnnStatus gvnn_signal_generate(const char *map,
                                     size_t nodes,
                                     size_t length,
                                     uint64_t seed,
                                     struct GvnnSignal **out);

/**
 * Loads a CSV signal, one node per row unless `transpose` is set.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GvnnStatus gvnn_signal_load_csv(const char *path, bool transpose, struct GvnnSignal **out);

/**
 * # Safety
 * `signal` must be a live handle; `nodes` and `samples` may be null.
 */
enum GvnnStatus gvnn_signal_dims(const struct GvnnSignal *signal, size_t *nodes, size_t *samples);

/**
 * Copies the signal into `out` (row-major, `nodes * samples` values).
 *
 * # Safety
 * `signal` must be a live handle; `out` must hold `cap` doubles.
 */
enum GvnnStatus gvnn_signal_copy_values(const struct GvnnSignal *signal, double *out, size_t cap);

/**
 * # Safety
 * `signal` must be null or a handle not yet freed.
 */
void gvnn_signal_free(struct GvnnSignal *signal);

/**
 * Writes the `samples × nodes × nodes` graph-variate tensor into `out`.
 *
 * `support` is a row-major `nodes × nodes` weight matrix, or null for the
 * absolute correlation of the signal. `node_fn` is `"ic"`, `"lde"`,
 * `"ic-nodiag"` or `"combo:a,b"`.
 *
 * # Safety
 * `signal` must be a live handle, `support` null or `nodes²` doubles,
 * `node_fn` a NUL-terminated string and `out` must hold `cap` doubles.
 */
enum GvnnStatus gvnn_graph_variate_tensor(const struct GvnnSignal *signal,
                                          const double *support,
                                          const char *node_fn,
                                          bool renormalize,
                                          bool zave,
                                          double *out,
                                          size_t cap);

/**
 * Writes the `nodes × samples` graph-variate Fourier coefficients into
 * `out`. `support` and `node_fn` are as in [`gvnn_graph_variate_tensor`].
 *
 * # Safety
 * Same as [`gvnn_graph_variate_tensor`].
 */
enum GvnnStatus gvnn_gvft(const struct GvnnSignal *signal,
                          const double *support,
                          const char *node_fn,
                          double *out,
                          size_t cap);

/**
 * Runs the randomized spectral-bound suite. Returns
 * `VerificationFailed` when any claim fails; counts are written either way.
 *
 * # Safety
 * `failed` and `total` must be null or writable.
 */
enum GvnnStatus gvnn_verify(uint64_t seed, size_t trials, size_t *failed, size_t *total);

/**
 * Loads a checkpoint written by `gvnn-kit train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GvnnStatus gvnn_model_load(const char *path, struct GvnnModel **out);

/**
 * # Safety
 * `model` must be a live handle; `nodes` and `window` may be null.
 */
enum GvnnStatus gvnn_model_dims(const struct GvnnModel *model, size_t *nodes, size_t *window);

/**
 * Forecasts the next sample from a raw `nodes × window` row-major buffer.
 * Normalization happens inside; `out` receives `nodes` values in the units
 * of the input.
 *
 * # Safety
 * `model` must be a live handle, `window` must hold `nodes * window`
 * doubles and `out` must hold `cap` doubles.
 */
enum GvnnStatus gvnn_model_predict(const struct GvnnModel *model,
                                   const double *window,
                                   double *out,
                                   size_t cap);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void gvnn_model_free(struct GvnnModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GVNN_KIT_H */
