#ifndef GENERIC_ADAM_H
#define GENERIC_ADAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GadamStatus {
  GADAM_STATUS_OK = 0,
  GADAM_STATUS_NULL_POINTER = 1,
  GADAM_STATUS_INVALID_ARGUMENT = 2,
  GADAM_STATUS_SCHEDULE_ERROR = 3,
  GADAM_STATUS_OPTIMIZER_ERROR = 4,
  GADAM_STATUS_NOT_FOUND = 5,
  GADAM_STATUS_PANIC = 6,
} GadamStatus;

typedef enum GadamRateClass {
  GADAM_RATE_CLASS_POLY_HALF_R = 0,
  GADAM_RATE_CLASS_LOG_OVER_POWER = 1,
  GADAM_RATE_CLASS_POLY = 2,
  GADAM_RATE_CLASS_NOT_CONVERGENT = 3,
} GadamRateClass;

/**
 * Generic Adam state handle, with an optional box constraint.
 */
typedef struct GadamAdam GadamAdam;

/**
 * Schedule handle.
 */
typedef struct GadamSchedule GadamSchedule;

/**
 * Weighted AdaEMA state handle.
 */
typedef struct GadamWeighted GadamWeighted;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t gadam_last_error_message(char *buf, size_t len);

/**
 * The library version as a static NUL-terminated string.
 */
const char *gadam_version(void);

/**
 * Looks up a named preset (`adaema`, `adamnc`, `rmsprop`, `adam`,
 * `nosadam-hh`, `weighted-poly`, `beta-one`); tabulated presets cover
 * `horizon` steps.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum GadamStatus gadam_schedule_preset(const char *name,
                                       uint64_t horizon,
                                       struct GadamSchedule **out);

/**
 * `alpha_t = eta/t^s`, `theta_t = 1 - numerator/max(t, K)^r` with the
 * smallest admissible cutoff `K`, constant `beta`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GadamStatus gadam_schedule_power_law(double eta,
                                          double s,
                                          double numerator,
                                          double r,
                                          double beta,
                                          struct GadamSchedule **out);

/**
 * # Safety
 * `sched` must be null or a handle from this library, not yet freed.
 */
void gadam_schedule_free(struct GadamSchedule *sched);

/**
 * Writes `(alpha_t, beta_t, theta_t)` for step `t >= 1`.
 *
 * # Safety
 * `sched` must be a live handle; the out pointers must be writable.
 */
enum GadamStatus gadam_schedule_eval(const struct GadamSchedule *sched,
                                     uint64_t t,
                                     double *alpha,
                                     double *beta,
                                     double *theta);

/**
 * Runs the sufficient-condition checker over `horizon` steps and stores 1
 * (satisfied) or 0 in `satisfied`.
 *
 * # Safety
 * `sched` must be a live handle; `satisfied` must be writable.
 */
enum GadamStatus gadam_schedule_check(const struct GadamSchedule *sched,
                                      uint64_t horizon,
                                      int32_t *satisfied);

/**
 * Rate class of the power-law family with exponents `(r, s)`; the decay
 * exponent (0 when not convergent) goes to `exponent` if it is non-null.
 *
 * # Safety
 * `class` must be writable; `exponent` may be null.
 */
enum GadamStatus gadam_classify_rate(double r,
                                     double s,
                                     enum GadamRateClass *class_,
                                     double *exponent);

/**
 * Generic Adam state at `x1` (length `dim`) with `v_0 = eps`.
 *
 * # Safety
 * `x1` must point to `dim` doubles; `out` must be writable.
 */
enum GadamStatus gadam_adam_new(const double *x1, size_t dim, double eps, struct GadamAdam **out);

/**
 * # Safety
 * `state` must be null or a live handle.
 */
void gadam_adam_free(struct GadamAdam *state);

/**
 * Projects every coordinate onto `[lo, hi]` after each step.
 *
 * # Safety
 * `state` must be a live handle.
 */
enum GadamStatus gadam_adam_set_box(struct GadamAdam *state, double lo, double hi);

/**
 * One step with gradient `g` (length `dim`), using the schedule at the next
 * step index.
 *
 * # Safety
 * Handles must be live; `g` must point to `dim` doubles.
 */
enum GadamStatus gadam_adam_step(struct GadamAdam *state,
                                 const struct GadamSchedule *sched,
                                 const double *g,
                                 size_t dim);

/**
 * Copies the iterate into `x` (capacity `dim`, which must equal the state's
 * dimension).
 *
 * # Safety
 * `state` must be a live handle; `x` must point to `dim` writable doubles.
 */
enum GadamStatus gadam_adam_get_x(const struct GadamAdam *state, double *x, size_t dim);

/**
 * Number of steps taken so far.
 *
 * # Safety
 * `state` must be null or a live handle; returns 0 for null.
 */
uint64_t gadam_adam_steps(const struct GadamAdam *state);

/**
 * Weighted AdaEMA state at `x1` with `V_0 = eps`, `W_0 = 1`.
 *
 * # Safety
 * `x1` must point to `dim` doubles; `out` must be writable.
 */
enum GadamStatus gadam_weighted_new(const double *x1,
                                    size_t dim,
                                    double eps,
                                    struct GadamWeighted **out);

/**
 * # Safety
 * `state` must be null or a live handle.
 */
void gadam_weighted_free(struct GadamWeighted *state);

/**
 * # Safety
 * `state` must be a live handle.
 */
enum GadamStatus gadam_weighted_set_box(struct GadamWeighted *state, double lo, double hi);

/**
 * One step with weight `w`, base rate `alpha` and momentum `beta`.
 *
 * # Safety
 * `state` must be a live handle; `g` must point to `dim` doubles.
 */
enum GadamStatus gadam_weighted_step(struct GadamWeighted *state,
                                     const double *g,
                                     size_t dim,
                                     double w,
                                     double alpha,
                                     double beta);

/**
 * # Safety
 * `state` must be a live handle; `x` must point to `dim` writable doubles.
 */
enum GadamStatus gadam_weighted_get_x(const struct GadamWeighted *state, double *x, size_t dim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENERIC_ADAM_H */
