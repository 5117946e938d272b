#ifndef INTERDIM_H
#define INTERDIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum InterdimStatus {
  INTERDIM_STATUS_OK = 0,
  INTERDIM_STATUS_NULL_POINTER = 1,
  INTERDIM_STATUS_INVALID_PARAMETER = 2,
  INTERDIM_STATUS_PARSE = 3,
  INTERDIM_STATUS_UNSUPPORTED = 4,
  INTERDIM_STATUS_BUDGET_TOO_SMALL = 5,
  INTERDIM_STATUS_RESOURCE_LIMIT = 6,
  INTERDIM_STATUS_DELTA_ABOVE_THRESHOLD = 7,
  INTERDIM_STATUS_EMPTY = 8,
  INTERDIM_STATUS_INVARIANT = 9,
  INTERDIM_STATUS_IO = 10,
  INTERDIM_STATUS_INDEX_OUT_OF_RANGE = 11,
  INTERDIM_STATUS_PANIC = 12,
} InterdimStatus;

/**
 * An estimate with its per-delta rows.
 */
typedef struct InterdimEstimate InterdimEstimate;

/**
 * A parsed set description.
 */
typedef struct InterdimSpec InterdimSpec;

/**
 * Summary of a mass-distribution certificate.
 */
typedef struct InterdimCertificate {
  /**
   * 1 when supported, 0 when violated.
   */
  int32_t supported;
  double total_mass_min;
  double ratio_max;
  double floor;
  double cap;
  /**
   * Deltas rejected by the construction's threshold.
   */
  size_t skipped;
} InterdimCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Valid
 * until the next failing call on the same thread.
 */
const char *interdim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *interdim_version(void);

/**
 * Parses `key=value` text such as `family=concentric d=2 p=0.5`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum InterdimStatus interdim_spec_parse(const char *text, struct InterdimSpec **out);

/**
 * # Safety
 * `spec` must come from [`interdim_spec_parse`] and not be used afterwards.
 */
void interdim_spec_free(struct InterdimSpec *spec);

/**
 * Closed-form dimension at `theta`. `Unsupported` when the family has none.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum InterdimStatus interdim_formula(const struct InterdimSpec *spec, double theta, double *out);

/**
 * Cost of the constructive two-scale cover at exponent `s`.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum InterdimStatus interdim_cover_cost(const struct InterdimSpec *spec,
                                        double delta,
                                        double theta,
                                        double s,
                                        double *out);

/**
 * Two-scale grid estimate; `budget` bounds the sampling resolution.
 *
 * # Safety
 * `spec` must be a live handle, `deltas` must point to `len` values and
 * `out` must be writable.
 */
enum InterdimStatus interdim_estimate(const struct InterdimSpec *spec,
                                      double theta,
                                      const double *deltas,
                                      size_t len,
                                      uint64_t budget,
                                      struct InterdimEstimate **out);

/**
 * Estimate from the constructive covers' closed-form counts.
 *
 * # Safety
 * As [`interdim_estimate`].
 */
enum InterdimStatus interdim_upper_estimate(const struct InterdimSpec *spec,
                                            double theta,
                                            const double *deltas,
                                            size_t len,
                                            struct InterdimEstimate **out);

/**
 * Extrapolated dimension of an estimate.
 *
 * # Safety
 * `est` must be a live handle or null (which yields NaN).
 */
double interdim_estimate_value(const struct InterdimEstimate *est);

/**
 * Number of per-delta rows.
 *
 * # Safety
 * `est` must be a live handle or null (which yields 0).
 */
size_t interdim_estimate_len(const struct InterdimEstimate *est);

/**
 * Row `i`: its delta and the unit-cost exponent there.
 *
 * # Safety
 * `est` must be a live handle; `delta` and `s_star` must be writable.
 */
enum InterdimStatus interdim_estimate_row(const struct InterdimEstimate *est,
                                          size_t i,
                                          double *delta,
                                          double *s_star);

/**
 * # Safety
 * `est` must come from an estimate call and not be used afterwards.
 */
void interdim_estimate_free(struct InterdimEstimate *est);

/**
 * Certifies the family's measure at exponent `s` over `deltas` with
 * `samples` test sets per delta.
 *
 * # Safety
 * `spec` must be a live handle, `deltas` must point to `len` values and
 * `out` must be writable.
 */
enum InterdimStatus interdim_certify(const struct InterdimSpec *spec,
                                     double theta,
                                     double s,
                                     const double *deltas,
                                     size_t len,
                                     size_t samples,
                                     struct InterdimCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTERDIM_H */
