/* Generated by cbindgen. Do not edit. */

#ifndef REVERTING_H
#define REVERTING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum RvStatus {
  RV_STATUS_OK = 0,
  RV_STATUS_NULL_POINTER = 1,
  RV_STATUS_INVALID_ARGUMENT = 2,
  RV_STATUS_SIZE_LIMIT = 3,
  RV_STATUS_INVARIANT = 4,
  RV_STATUS_UNNORMALIZED = 5,
  RV_STATUS_IO = 6,
  RV_STATUS_BUFFER_TOO_SMALL = 7,
  RV_STATUS_PANIC = 8,
} RvStatus;

/**
 * An offspring law on `{0, 1, ..., d}`.
 */
typedef struct RvOffspring RvOffspring;

/**
 * A probability mass function on the integers.
 */
typedef struct RvPmf RvPmf;

/**
 * A seeded random stream.
 */
typedef struct RvStream RvStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread (empty after success).
 * The pointer stays valid until the next library call on the thread.
 */
const char *rv_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rv_version(void);

/**
 * Law of the uniform clock `T_n`. `tail_tolerance = 0` gives exact values.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum RvStatus rv_clock_pmf(uintptr_t n, double tail_tolerance, struct RvPmf **out);

/**
 * Law of `T_n` under explicit reversion weights `alpha_1..alpha_len`.
 *
 * # Safety
 * `weights` must point to `len` readable doubles; `out` must be writable.
 */
enum RvStatus rv_weighted_clock_pmf(const double *weights,
                                    uintptr_t len,
                                    uintptr_t n,
                                    double tail_tolerance,
                                    struct RvPmf **out);

/**
 * Law of `T_n` under power-law weights `alpha_k = k^beta`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RvStatus rv_power_clock_pmf(double beta,
                                 uintptr_t n,
                                 double tail_tolerance,
                                 struct RvPmf **out);

/**
 * Law of `T_n` for the occasionally reverting clock.
 *
 * # Safety
 * `out` must be writable.
 */
enum RvStatus rv_occasional_pmf(uintptr_t n, double q, double tail_tolerance, struct RvPmf **out);

/**
 * Exact law of the simple reverting walk `R_n` (`n <= 13`).
 *
 * # Safety
 * `out` must be writable.
 */
enum RvStatus rv_walk_pmf_simple(uintptr_t n, double p, struct RvPmf **out);

/**
 * Releases a pmf handle. Null is ignored.
 *
 * # Safety
 * `pmf` must come from this library and not be used afterwards.
 */
void rv_pmf_free(struct RvPmf *pmf);

/**
 * Support bounds and number of atoms.
 *
 * # Safety
 * `pmf` must be a live handle; the output pointers may be null.
 */
enum RvStatus rv_pmf_support(const struct RvPmf *pmf,
                             int64_t *min_value,
                             int64_t *max_value,
                             uintptr_t *len);

/**
 * `P(X = value)`.
 *
 * # Safety
 * `pmf` must be a live handle; `out` writable.
 */
enum RvStatus rv_pmf_prob(const struct RvPmf *pmf, int64_t value, double *out);

/**
 * Copies the probabilities of `min_value..=max_value` into `buf`.
 *
 * # Safety
 * `buf` must have room for `capacity` doubles.
 */
enum RvStatus rv_pmf_probs(const struct RvPmf *pmf, double *buf, uintptr_t capacity);

/**
 * Mean, variance and the tail mass removed by truncation.
 *
 * # Safety
 * `pmf` must be a live handle; the output pointers may be null.
 */
enum RvStatus rv_pmf_summary(const struct RvPmf *pmf,
                             double *mean,
                             double *variance,
                             double *dropped_mass);

/**
 * 1 when exact rational probabilities are available, else 0.
 *
 * # Safety
 * `pmf` must be a live handle or null (which yields 0).
 */
int rv_pmf_is_exact(const struct RvPmf *pmf);

/**
 * Exact `P(X = value)` as a decimal fraction string such as `"11/48"`.
 *
 * # Safety
 * `buf` must have room for `capacity` bytes; `needed` may be null.
 */
enum RvStatus rv_pmf_exact_prob(const struct RvPmf *pmf,
                                int64_t value,
                                char *buf,
                                uintptr_t capacity,
                                uintptr_t *needed);

/**
 * `(m_n, v_n)` of the uniform clock.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum RvStatus rv_clock_moments(uintptr_t n, double *mean, double *variance);

/**
 * Mean, second moment and variance of the occasionally reverting clock.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum RvStatus rv_occasional_moments(uintptr_t n,
                                    double q,
                                    double *mean,
                                    double *second_moment,
                                    double *variance);

/**
 * `Var M_n` for the time-integral martingale.
 *
 * # Safety
 * `out` must be writable.
 */
enum RvStatus rv_martingale_variance(uintptr_t n, double *out);

/**
 * `Cov(T_n, T_{n+m})` (`n >= 2`, `m >= 1`).
 *
 * # Safety
 * `out` must be writable.
 */
enum RvStatus rv_clock_covariance(uintptr_t n, uintptr_t m, double *out);

/**
 * Unsigned Stirling number of the first kind `[n, k]` as a decimal string.
 *
 * # Safety
 * `buf` must have room for `capacity` bytes; `needed` may be null.
 */
enum RvStatus rv_stirling_first(uintptr_t n,
                                uintptr_t k,
                                char *buf,
                                uintptr_t capacity,
                                uintptr_t *needed);

/**
 * `G(s, z)` for the occasionally reverting clock.
 *
 * # Safety
 * `out` must be writable.
 */
enum RvStatus rv_occasional_gf(double s, double z, double q, double *out);

/**
 * Creates a random stream; equal `(seed, stream)` pairs replay exactly.
 *
 * # Safety
 * `out` must be writable.
 */
enum RvStatus rv_stream_new(uint64_t seed, uint64_t stream, struct RvStream **out);

/**
 * Releases a stream handle. Null is ignored.
 *
 * # Safety
 * `stream` must come from this library and not be used afterwards.
 */
void rv_stream_free(struct RvStream *stream);

/**
 * Simulates `T_1..T_n` of the uniform clock into `values`.
 *
 * # Safety
 * `values` must have room for `n` integers.
 */
enum RvStatus rv_simulate_clock(struct RvStream *stream, uintptr_t n, uint64_t *values);

/**
 * Simulates `T_1..T_n` of the occasionally reverting clock into `values`.
 *
 * # Safety
 * `values` must have room for `n` integers.
 */
enum RvStatus rv_simulate_occasional(struct RvStream *stream,
                                     uintptr_t n,
                                     double q,
                                     uint64_t *values);

/**
 * Creates an offspring law from `P(Z = 0), ..., P(Z = len - 1)`.
 *
 * # Safety
 * `probs` must point to `len` readable doubles; `out` must be writable.
 */
enum RvStatus rv_offspring_new(const double *probs, uintptr_t len, struct RvOffspring **out);

/**
 * Releases an offspring handle. Null is ignored.
 *
 * # Safety
 * `law` must come from this library and not be used afterwards.
 */
void rv_offspring_free(struct RvOffspring *law);

/**
 * `H_n(s)`, the p.g.f. of the reverting Galton-Watson population.
 *
 * # Safety
 * `law` must be a live handle; `out` writable.
 */
enum RvStatus rv_reverting_gw_pgf(const struct RvOffspring *law,
                                  uintptr_t n,
                                  double s,
                                  double *out);

/**
 * `P(X_n = 0)`.
 *
 * # Safety
 * `law` must be a live handle; `out` writable.
 */
enum RvStatus rv_extinction_probability(const struct RvOffspring *law, uintptr_t n, double *out);

/**
 * Runs a verification suite (`"all"`, `"clock"`, ...). `passed` receives
 * 1 when every check passed.
 *
 * # Safety
 * `suite_name` must be a NUL-terminated string; `passed` writable.
 */
enum RvStatus rv_verify(const char *suite_name, uint64_t seed, int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REVERTING_H */
