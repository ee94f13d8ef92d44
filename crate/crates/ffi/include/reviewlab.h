#ifndef REVIEWLAB_H
#define REVIEWLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_UTF8 = 2,
  /**
   * The configuration is malformed or violates a model assumption.
   */
  RL_STATUS_VALIDATION = 3,
  /**
   * The run failed for another reason (I/O, unsupported operation, ...).
   */
  RL_STATUS_RUNTIME = 4,
  /**
   * A caller-supplied buffer is too small; the required length is reported.
   */
  RL_STATUS_BUFFER_TOO_SMALL = 5,
  RL_STATUS_PANIC = 6,
} RlStatus;

/**
 * Opaque parsed configuration.
 */
typedef struct RlConfig RlConfig;

/**
 * Opaque simulated run.
 */
typedef struct RlTrace RlTrace;

/**
 * Separation constants of the configured quality pair.
 */
typedef struct RlSeparation {
  double delta;
  double gamma;
  double c;
} RlSeparation;

/**
 * Loss and regret of one run.
 */
typedef struct RlMetrics {
  double loss;
  double regret;
  double regret_bound;
  size_t n_blocks;
} RlMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *rl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

/**
 * Parses a flat `key = value` configuration.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RlStatus rl_config_parse(const char *text, struct RlConfig **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle from [`rl_config_parse`] not yet freed.
 */
void rl_config_free(struct RlConfig *cfg);

/**
 * Number of points of the quality grid.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
size_t rl_config_grid_len(const struct RlConfig *cfg);

/**
 * Separation constants of `bounds.q`/`bounds.q2` (default: the extreme grid points).
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_bounds(const struct RlConfig *cfg, struct RlSeparation *out);

/**
 * Simulates instance `index` of the configured experiment.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_simulate(const struct RlConfig *cfg, uint64_t index, struct RlTrace **out);

/**
 * # Safety
 * `trace` must be NULL or a handle from [`rl_simulate`] not yet freed.
 */
void rl_trace_free(struct RlTrace *trace);

/**
 * Number of rounds.
 *
 * # Safety
 * `trace` must be a live handle.
 */
size_t rl_trace_len(const struct RlTrace *trace);

/**
 * Copies the grid index of the true quality per round into `buf`.
 * `written` (optional) receives the number of rounds.
 *
 * # Safety
 * `trace` must be a live handle; `buf` must hold `cap` elements.
 */
enum RlStatus rl_trace_quality(const struct RlTrace *trace,
                               uint32_t *buf,
                               size_t cap,
                               size_t *written);

/**
 * Copies the posterior mass on the true quality, before each round's update.
 *
 * # Safety
 * `trace` must be a live handle; `buf` must hold `cap` elements.
 */
enum RlStatus rl_trace_post_true(const struct RlTrace *trace,
                                 double *buf,
                                 size_t cap,
                                 size_t *written);

/**
 * Copies the purchase decisions (1 = bought).
 *
 * # Safety
 * `trace` must be a live handle; `buf` must hold `cap` elements.
 */
enum RlStatus rl_trace_purchased(const struct RlTrace *trace,
                                 uint8_t *buf,
                                 size_t cap,
                                 size_t *written);

/**
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_trace_metrics(const struct RlTrace *trace, struct RlMetrics *out);

/**
 * Renders the trace as CSV. Free the string with [`rl_string_free`].
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum RlStatus rl_trace_csv(const struct RlTrace *trace, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void rl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REVIEWLAB_H */
