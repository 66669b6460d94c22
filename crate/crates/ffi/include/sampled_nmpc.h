#ifndef SAMPLED_NMPC_H
#define SAMPLED_NMPC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2-4 match the command-line exit codes.
 */
typedef enum NmpcStatus {
  NMPC_STATUS_OK = 0,
  NMPC_STATUS_NULL_ARGUMENT = 1,
  NMPC_STATUS_INVALID_CONFIG = 2,
  NMPC_STATUS_INFEASIBLE = 3,
  NMPC_STATUS_RUNTIME = 4,
  NMPC_STATUS_DIMENSION_MISMATCH = 5,
  NMPC_STATUS_PANIC = 6,
} NmpcStatus;

/**
 * Opaque controller handle.
 */
typedef struct NmpcController NmpcController;

/**
 * Counters and costs of the most recent solve.
 */
typedef struct NmpcSolveStats {
  double cost;
  double warm_cost;
  uint64_t f_evals;
  uint64_t cost_evals;
  uint64_t improvements;
  bool budget_hit;
  double elapsed_ms;
} NmpcSolveStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a controller from a JSON experiment config. Only the plant and
 * solver settings are used; `steps` and output fields are ignored.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NmpcStatus nmpc_controller_create(const char *config_json, struct NmpcController **out);

/**
 * Releases a controller. Null is ignored.
 *
 * # Safety
 * `ctrl` must come from [`nmpc_controller_create`] and not be used afterwards.
 */
void nmpc_controller_destroy(struct NmpcController *ctrl);

/**
 * # Safety
 * `ctrl` must be a live handle or null.
 */
size_t nmpc_controller_state_dim(const struct NmpcController *ctrl);

/**
 * # Safety
 * `ctrl` must be a live handle or null.
 */
size_t nmpc_controller_input_dim(const struct NmpcController *ctrl);

/**
 * Computes the input for measured state `state` and writes it to `input`.
 *
 * # Safety
 * `state` must point to `state_len` doubles and `input` to `input_len`
 * writable doubles; `ctrl` must be a live handle.
 */
enum NmpcStatus nmpc_controller_solve(struct NmpcController *ctrl,
                                      const double *state,
                                      size_t state_len,
                                      double *input,
                                      size_t input_len);

/**
 * Statistics of the last successful solve.
 *
 * # Safety
 * `ctrl` must be a live handle and `stats` a valid pointer.
 */
enum NmpcStatus nmpc_controller_last_stats(const struct NmpcController *ctrl,
                                           struct NmpcSolveStats *stats);

/**
 * Forgets the previous solution; the next solve starts from a fresh search.
 *
 * # Safety
 * `ctrl` must be a live handle or null.
 */
enum NmpcStatus nmpc_controller_reset(struct NmpcController *ctrl);

/**
 * Runs a full experiment and writes its logs to `out_dir`, like the `run`
 * subcommand.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum NmpcStatus nmpc_run_experiment(const char *config_json, const char *out_dir);

/**
 * Point `index` (1-based) of the Halton sequence in `dim` dimensions.
 *
 * # Safety
 * `out` must point to `dim` writable doubles.
 */
enum NmpcStatus nmpc_halton_point(uint64_t index, size_t dim, double *out);

/**
 * Serial, `n̄`-lane and `lanes`-lane work bounds for one pass, written to
 * `out[0..3]`.
 *
 * # Safety
 * `out` must point to 3 writable doubles.
 */
enum NmpcStatus nmpc_predicted_bounds(size_t n_bar,
                                      size_t horizon,
                                      double c1,
                                      double c2,
                                      size_t lanes,
                                      double *out);

/**
 * Copies the last error message on this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null to query the length.
 */
size_t nmpc_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAMPLED_NMPC_H */
