#ifndef DICKE_H
#define DICKE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DkStatus {
  DK_STATUS_OK = 0,
  DK_STATUS_NULL_POINTER = 1,
  DK_STATUS_INVALID_ARGUMENT = 2,
  DK_STATUS_PARSE_ERROR = 3,
  DK_STATUS_SIMULATION_ERROR = 4,
  DK_STATUS_BUFFER_TOO_SMALL = 5,
  DK_STATUS_PANIC = 6,
} DkStatus;

// Model override for a run; `DK_MODEL_SCHEDULE` keeps each step's own.
typedef enum DkModel {
  DK_MODEL_SCHEDULE = 0,
  DK_MODEL_TWO_LEVEL = 1,
  DK_MODEL_SYMMETRIC = 2,
  DK_MODEL_FULL = 3,
} DkModel;

// Outcome of [`dk_schedule_run`].
typedef struct DkRunResult DkRunResult;

// Parsed schedule file.
typedef struct DkSchedule DkSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dk_version(void);

// Copies the calling thread's last error message into `buf`.
//
// `needed` receives the size including the terminating NUL. Returns
// `DK_STATUS_BUFFER_TOO_SMALL` when `len` is smaller; `buf` may then be null.
//
// # Safety
// `buf` must be writable for `len` bytes; `needed` must be valid or null.
enum DkStatus dk_last_error(char *buf, size_t len, size_t *needed);

// Parses schedule-file text into a new handle.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be valid.
enum DkStatus dk_schedule_parse(const char *text, struct DkSchedule **out);

// # Safety
// `schedule` must come from [`dk_schedule_parse`] or be null.
void dk_schedule_free(struct DkSchedule *schedule);

// Number of pulse and measurement steps.
//
// # Safety
// Pointers must be valid.
enum DkStatus dk_schedule_step_count(const struct DkSchedule *schedule, size_t *out);

// Compiles and executes the schedule. `seed` overrides the schedule seed
// when non-null.
//
// # Safety
// `schedule` and `out` must be valid; `seed` valid or null.
enum DkStatus dk_schedule_run(const struct DkSchedule *schedule,
                              enum DkModel model,
                              const uint64_t *seed,
                              struct DkRunResult **out);

// # Safety
// `result` must come from [`dk_schedule_run`] or be null.
void dk_result_free(struct DkRunResult *result);

// Fidelity against the first declared expectation, or against the ideal
// run when the schedule declares none.
//
// # Safety
// Pointers must be valid.
enum DkStatus dk_result_fidelity(const struct DkRunResult *result, double *out);

// # Safety
// Pointers must be valid.
enum DkStatus dk_result_fidelity_vs_ideal(const struct DkRunResult *result, double *out);

// Dimension of the final state.
//
// # Safety
// Pointers must be valid.
enum DkStatus dk_result_dim(const struct DkRunResult *result, size_t *out);

// Writes the final amplitudes as interleaved `re, im` pairs; `len` counts
// doubles and must be at least `2 * dim`.
//
// # Safety
// `buf` must be writable for `len` doubles.
enum DkStatus dk_result_amplitudes(const struct DkRunResult *result, double *buf, size_t len);

// # Safety
// Pointers must be valid.
enum DkStatus dk_result_measurement_count(const struct DkRunResult *result, size_t *out);

// Outcome of measurement `index`: `excited` is 1 for the excited ancilla,
// `probability` the Born probability of that outcome.
//
// # Safety
// Pointers must be valid.
enum DkStatus dk_result_measurement(const struct DkRunResult *result,
                                    size_t index,
                                    int32_t *excited,
                                    double *probability);

// Symmetric-model infidelity of `protocol` (`"w"` or `"ladder:K"`) for each
// ratio, using the schedule's config as template. `ratios` must be
// strictly increasing; `out` receives `count` values.
//
// # Safety
// `ratios` and `out` must hold `count` doubles; `protocol` NUL-terminated.
enum DkStatus dk_selectivity_sweep(const struct DkSchedule *schedule,
                                   const char *protocol,
                                   const double *ratios,
                                   size_t count,
                                   double *out);

// W-state `π`-pulse time in seconds for `omega_eff` (s⁻¹) and `n_ions`;
// `fits` is 1 when it meets the 0.1 ms budget.
//
// # Safety
// Pointers must be valid.
enum DkStatus dk_timescale_check(double omega_eff,
                                 size_t n_ions,
                                 double *pulse_time,
                                 int32_t *fits);

// Born probability that the excitation filter for `k0` flags the ancilla,
// for an ionic state with Dicke coefficients `re[k] + i im[k]`.
//
// # Safety
// `re` and `im` must hold `count` doubles; other pointers valid.
enum DkStatus dk_discrimination_probability(const struct DkSchedule *schedule,
                                            const double *re,
                                            const double *im,
                                            size_t count,
                                            size_t k0,
                                            size_t n0,
                                            enum DkModel model,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DICKE_H */
