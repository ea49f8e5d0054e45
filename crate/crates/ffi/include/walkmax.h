#ifndef WALKMAX_H
#define WALKMAX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum WalkmaxStatus {
  WALKMAX_STATUS_OK = 0,
  WALKMAX_STATUS_NULL_POINTER = 1,
  WALKMAX_STATUS_INVALID_ARGUMENT = 2,
  WALKMAX_STATUS_CONFIG = 3,
  WALKMAX_STATUS_NUMERIC = 4,
  WALKMAX_STATUS_CALIBRATION = 5,
  WALKMAX_STATUS_SAMPLER = 6,
  WALKMAX_STATUS_RUN = 7,
  WALKMAX_STATUS_VALIDATION = 8,
  WALKMAX_STATUS_IO = 9,
  WALKMAX_STATUS_PANIC = 10,
} WalkmaxStatus;

// The tail approximation `v` and its smoothing `w` for one model.
typedef struct WalkmaxApproximation WalkmaxApproximation;

// A calibrated importance sampler, reusable across levels up to the
// `b_max` it was built for.
typedef struct WalkmaxBgPlan WalkmaxBgPlan;

// An increment distribution.
typedef struct WalkmaxModel WalkmaxModel;

// Replication summary of one estimate. `std_error` avoids the `stderr`
// macro of `<stdio.h>`.
typedef struct WalkmaxSummary {
  uint64_t n;
  double mean;
  double std_error;
  double cv;
  double ci_lo;
  double ci_hi;
  double mean_steps;
  double mean_variates;
  double second_moment;
  double second_moment_stderr;
  double wall_time;
} WalkmaxSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *walkmax_version(void);

// Copies the calling thread's last error message into `buf` (truncated and
// NUL-terminated) and returns the buffer size needed for the full message,
// or 0 when there is no error. `buf` may be null to query the size.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
uintptr_t walkmax_last_error(char *buf, uintptr_t len);

// Weibull-tailed service minus deterministic interarrival.
//
// # Safety
// `out` must be valid for writes.
enum WalkmaxStatus walkmax_model_weibull_det(struct WalkmaxModel **out);

// Pareto service minus exponential interarrival.
//
// # Safety
// `out` must be valid for writes.
enum WalkmaxStatus walkmax_model_pareto_mg1(struct WalkmaxModel **out);

// Difference of exponentials with rates `mu` (service) and `lambda` (arrivals).
//
// # Safety
// `out` must be valid for writes.
enum WalkmaxStatus walkmax_model_exp_diff(double mu, double lambda, struct WalkmaxModel **out);

// Normal increments with mean `-mu`, `mu > 0`.
//
// # Safety
// `out` must be valid for writes.
enum WalkmaxStatus walkmax_model_gaussian(double mu, double sigma, struct WalkmaxModel **out);

// Finite lattice law with `len` atoms.
//
// # Safety
// `values` and `probs` must be valid for `len` reads; `out` for writes.
enum WalkmaxStatus walkmax_model_lattice(const double *values,
                                         const double *probs,
                                         uintptr_t len,
                                         struct WalkmaxModel **out);

// Mean increment.
//
// # Safety
// `model` must be a live handle; `out` valid for writes.
enum WalkmaxStatus walkmax_model_mean(const struct WalkmaxModel *model, double *out);

// # Safety
// `model` must be null or a handle not yet freed.
void walkmax_model_free(struct WalkmaxModel *model);

// # Safety
// `model` must be a live handle; `out` valid for writes. The new handle
// does not borrow `model`.
enum WalkmaxStatus walkmax_approximation_new(const struct WalkmaxModel *model,
                                             struct WalkmaxApproximation **out);

// `v(y)`, the approximation of `P(M > -y)`.
//
// # Safety
// `approx` must be a live handle; `out` valid for writes.
enum WalkmaxStatus walkmax_approximation_v(const struct WalkmaxApproximation *approx,
                                           double y,
                                           double *out);

// `w(y)`, the one-step smoothing of `v`.
//
// # Safety
// `approx` must be a live handle; `out` valid for writes.
enum WalkmaxStatus walkmax_approximation_w(const struct WalkmaxApproximation *approx,
                                           double y,
                                           double *out);

// # Safety
// `approx` must be null or a handle not yet freed.
void walkmax_approximation_free(struct WalkmaxApproximation *approx);

// Scans `[y_min, 0]` with spacing `grid_step` for the largest shift at
// which the margin condition holds on the whole grid below it.
//
// # Safety
// `approx` must be a live handle; `a_star` and `kappa` valid for writes.
enum WalkmaxStatus walkmax_find_a_star(const struct WalkmaxApproximation *approx,
                                       double gamma,
                                       double y_min,
                                       double grid_step,
                                       double *a_star,
                                       double *kappa);

// Calibrates the shift for each `γ` on a built-in grid and reports the one
// with the smallest second-moment bound constant.
//
// # Safety
// `approx` must be a live handle; `gamma`, `a_star` and `kappa` valid for
// writes.
enum WalkmaxStatus walkmax_optimize_gamma(const struct WalkmaxApproximation *approx,
                                          double y_min,
                                          double grid_step,
                                          double *gamma,
                                          double *a_star,
                                          double *kappa);

// Builds a sampler with shift `a_star` for levels up to `b_max`, using the
// scheme chosen automatically from the tail class.
//
// # Safety
// `approx` must be a live handle; `out` valid for writes.
enum WalkmaxStatus walkmax_bg_plan_new(const struct WalkmaxApproximation *approx,
                                       double gamma,
                                       double a_star,
                                       double b_max,
                                       struct WalkmaxBgPlan **out);

// # Safety
// `plan` must be null or a handle not yet freed.
void walkmax_bg_plan_free(struct WalkmaxBgPlan *plan);

// Importance-sampling estimate of `P(M > b)`. `workers = 0` uses all
// cores; the result does not depend on it.
//
// # Safety
// `plan` must be a live handle; `out` valid for writes.
enum WalkmaxStatus walkmax_bg_estimate(const struct WalkmaxBgPlan *plan,
                                       double b,
                                       uint64_t n,
                                       uint64_t seed,
                                       uintptr_t workers_,
                                       struct WalkmaxSummary *out);

// Exponential-tilting estimate for light-tailed models.
//
// # Safety
// `model` must be a live handle; `out` valid for writes.
enum WalkmaxStatus walkmax_siegmund_estimate(const struct WalkmaxModel *model,
                                             double b,
                                             uint64_t n,
                                             uint64_t seed,
                                             uintptr_t workers_,
                                             struct WalkmaxSummary *out);

// Plain simulation truncated at `max_steps` (0 selects the default horizon).
//
// # Safety
// `model` must be a live handle; `out` valid for writes.
enum WalkmaxStatus walkmax_crude_estimate(const struct WalkmaxModel *model,
                                          double b,
                                          uint64_t max_steps,
                                          uint64_t n,
                                          uint64_t seed,
                                          uintptr_t workers_,
                                          struct WalkmaxSummary *out);

// Runs an experiment described by configuration text, writing one summary
// per level into `out` (capacity `capacity`) and the level count into
// `written`. If `capacity` is too small nothing is run, `written` receives
// the required count and the status is `InvalidArgument`.
//
// # Safety
// `config` must be a NUL-terminated string; `out` valid for `capacity`
// writes; `written` valid for writes.
enum WalkmaxStatus walkmax_run_config(const char *config,
                                      uintptr_t workers_,
                                      struct WalkmaxSummary *out,
                                      uintptr_t capacity,
                                      uintptr_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WALKMAX_H */
