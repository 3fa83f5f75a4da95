#ifndef DRIFTRATE_H
#define DRIFTRATE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum DrStatus {
  DR_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DR_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range, or a string was not valid UTF-8.
   */
  DR_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The configuration text could not be parsed.
   */
  DR_STATUS_PARSE = 3,
  /**
   * The cost model violates a modelling assumption.
   */
  DR_STATUS_MODEL = 4,
  /**
   * A solver step failed to converge or a numerical check failed.
   */
  DR_STATUS_NUMERICAL = 5,
  /**
   * The drop-rate budget is below the smallest attainable rate.
   */
  DR_STATUS_INFEASIBLE = 6,
  /**
   * A Monte Carlo check disagreed with the analytic values.
   */
  DR_STATUS_VALIDATION = 7,
  /**
   * The caller's buffer is shorter than the data.
   */
  DR_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * An internal panic was caught.
   */
  DR_STATUS_PANIC = 9,
} DrStatus;

/**
 * A validated cost model together with its system parameters.
 */
typedef struct DrModel DrModel;

/**
 * A solved penalty problem.
 */
typedef struct DrSolution DrSolution;

/**
 * Scalar results of a solve.
 */
typedef struct DrSummary {
  double sigma2;
  double b;
  double p;
  double gamma;
  double beta;
  /**
   * `gamma - p * beta`, the average energy cost.
   */
  double gap;
  double residual_max;
  double phi_star;
  double beta_upper;
  double beta_lower;
  double p0;
  size_t n_z;
} DrSummary;

/**
 * Result of the constrained solve.
 */
typedef struct DrDual {
  double beta_hat;
  double p_star;
  double gamma;
  double beta;
  double energy_cost;
  double beta_upper;
  double beta_lower;
  /**
   * 1 if the budget binds, 0 if it is slack.
   */
  int32_t binding;
} DrDual;

/**
 * Simulation settings; see [`dr_sim_config_default`].
 */
typedef struct DrSimConfig {
  double dt;
  double horizon;
  size_t n_reps;
  uint64_t seed;
  double burn_in;
  int32_t boundary_correction;
  /**
   * Relative tolerance of the agreement checks.
   */
  double tol_mc;
} DrSimConfig;

/**
 * Monte Carlo estimates under the optimal policy.
 */
typedef struct DrSimSummary {
  double avg_cost_mean;
  double avg_cost_se;
  double drop_rate_mean;
  double drop_rate_se;
  double lower_push_rate_mean;
  /**
   * 1 if both agreement checks pass.
   */
  int32_t passed;
} DrSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *dr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dr_version(void);

/**
 * Builds a model from the text of a TOML run configuration (a `[model]` or
 * `[wireless]` block plus `[params]`).
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DrStatus dr_model_from_toml(const char *toml, struct DrModel **out);

/**
 * Exponential energy cost on `[theta_min, inf)` with buffer `lambda * d`
 * and variance `sigma^2`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum DrStatus dr_model_wireless(double lambda, double d, double alpha, double sigma, double theta_min, struct DrModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from a `dr_model_*` constructor and not be used again.
 */
void dr_model_free(struct DrModel *model);

/**
 * System parameters stored with the model.
 *
 * # Safety
 * `model` must be a live handle; `sigma2` and `b` writable pointers.
 */
enum DrStatus dr_model_system(const struct DrModel *model, double *sigma2, double *b);

/**
 * `c(x)`; fails with `DR_STATUS_INVALID_ARGUMENT` if `x` is not an action.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum DrStatus dr_model_eval_cost(const struct DrModel *model, double x, double *out);

/**
 * Smallest maximizer of `y x - c(x)`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum DrStatus dr_model_psi(const struct DrModel *model, double y, double *out);

/**
 * `sup_x { y x - c(x) }`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum DrStatus dr_model_phi(const struct DrModel *model, double y, double *out);

/**
 * Largest level at which the least drift is still optimal; may be `inf`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum DrStatus dr_model_p_zero(const struct DrModel *model, double *out);

/**
 * Solves the penalty problem. `n_z = 0` selects the default grid size.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum DrStatus dr_solve(const struct DrModel *model, double sigma2, double b, double p, size_t n_z, struct DrSolution **out);

/**
 * Releases a solution. Null is ignored.
 *
 * # Safety
 * `solution` must come from [`dr_solve`] and not be used again.
 */
void dr_solution_free(struct DrSolution *solution);

/**
 * Scalar results of a solve.
 *
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum DrStatus dr_solution_summary(const struct DrSolution *solution, struct DrSummary *out);

/**
 * Copies the grid tables into caller buffers of length `len`. Any of the
 * four buffers may be null to skip it. Fails with
 * `DR_STATUS_BUFFER_TOO_SMALL` if `len` is below the grid size.
 *
 * # Safety
 * Each non-null buffer must hold `len` doubles.
 */
enum DrStatus dr_solution_grid(const struct DrSolution *solution, double *z, double *v, double *f, double *theta, size_t len);

/**
 * Optimal drift at state `z` in `[0, b]`.
 *
 * # Safety
 * `solution` must be a live handle and `out` writable.
 */
enum DrStatus dr_solution_policy(const struct DrSolution *solution, double z, double *out);

/**
 * Finds the penalty whose optimal policy drops at rate `beta_hat`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum DrStatus dr_solve_pstar(const struct DrModel *model, double sigma2, double b, double beta_hat, struct DrDual *out);

/**
 * Default simulation settings.
 */
struct DrSimConfig dr_sim_config_default(void);

/**
 * Simulates the optimal policy of `solution`. A disagreement with the
 * analytic values is reported through `passed`, not as an error.
 *
 * # Safety
 * `solution` and `config` must be valid and `out` writable.
 */
enum DrStatus dr_simulate(const struct DrSolution *solution, const struct DrSimConfig *config, struct DrSimSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRIFTRATE_H */
