#ifndef PSADLA_H
#define PSADLA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsadlaStatus {
  PSADLA_STATUS_OK = 0,
  PSADLA_STATUS_INVALID_ARGUMENT = 1,
  PSADLA_STATUS_DIMENSION_MISMATCH = 2,
  PSADLA_STATUS_NON_FINITE = 3,
  PSADLA_STATUS_SOLVER_FAILURE = 4,
  PSADLA_STATUS_CONTRACT_VIOLATION = 5,
  PSADLA_STATUS_WINDOW_LIMIT = 6,
  PSADLA_STATUS_PARSE_ERROR = 7,
  PSADLA_STATUS_IO_ERROR = 8,
  PSADLA_STATUS_NULL_POINTER = 9,
  PSADLA_STATUS_PANIC = 10,
} PsadlaStatus;

typedef enum PsadlaMethod {
  PSADLA_METHOD_PSADLA = 0,
  PSADLA_METHOD_SDD = 1,
  /**
   * `param_a` = initial offset, `param_b` = path budget.
   */
  PSADLA_METHOD_PATH_BASED = 2,
  /**
   * Step `param_a / sqrt(k)`.
   */
  PSADLA_METHOD_DIMINISHING = 3,
  /**
   * Step `param_a / (k + param_b)`.
   */
  PSADLA_METHOD_SQUARE_SUMMABLE = 4,
} PsadlaMethod;

typedef enum PsadlaFamily {
  PSADLA_FAMILY_L1 = 0,
  PSADLA_FAMILY_GAP = 1,
  PSADLA_FAMILY_TRANSPORT = 2,
} PsadlaFamily;

typedef enum PsadlaStopReason {
  PSADLA_STOP_REASON_GAP_MET = 0,
  PSADLA_STOP_REASON_MAX_ITERS = 1,
  PSADLA_STOP_REASON_TIME_LIMIT = 2,
  PSADLA_STOP_REASON_ZERO_GRADIENT = 3,
  PSADLA_STOP_REASON_CONTRACT_VIOLATION = 4,
  PSADLA_STOP_REASON_STEP_UNDERFLOW = 5,
  PSADLA_STOP_REASON_WINDOW_LIMIT = 6,
} PsadlaStopReason;

typedef enum PsadlaDomain {
  PSADLA_DOMAIN_UNCONSTRAINED = 0,
  PSADLA_DOMAIN_NON_NEGATIVE = 1,
} PsadlaDomain;

typedef struct PsadlaProblem PsadlaProblem;

typedef struct PsadlaRun PsadlaRun;

/**
 * Run parameters. Obtain defaults from [`psadla_config_default`].
 */
typedef struct PsadlaConfig {
  enum PsadlaMethod method;
  double gamma;
  double gamma_bar;
  /**
   * Initial level in the problem's own sense.
   */
  double initial_level;
  double stop_gap;
  size_t max_iters;
  /**
   * Non-positive means no limit.
   */
  double time_limit_ms;
  double epsilon;
  size_t check_every;
  double tol_feas;
  /**
   * Zero means unlimited.
   */
  size_t max_window;
  double param_a;
  double param_b;
  /**
   * Nonzero selects the incremental oracle.
   */
  int approximate;
  /**
   * Zero selects the family default.
   */
  size_t group_size;
} PsadlaConfig;

typedef struct PsadlaTraceRecord {
  size_t iter;
  double value;
  double best_value;
  /**
   * Meaningful only when `has_level` is nonzero.
   */
  double level;
  int has_level;
  double stepsize;
  double grad_norm_sq;
  size_t window_size;
  int triggered;
  double elapsed_ms;
} PsadlaTraceRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *psadla_last_error_message(void);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum PsadlaStatus psadla_config_default(struct PsadlaConfig *out);

/**
 * Seeded instance. `sizes` as for the command line: rows and columns (l1),
 * machines and jobs (gap), machines, jobs, operations and optional group
 * size (transport).
 *
 * # Safety
 * `sizes` must point to `n_sizes` values; `out` must be valid for writes.
 */
enum PsadlaStatus psadla_problem_generate(enum PsadlaFamily family,
                                          const size_t *sizes,
                                          size_t n_sizes,
                                          uint64_t seed,
                                          struct PsadlaProblem **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum PsadlaStatus psadla_problem_from_json(const char *json, struct PsadlaProblem **out);

/**
 * OR-Library GAP text. `name` may be null; a known name attaches its
 * reference value.
 *
 * # Safety
 * `text` and a non-null `name` must be NUL-terminated; `out` must be valid
 * for writes.
 */
enum PsadlaStatus psadla_problem_parse_orlib(const char *text,
                                             const char *name,
                                             struct PsadlaProblem **out);

/**
 * JSON text of the instance, released with [`psadla_string_free`].
 *
 * # Safety
 * `problem` must be a live handle; `out` must be valid for writes.
 */
enum PsadlaStatus psadla_problem_to_json(const struct PsadlaProblem *problem, char **out);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void psadla_string_free(char *s);

/**
 * # Safety
 * `problem` must be a live handle; `out` must be valid for writes.
 */
enum PsadlaStatus psadla_problem_dim(const struct PsadlaProblem *problem, size_t *out);

/**
 * Nonzero when the problem is a maximization.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be valid for writes.
 */
enum PsadlaStatus psadla_problem_is_maximization(const struct PsadlaProblem *problem, int *out);

/**
 * # Safety
 * `problem` must be a live handle; `value` and `has_value` must be valid
 * for writes.
 */
enum PsadlaStatus psadla_problem_known_fstar(const struct PsadlaProblem *problem,
                                             double *value,
                                             int *has_value);

/**
 * Exact value and (super)gradient at `x`, in the problem's own sense.
 *
 * # Safety
 * `x` and `gradient` must hold `n` values; `value` must be valid for writes.
 */
enum PsadlaStatus psadla_problem_evaluate(const struct PsadlaProblem *problem,
                                          const double *x,
                                          size_t n,
                                          double *value,
                                          double *gradient);

/**
 * # Safety
 * `problem` must be a handle from this library or null.
 */
void psadla_problem_free(struct PsadlaProblem *problem);

/**
 * Runs the configured method from `x0`. A run that stops on a broken
 * precondition still returns a handle; inspect its stop reason.
 *
 * # Safety
 * `problem` must be a live handle, `config` valid, `x0` must hold `n`
 * values and `out` must be valid for writes.
 */
enum PsadlaStatus psadla_solve(const struct PsadlaProblem *problem,
                               const struct PsadlaConfig *config,
                               const double *x0,
                               size_t n,
                               struct PsadlaRun **out);

/**
 * Number of recorded iterations, 0 for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
size_t psadla_run_iterations(const struct PsadlaRun *run);

/**
 * # Safety
 * `run` must be a live handle; `out` must be valid for writes.
 */
enum PsadlaStatus psadla_run_stop_reason(const struct PsadlaRun *run, enum PsadlaStopReason *out);

/**
 * # Safety
 * `run` must be a live handle; outputs must be valid for writes.
 */
enum PsadlaStatus psadla_run_summary(const struct PsadlaRun *run,
                                     double *best_value,
                                     double *final_level,
                                     int *has_level);

/**
 * # Safety
 * `run` must be a live handle; `out` must hold `n` values.
 */
enum PsadlaStatus psadla_run_best_point(const struct PsadlaRun *run, double *out, size_t n);

/**
 * # Safety
 * `run` must be a live handle; `out` must be valid for writes.
 */
enum PsadlaStatus psadla_run_trace_record(const struct PsadlaRun *run,
                                          size_t index,
                                          struct PsadlaTraceRecord *out);

/**
 * Number of level adjustments, 0 for a null handle.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
size_t psadla_run_adjustment_count(const struct PsadlaRun *run);

/**
 * # Safety
 * `run` must be a live handle; outputs must be valid for writes.
 */
enum PsadlaStatus psadla_run_adjustment(const struct PsadlaRun *run,
                                        size_t index,
                                        size_t *iter,
                                        double *old_level,
                                        double *new_level);

/**
 * # Safety
 * `run` must be a handle from this library or null.
 */
void psadla_run_free(struct PsadlaRun *run);

/**
 * Decides whether `normals · x <= rhs` (row-major `k × n`) has a point in
 * the domain. `witness` may be null; otherwise it receives `n` values when
 * the system is feasible.
 *
 * # Safety
 * `normals` must hold `k * n` values, `rhs` `k` values; outputs must be
 * valid for writes.
 */
enum PsadlaStatus psadla_check_feasible(const double *normals,
                                        const double *rhs,
                                        size_t k,
                                        size_t n,
                                        enum PsadlaDomain domain,
                                        double tol_feas,
                                        int *feasible,
                                        double *witness);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSADLA_H */
