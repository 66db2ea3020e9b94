#ifndef NRP_H
#define NRP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum NrpStatus {
  NRP_STATUS_OK = 0,
  NRP_STATUS_NULL_ARGUMENT = 1,
  NRP_STATUS_INVALID_UTF8 = 2,
  NRP_STATUS_OUT_OF_RANGE = 3,
  NRP_STATUS_VALIDATION = 10,
  NRP_STATUS_CONTRADICTION = 11,
  NRP_STATUS_CYCLE = 12,
  NRP_STATUS_SIZE_GUARD = 13,
  NRP_STATUS_PARTITION = 14,
  NRP_STATUS_RESOURCE = 15,
  NRP_STATUS_DOMAIN = 16,
  NRP_STATUS_PARSE = 17,
  NRP_STATUS_CONFIG = 18,
  NRP_STATUS_IO = 19,
  NRP_STATUS_PANIC = 99,
} NrpStatus;

typedef enum NrpExactSolver {
  NRP_EXACT_SOLVER_BRUTE_FORCE = 0,
  NRP_EXACT_SOLVER_BRANCH_AND_BOUND = 1,
} NrpExactSolver;

typedef enum NrpInit {
  NRP_INIT_RANDOM = 0,
  NRP_INIT_PLS = 1,
  NRP_INIT_MAXPROB = 2,
} NrpInit;

// A Pareto front together with the instance it belongs to.
typedef struct NrpFront NrpFront;

// A validated instance with its transformed graph and ancestral ordering.
typedef struct NrpProblem NrpProblem;

// EDA settings. Fill with [`nrp_eda_options_default`] before changing fields.
typedef struct NrpEdaOptions {
  size_t population_size;
  size_t max_iterations;
  size_t stall_iterations;
  size_t sample_size;
  enum NrpInit init;
  // Non-zero selects maximum-probability sampling instead of PLS.
  uint8_t maxprob_sampler;
  double m_equivalent_size;
  double prior_p;
  uint64_t seed;
} NrpEdaOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses an instance JSON document with the effort limit at `ratio` of the
// total effort.
//
// # Safety
// `json` must be a nul-terminated string and `out` a writable pointer.
enum NrpStatus nrp_problem_from_json(const char *json, double ratio, struct NrpProblem **out);

// Same as [`nrp_problem_from_json`] reading the document from `path`.
//
// # Safety
// `path` must be a nul-terminated string and `out` a writable pointer.
enum NrpStatus nrp_problem_load(const char *path, double ratio, struct NrpProblem **out);

// # Safety
// `problem` must come from this library or be null.
void nrp_problem_free(struct NrpProblem *problem);

// Number of requirements, or 0 for a null handle.
//
// # Safety
// `problem` must come from this library or be null.
size_t nrp_problem_requirement_count(const struct NrpProblem *problem);

// Effort limit, or NaN for a null handle.
//
// # Safety
// `problem` must come from this library or be null.
double nrp_problem_effort_limit(const struct NrpProblem *problem);

// Exact Pareto front.
//
// # Safety
// `problem` must be a live handle and `out` a writable pointer.
enum NrpStatus nrp_solve_exact(const struct NrpProblem *problem,
                               enum NrpExactSolver solver,
                               struct NrpFront **out);

// Writes the default EDA settings for `problem` into `out`.
//
// # Safety
// `problem` must be a live handle and `out` a writable pointer.
enum NrpStatus nrp_eda_options_default(const struct NrpProblem *problem, struct NrpEdaOptions *out);

// Runs the EDA once. A null `options` uses the defaults.
//
// # Safety
// `problem` must be a live handle, `options` null or readable, and `out` a
// writable pointer.
enum NrpStatus nrp_solve_eda(const struct NrpProblem *problem,
                             const struct NrpEdaOptions *options,
                             struct NrpFront **out);

// # Safety
// `front` must come from this library or be null.
void nrp_front_free(struct NrpFront *front);

// Number of solutions, or 0 for a null handle.
//
// # Safety
// `front` must come from this library or be null.
size_t nrp_front_len(const struct NrpFront *front);

// Objective values of solution `index`, in ascending effort order.
//
// # Safety
// `front` must be a live handle; the output pointers must be writable.
enum NrpStatus nrp_front_point(const struct NrpFront *front,
                               size_t index,
                               double *satisfaction,
                               double *effort);

// Hypervolume against the nadir point `(effort limit, 0)`.
//
// # Safety
// `front` must be a live handle and `out` writable.
enum NrpStatus nrp_front_hypervolume(const struct NrpFront *front, double *out);

// Number of objective points of `front` also present on `reference`.
//
// # Safety
// Both handles must be live and `out` writable.
enum NrpStatus nrp_front_coincident(const struct NrpFront *front,
                                    const struct NrpFront *reference_front,
                                    size_t *out);

// The front as CSV text; release it with [`nrp_string_free`].
//
// # Safety
// `front` must be a live handle and `out` a writable pointer.
enum NrpStatus nrp_front_to_csv(const struct NrpFront *front, char **out);

// # Safety
// `s` must come from this library or be null.
void nrp_string_free(char *s);

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library from the same thread.
const char *nrp_last_error_message(void);

// Static name of a status code.
const char *nrp_status_name(enum NrpStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NRP_H */
