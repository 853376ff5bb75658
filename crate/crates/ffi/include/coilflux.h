/* C interface of the coilflux coil shape optimizer. */

#ifndef COILFLUX_H
#define COILFLUX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum CoilfluxStatus {
  COILFLUX_STATUS_OK = 0,
  COILFLUX_STATUS_NULL_POINTER = 1,
  COILFLUX_STATUS_INVALID_UTF8 = 2,
  COILFLUX_STATUS_PARSE_ERROR = 3,
  COILFLUX_STATUS_INVALID_INPUT = 4,
  COILFLUX_STATUS_NEAR_SINGULAR = 5,
  COILFLUX_STATUS_DEGENERATE_VELOCITY = 6,
  COILFLUX_STATUS_SOLVER_FAILURE = 7,
  COILFLUX_STATUS_BUFFER_TOO_SMALL = 8,
  COILFLUX_STATUS_IO_ERROR = 9,
  COILFLUX_STATUS_INTERNAL_PANIC = 10,
} CoilfluxStatus;

/**
 * Terminal state of an optimization run.
 */
typedef enum CoilfluxRunStatus {
  COILFLUX_RUN_STATUS_CONVERGED = 0,
  COILFLUX_RUN_STATUS_MAX_ITERS = 1,
  COILFLUX_RUN_STATUS_SOLVER_FAILURE = 2,
} CoilfluxRunStatus;

/**
 * Opaque optimization-result handle.
 */
typedef struct CoilfluxRun CoilfluxRun;

/**
 * Opaque scene handle.
 */
typedef struct CoilfluxScene CoilfluxScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *coilflux_status_message(enum CoilfluxStatus status);

/**
 * Parse a scene from a JSON document. On success writes a new handle that
 * must be released with `coilflux_scene_free`.
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum CoilfluxStatus coilflux_scene_parse(const char *json, struct CoilfluxScene **out);

/**
 * Release a scene handle. Null is a no-op.
 * # Safety
 * `scene` must be null or a handle from `coilflux_scene_parse` not yet freed.
 */
void coilflux_scene_free(struct CoilfluxScene *scene);

/**
 * Serialize a scene back to JSON. The returned string must be released with
 * `coilflux_string_free`.
 * # Safety
 * `scene` must be a live handle and `out` a valid pointer.
 */
enum CoilfluxStatus coilflux_scene_to_json(const struct CoilfluxScene *scene, char **out);

/**
 * Release a string returned by this library. Null is a no-op.
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void coilflux_string_free(char *s);

/**
 * # Safety
 * `scene` must be null or a live handle.
 */
uintptr_t coilflux_scene_coil_count(const struct CoilfluxScene *scene);

/**
 * # Safety
 * `scene` must be null or a live handle.
 */
uintptr_t coilflux_scene_pair_count(const struct CoilfluxScene *scene);

/**
 * Number of design variables (length of the packed design vector).
 * # Safety
 * `scene` must be null or a live handle.
 */
uintptr_t coilflux_scene_design_dim(const struct CoilfluxScene *scene);

/**
 * Mutual inductance of measured pair `pair` at the scene's geometry (henry).
 * # Safety
 * `scene` must be a live handle and `out` a valid pointer.
 */
enum CoilfluxStatus coilflux_pair_mutual_inductance(const struct CoilfluxScene *scene,
                                                    uintptr_t pair,
                                                    double *out);

/**
 * Arc length of coil `coil` at the scene's geometry (meters).
 * # Safety
 * `scene` must be a live handle and `out` a valid pointer.
 */
enum CoilfluxStatus coilflux_coil_length(const struct CoilfluxScene *scene,
                                         uintptr_t coil,
                                         double *out);

/**
 * Pack the scene's designable geometry into `out` (length `len` must equal
 * the design dimension).
 * # Safety
 * `scene` must be a live handle and `out` must point to at least `len` doubles.
 */
enum CoilfluxStatus coilflux_pack(const struct CoilfluxScene *scene, double *out, uintptr_t len);

/**
 * Objective J at design vector `x` (pass null to use the scene's current
 * geometry).
 * # Safety
 * `scene` must be a live handle; `x` null or `x_len` doubles; `out` valid.
 */
enum CoilfluxStatus coilflux_objective(const struct CoilfluxScene *scene,
                                       const double *x,
                                       uintptr_t x_len,
                                       double *out);

/**
 * Gradient of the objective at design vector `x` (null for the current
 * geometry); `grad` must hold the design dimension.
 * # Safety
 * `scene` must be a live handle; `x` null or `x_len` doubles; `grad` must point to at least `grad_len` doubles.
 */
enum CoilfluxStatus coilflux_objective_gradient(const struct CoilfluxScene *scene,
                                                const double *x,
                                                uintptr_t x_len,
                                                double *grad,
                                                uintptr_t grad_len);

/**
 * Run the constrained optimization. On success writes a result handle to be
 * released with `coilflux_run_free`.
 * # Safety
 * `scene` must be a live handle and `out` a valid pointer.
 */
enum CoilfluxStatus coilflux_optimize(const struct CoilfluxScene *scene,
                                      bool maximize,
                                      struct CoilfluxRun **out);

/**
 * Release an optimization result. Null is a no-op.
 * # Safety
 * `run` must be null or a handle from `coilflux_optimize` not yet freed.
 */
void coilflux_run_free(struct CoilfluxRun *run);

/**
 * Final objective value of a completed run (the true J, regardless of the
 * maximize flag).
 * # Safety
 * `run` must be null or a live handle.
 */
double coilflux_run_final_objective(const struct CoilfluxRun *run);

/**
 * # Safety
 * `run` must be null or a live handle.
 */
uintptr_t coilflux_run_iterations(const struct CoilfluxRun *run);

/**
 * # Safety
 * `run` must be null or a live handle.
 */
enum CoilfluxRunStatus coilflux_run_status(const struct CoilfluxRun *run);

/**
 * Copy the optimized design vector into `out` (length `len` must cover the
 * design dimension).
 * # Safety
 * `run` must be a live handle and `out` must point to at least `len` doubles.
 */
enum CoilfluxStatus coilflux_run_design(const struct CoilfluxRun *run, double *out, uintptr_t len);

/**
 * Write the run's artifacts (summary, trace, optimized scene, geometry
 * CSVs) into a directory.
 * # Safety
 * `scene` and `run` must be live handles and `out_dir` a valid NUL-terminated path.
 */
enum CoilfluxStatus coilflux_run_export(const struct CoilfluxScene *scene,
                                        const struct CoilfluxRun *run,
                                        const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COILFLUX_H */
