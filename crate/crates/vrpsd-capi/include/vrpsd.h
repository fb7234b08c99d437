#ifndef VRPSD_H
#define VRPSD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum {
  VrpsdOk = 0,
  VrpsdNullArgument = 1,
  VrpsdInvalidUtf8 = 2,
  VrpsdParseError = 3,
  VrpsdGenerationError = 4,
  VrpsdSolveError = 5,
  VrpsdIoError = 6,
} VrpsdStatus;

/**
 * Solver outcome as reported by [`vrpsd_report_status`].
 */
typedef enum {
  VrpsdOptimal = 0,
  VrpsdTimeLimit = 1,
  VrpsdInfeasible = 2,
} VrpsdSolveStatus;

/**
 * Opaque problem instance handle.
 */
typedef struct VrpsdInstance VrpsdInstance;

/**
 * Opaque solver report handle.
 */
typedef struct VrpsdReport VrpsdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread. The pointer stays valid until
 * the next failing call on the same thread; never free it.
 */
const char *vrpsd_last_error(void);

/**
 * Parses an instance from text (native format or TSPLIB-style CVRP).
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be a valid pointer.
 */
VrpsdStatus vrpsd_instance_from_text(const char *text, VrpsdInstance **out);

/**
 * Loads an instance file (native format or TSPLIB-style CVRP).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
VrpsdStatus vrpsd_instance_from_file(const char *path, VrpsdInstance **out);

/**
 * Generates a benchmark-style instance: `n` customers, `m` vehicles,
 * filling coefficient `fill`, dispersion `sigma^2/mu`, deterministic in
 * `seed`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
VrpsdStatus vrpsd_instance_generate(uint32_t n,
                                    uint32_t m,
                                    double fill,
                                    double dispersion,
                                    uint64_t seed,
                                    VrpsdInstance **out);

/**
 * # Safety
 * `instance` must come from a `vrpsd_instance_*` constructor and not yet be
 * freed; a null pointer is ignored.
 */
void vrpsd_instance_free(VrpsdInstance *instance);

/**
 * Number of customers; 0 on a null handle.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
uint32_t vrpsd_instance_customers(const VrpsdInstance *instance);

/**
 * Vehicle capacity; 0 on a null handle.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
uint32_t vrpsd_instance_capacity(const VrpsdInstance *instance);

/**
 * Monotonicity verdict of the instance: 1 certified, 0 unknown.
 *
 * # Safety
 * `instance` must be a live handle or null.
 */
int32_t vrpsd_instance_is_monotone(const VrpsdInstance *instance);

/**
 * Solves the instance to proven optimality or the time limit.
 *
 * # Safety
 * `instance` must be a live handle; `out` must be a valid pointer.
 */
VrpsdStatus vrpsd_solve(const VrpsdInstance *instance,
                        double time_limit_seconds,
                        VrpsdReport **out);

/**
 * # Safety
 * `report` must come from [`vrpsd_solve`] and not yet be freed; null is
 * ignored.
 */
void vrpsd_report_free(VrpsdReport *report);

/**
 * # Safety
 * `report` must be a live handle or null (null reports infeasible).
 */
VrpsdSolveStatus vrpsd_report_status(const VrpsdReport *report);

/**
 * Incumbent objective; NaN when no solution was found.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
double vrpsd_report_objective(const VrpsdReport *report);

/**
 * Best proven lower bound.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
double vrpsd_report_bound(const VrpsdReport *report);

/**
 * Relative gap in percent; NaN when undefined.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
double vrpsd_report_gap_percent(const VrpsdReport *report);

/**
 * Number of explored branch-and-bound nodes.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
uint64_t vrpsd_report_nodes(const VrpsdReport *report);

/**
 * Serializes the full report as JSON. Free with [`vrpsd_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be a valid pointer.
 */
VrpsdStatus vrpsd_report_to_json(const VrpsdReport *report, char **out);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by [`vrpsd_report_to_json`] and not yet
 * freed; null is ignored.
 */
void vrpsd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VRPSD_H */
