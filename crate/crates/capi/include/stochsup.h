#ifndef STOCHSUP_H
#define STOCHSUP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function. `Infeasible` mirrors
 * the CLI's exit code 2 and is not an error: the solver proved there is
 * no strategy within budget.
 */
typedef enum StochsupStatus {
  StochsupStatus_Ok = 0,
  StochsupStatus_Infeasible = 2,
  StochsupStatus_InvalidArgument = 3,
  StochsupStatus_ParseError = 4,
  StochsupStatus_SolveError = 5,
  StochsupStatus_Panic = 6,
} StochsupStatus;

/**
 * Opaque scenario-list handle, bound to the instance it was parsed with.
 */
typedef struct StochsupDistribution StochsupDistribution;

/**
 * Opaque instance handle.
 */
typedef struct StochsupInstance StochsupInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or NULL when the
 * last call succeeded. Free with `stochsup_string_free`.
 */
char *stochsup_last_error(void);

/**
 * Library version as a heap string; free with `stochsup_string_free`.
 */
char *stochsup_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by a stochsup function and
 * not yet freed; NULL is ignored.
 */
void stochsup_string_free(char *s);

/**
 * Parses an instance from its JSON document.
 *
 * # Safety
 * `json` must point to a NUL-terminated string and `out` to writable
 * pointer storage; on `Ok` the caller owns the handle and must release it
 * with `stochsup_instance_free`.
 */
enum StochsupStatus stochsup_instance_from_json(const char *json, struct StochsupInstance **out);

/**
 * Releases an instance handle.
 *
 * # Safety
 * `handle` must come from `stochsup_instance_from_json` and not yet be
 * freed; NULL is ignored.
 */
void stochsup_instance_free(struct StochsupInstance *handle);

/**
 * Number of clients in the instance; 0 on NULL.
 *
 * # Safety
 * `handle` must be a live instance handle or NULL.
 */
uintptr_t stochsup_instance_num_clients(const struct StochsupInstance *handle);

/**
 * Number of facilities in the instance; 0 on NULL.
 *
 * # Safety
 * `handle` must be a live instance handle or NULL.
 */
uintptr_t stochsup_instance_num_facilities(const struct StochsupInstance *handle);

/**
 * Parses a scenario list against an instance.
 *
 * # Safety
 * `instance` must be a live handle, `json` a NUL-terminated string, and
 * `out` writable; on `Ok` the caller owns the distribution handle.
 */
enum StochsupStatus stochsup_distribution_from_json(const struct StochsupInstance *instance,
                                                    const char *json,
                                                    struct StochsupDistribution **out);

/**
 * Releases a distribution handle.
 *
 * # Safety
 * `handle` must come from `stochsup_distribution_from_json` and not yet
 * be freed; NULL is ignored.
 */
void stochsup_distribution_free(struct StochsupDistribution *handle);

/**
 * Runs a named algorithm (sup3, matsup5, musup5, matsup11, exact) and, on
 * success, writes a JSON document `{report, strategy}`. Pass NaN as
 * `radius` to use the instance radii.
 *
 * # Safety
 * `instance` and `dist` must be live handles, `algo` a NUL-terminated
 * string, `out_json` writable; the returned string is freed with
 * `stochsup_string_free`.
 */
enum StochsupStatus stochsup_solve_json(const struct StochsupInstance *instance,
                                        const struct StochsupDistribution *dist,
                                        const char *algo,
                                        double radius,
                                        char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STOCHSUP_H */
