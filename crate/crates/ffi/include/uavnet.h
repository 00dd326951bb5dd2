#ifndef UAVNET_H
#define UAVNET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible FFI call.
 */
typedef enum {
  /**
   * Success.
   */
  UavnetOk = 0,
  /**
   * A required pointer argument was null.
   */
  UavnetNullArgument = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  UavnetInvalidUtf8 = 2,
  /**
   * The scenario file or JSON failed to load or validate.
   */
  UavnetInvalidScenario = 3,
  /**
   * Mission planning failed (goal unreachable within the horizon).
   */
  UavnetPlanningFailed = 4,
  /**
   * The run stopped before all pictures were delivered.
   */
  UavnetIncomplete = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  UavnetPanic = 6,
} UavnetStatus;

/**
 * Opaque handle: a validated scenario.
 */
typedef struct UavnetScenario UavnetScenario;

/**
 * Opaque handle: the trace of one executed run.
 */
typedef struct UavnetTrace UavnetTrace;

/**
 * Headline metrics of a run.
 */
typedef struct {
  /**
   * Step at which the last picture reached the home base.
   */
  uint32_t mission_length;
  /**
   * Sum over pictures of (delivery step - capture step).
   */
  uint64_t total_staleness;
  /**
   * Pictures delivered to the home base.
   */
  uint32_t delivered;
  /**
   * Whether every goal picture was delivered.
   */
  bool completed;
} UavnetMetrics;

/**
 * Network-aware vs network-unaware comparison on one scenario.
 */
typedef struct {
  UavnetMetrics aware;
  UavnetMetrics unaware;
  /**
   * Percent reduction of the aware run relative to the unaware run.
   */
  double staleness_reduction_pct;
  double length_reduction_pct;
} UavnetCompare;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for this thread's most recent failed call, or an empty string.
 * The pointer stays valid until the thread's next FFI call.
 */
const char *uavnet_last_error(void);

/**
 * Load and validate a scenario from a JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
UavnetStatus uavnet_scenario_load(const char *path, UavnetScenario **out);

/**
 * Parse and validate a scenario from a JSON string.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be a valid pointer.
 */
UavnetStatus uavnet_scenario_parse(const char *json, UavnetScenario **out);

/**
 * Release a scenario handle. Null is ignored.
 *
 * # Safety
 * `sc` must be null or a pointer obtained from a scenario constructor,
 * released at most once.
 */
void uavnet_scenario_free(UavnetScenario *sc);

/**
 * Number of UAVs in the scenario.
 *
 * # Safety
 * `sc` must be a valid scenario handle.
 */
uint32_t uavnet_scenario_uav_count(const UavnetScenario *sc);

/**
 * Number of goal targets in the scenario.
 *
 * # Safety
 * `sc` must be a valid scenario handle.
 */
uint32_t uavnet_scenario_target_count(const UavnetScenario *sc);

/**
 * Execute the scenario in its configured mode and hand back the trace.
 * Returns `UAVNET_INCOMPLETE` (with a trace still handed out) when the
 * step budget ran out before every picture was delivered.
 *
 * # Safety
 * `sc` must be a valid scenario handle; `out` must be a valid pointer.
 */
UavnetStatus uavnet_run(const UavnetScenario *sc, UavnetTrace **out);

/**
 * Release a trace handle. Null is ignored.
 *
 * # Safety
 * `trace` must be null or a pointer obtained from `uavnet_run`, released
 * at most once.
 */
void uavnet_trace_free(UavnetTrace *trace);

/**
 * Copy the trace's headline metrics into `out`.
 *
 * # Safety
 * `trace` must be a valid trace handle; `out` must be a valid pointer.
 */
UavnetStatus uavnet_trace_metrics(const UavnetTrace *trace, UavnetMetrics *out);

/**
 * Serialize the full trace as JSON; release the string with
 * `uavnet_string_free`.
 *
 * # Safety
 * `trace` must be a valid trace handle; `out` must be a valid pointer.
 */
UavnetStatus uavnet_trace_json(const UavnetTrace *trace, char **out);

/**
 * Compute the optimal mission plan and serialize it as JSON; release the
 * string with `uavnet_string_free`.
 *
 * # Safety
 * `sc` must be a valid scenario handle; `out` must be a valid pointer.
 */
UavnetStatus uavnet_plan_json(const UavnetScenario *sc, char **out);

/**
 * Run the scenario in both network-aware and network-unaware modes and
 * copy the comparison into `out`.
 *
 * # Safety
 * `sc` must be a valid scenario handle; `out` must be a valid pointer.
 */
UavnetStatus uavnet_compare(const UavnetScenario *sc, UavnetCompare *out);

/**
 * Release a string handed out by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from a `*_json` call, released
 * at most once.
 */
void uavnet_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* UAVNET_H */
