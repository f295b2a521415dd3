#ifndef SIGMAQC_H
#define SIGMAQC_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum SqStatus {
  /**
   * operation succeeded
   */
  SqOk = 0,
  /**
   * a run finished but at least one check failed
   */
  SqCheckFailed = 1,
  /**
   * malformed configuration or unknown case/check/field
   */
  SqConfigError = 2,
  /**
   * numerical failure (solver divergence, ellipticity violation)
   */
  SqNumericalError = 3,
  /**
   * IO failure
   */
  SqIoError = 4,
  /**
   * null pointer, invalid UTF-8, or a panic inside the library
   */
  SqInvalidArgument = 5,
} SqStatus;

/**
 * Parsed run configuration (opaque).
 */
typedef struct SqConfig SqConfig;

/**
 * Finished run report (opaque).
 */
typedef struct SqReport SqReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or null. Owned by the library;
 * valid until the next failing call on the same thread.
 */
const char *sq_last_error(void);

/**
 * Parse a config from a NUL-terminated string into `*out`.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to writable storage.
 */
enum SqStatus sq_config_parse_str(const char *text, struct SqConfig **out);

/**
 * Parse a config file into `*out`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be a valid
 * pointer to writable storage.
 */
enum SqStatus sq_config_parse_file(const char *path, struct SqConfig **out);

/**
 * Free a config handle. Null is a no-op.
 *
 * # Safety
 * `cfg` must have come from a `sq_config_parse_*` call and not have
 * been freed already.
 */
void sq_config_free(struct SqConfig *cfg);

/**
 * Execute the pipeline. On success `*out` receives a report handle and
 * the status is `SqOk` (all checks passed) or `SqCheckFailed`.
 *
 * # Safety
 * `cfg` must be a live config handle; `out` must be writable.
 */
enum SqStatus sq_run(const struct SqConfig *cfg, struct SqReport **out);

/**
 * 1 when every enforced check passed, 0 otherwise (or on null).
 *
 * # Safety
 * `report` must be a live report handle or null.
 */
int32_t sq_report_passed(const struct SqReport *report);

/**
 * Fetch a named scalar of the finest grid into `*value`.
 * Known keys: sup_d_sigma, inf_d_sigma, identity_residual, harnack_H,
 * k_ess, bmo_log_det, energy_sigma, area_integral, max_drift.
 *
 * # Safety
 * `report` must be a live handle; `key` a NUL-terminated string;
 * `value` writable.
 */
enum SqStatus sq_report_scalar(const struct SqReport *report, const char *key, double *value);

/**
 * Write the rendered report to a directory (as report.txt).
 *
 * # Safety
 * `report` must be a live handle; `dir` a NUL-terminated string.
 */
enum SqStatus sq_report_write(const struct SqReport *report, const char *dir);

/**
 * Render the report into a NUL-terminated string owned by the caller;
 * free it with `sq_string_free`.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *sq_report_render(const struct SqReport *report);

/**
 * Free a string returned by `sq_report_render`. Null is a no-op.
 *
 * # Safety
 * `s` must have come from this library and not have been freed.
 */
void sq_string_free(char *s);

/**
 * Free a report handle. Null is a no-op.
 *
 * # Safety
 * `report` must have come from `sq_run` and not have been freed.
 */
void sq_report_free(struct SqReport *report);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SIGMAQC_H */
