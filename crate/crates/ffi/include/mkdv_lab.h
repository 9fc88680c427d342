#ifndef MKDV_LAB_H
#define MKDV_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The nonzero values below 4 match the CLI exit codes.
 */
typedef enum {
  MKDV_STATUS_OK = 0,
  /**
   * Invalid parameters, configuration or preconditions.
   */
  MKDV_STATUS_PRECONDITION = 1,
  /**
   * Divergence, instability, insufficient resolution or range errors.
   */
  MKDV_STATUS_NUMERICAL = 2,
  MKDV_STATUS_IO = 3,
  MKDV_STATUS_NULL_POINTER = 4,
  /**
   * A string argument was not valid UTF-8 or held an interior NUL.
   */
  MKDV_STATUS_ENCODING = 5,
  MKDV_STATUS_PANIC = 6,
} MkdvStatus;

/**
 * Parsed and validated experiment configuration.
 */
typedef struct MkdvConfig MkdvConfig;

/**
 * Result of one experiment.
 */
typedef struct MkdvRecord MkdvRecord;

/**
 * One CSV row of a record. Missing values are NaN, a missing sample id is -1.
 */
typedef struct {
  double r;
  double s;
  double b;
  double b_prime;
  double lambda;
  double delta;
  int64_t sample_id;
  double lhs;
  double rhs;
  double ratio;
} MkdvRow;

/**
 * Zeros of the resonance function in `eta1` and the common weight `|g'|`.
 */
typedef struct {
  double zero_lo;
  double zero_hi;
  double weight;
} MkdvResonance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *mkdv_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mkdv_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void mkdv_string_free(char *s);

/**
 * Parses and validates a configuration. On success `*out` owns a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
MkdvStatus mkdv_config_parse(const char *text, MkdvConfig **out);

/**
 * Canonical text of a configuration.
 *
 * # Safety
 * `config` must be a live handle and `out` a writable pointer.
 */
MkdvStatus mkdv_config_to_text(const MkdvConfig *config, char **out);

/**
 * Overrides the seed of a configuration.
 *
 * # Safety
 * `config` must be a live handle.
 */
MkdvStatus mkdv_config_set_seed(MkdvConfig *config, uint64_t seed);

/**
 * Releases a configuration. Null is ignored.
 *
 * # Safety
 * `config` must come from [`mkdv_config_parse`] and not have been freed.
 */
void mkdv_config_free(MkdvConfig *config);

/**
 * Runs the experiment. A run that stops early still returns `MKDV_STATUS_OK`
 * with a partial record; see [`mkdv_record_exit_code`].
 *
 * # Safety
 * `config` must be a live handle and `out` a writable pointer.
 */
MkdvStatus mkdv_run(const MkdvConfig *config, MkdvRecord **out);

/**
 * Releases a record. Null is ignored.
 *
 * # Safety
 * `record` must come from [`mkdv_run`] and not have been freed.
 */
void mkdv_record_free(MkdvRecord *record);

/**
 * CLI exit code of the record: 0 clean, 2 flagged, else the failure's code.
 * Returns -1 for a null handle.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
int32_t mkdv_record_exit_code(const MkdvRecord *record);

/**
 * Whether the run stopped before finishing.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
bool mkdv_record_is_partial(const MkdvRecord *record);

/**
 * Number of sample rows, without summary rows. Zero for a null handle.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
size_t mkdv_record_row_count(const MkdvRecord *record);

/**
 * Copies sample row `index` into `*out`.
 *
 * # Safety
 * `record` must be a live handle and `out` a writable pointer.
 */
MkdvStatus mkdv_record_row(const MkdvRecord *record, size_t index, MkdvRow *out);

/**
 * Looks up a named summary value such as `max_over_median`.
 *
 * # Safety
 * `record` must be a live handle, `name` a NUL-terminated string and `out`
 * a writable pointer.
 */
MkdvStatus mkdv_record_summary(const MkdvRecord *record, const char *name, double *out);

/**
 * Number of flags raised by the run.
 *
 * # Safety
 * `record` must be null or a live handle.
 */
size_t mkdv_record_flag_count(const MkdvRecord *record);

/**
 * The record as CSV, with summary rows and the partial marker.
 *
 * # Safety
 * `record` must be a live handle and `out` a writable pointer.
 */
MkdvStatus mkdv_record_csv(const MkdvRecord *record, char **out);

/**
 * Resonance data at `(xi, xi1)`. Fails for `xi = 0` or `2 xi1 = xi`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
MkdvStatus mkdv_resonance(double xi, double xi1, MkdvResonance *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MKDV_LAB_H */
