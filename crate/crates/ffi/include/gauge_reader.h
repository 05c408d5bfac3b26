#ifndef GAUGE_READER_H
#define GAUGE_READER_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GrScale {
  GR_SCALE_OUTER = 0,
  GR_SCALE_INNER = 1,
} GrScale;

typedef enum GrStage {
  GR_STAGE_NOTCHES = 0,
  GR_STAGE_ELLIPSE = 1,
  GR_STAGE_NEEDLE = 2,
  GR_STAGE_OCR = 3,
} GrStage;

/**
 * Outcome of one stage; `NotRun` when an earlier stage stopped the pipeline.
 */
typedef enum GrStageResult {
  GR_STAGE_RESULT_NOT_RUN = -1,
  GR_STAGE_RESULT_OK = 0,
  GR_STAGE_RESULT_INSUFFICIENT_NOTCHES = 1,
  GR_STAGE_RESULT_DEGENERATE_ELLIPSE = 2,
  GR_STAGE_RESULT_INSUFFICIENT_NEEDLE_POINTS = 3,
  GR_STAGE_RESULT_ISOTROPIC_NEEDLE = 4,
  GR_STAGE_RESULT_NO_INTERSECTION = 5,
  GR_STAGE_RESULT_INSUFFICIENT_MARKERS = 6,
  GR_STAGE_RESULT_NO_CONSENSUS = 7,
  GR_STAGE_RESULT_AMBIGUOUS_ORIENTATION = 8,
} GrStageResult;

typedef enum GrStatus {
  GR_STATUS_OK = 0,
  GR_STATUS_NULL_POINTER = 1,
  GR_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON.
   */
  GR_STATUS_SYNTAX_ERROR = 3,
  /**
   * Well-formed JSON that violates the fixture or config schema.
   */
  GR_STATUS_SCHEMA_ERROR = 4,
  GR_STATUS_IO = 5,
  GR_STATUS_OUT_OF_RANGE = 6,
  GR_STATUS_INVALID_ARGUMENT = 7,
  GR_STATUS_GEOMETRY = 8,
  GR_STATUS_PANIC = 9,
} GrStatus;

typedef struct GrConfig GrConfig;

typedef struct GrFixture GrFixture;

typedef struct GrReport GrReport;

typedef struct GrEllipse {
  double center_x;
  double center_y;
  double a;
  double b;
  double theta;
} GrEllipse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Empty if none. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *gr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gr_version(void);

/**
 * Parses and validates a fixture document of `len` bytes.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum GrStatus gr_fixture_parse(const uint8_t *data, size_t len, struct GrFixture **out);

/**
 * # Safety
 * `fixture` must be null or a handle from [`gr_fixture_parse`] not yet freed.
 */
void gr_fixture_free(struct GrFixture *fixture);

/**
 * # Safety
 * `out` must be writable.
 */
enum GrStatus gr_config_default(struct GrConfig **out);

/**
 * Loads a pipeline config file; a relative lexicon path resolves against
 * the file's directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GrStatus gr_config_load(const char *path, struct GrConfig **out);

/**
 * # Safety
 * `config` must be null or a live config handle.
 */
void gr_config_free(struct GrConfig *config);

/**
 * Runs the pipeline. `config` may be null for defaults. A report is
 * produced even when no reading could be computed.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum GrStatus gr_read_gauge(const struct GrFixture *fixture,
                            const struct GrConfig *config,
                            struct GrReport **out);

/**
 * # Safety
 * `report` must be null or a live report handle.
 */
void gr_report_free(struct GrReport *report);

/**
 * Number of readings (0, 1 or 2). Returns 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live report handle.
 */
size_t gr_report_reading_count(const struct GrReport *report);

/**
 * Reading `index`, with the scale it belongs to.
 *
 * # Safety
 * `report` must be a live handle; `scale` and `value` must be writable.
 */
enum GrStatus gr_report_reading(const struct GrReport *report,
                                size_t index,
                                enum GrScale *scale,
                                double *value);

/**
 * Status of one stage.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
enum GrStageResult gr_report_stage(const struct GrReport *report, enum GrStage stage);

/**
 * The failure that prevented a reading, or `GR_STAGE_RESULT_OK`.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
enum GrStageResult gr_report_failure(const struct GrReport *report);

/**
 * Serializes the report to a NUL-terminated JSON string owned by the
 * caller; release it with [`gr_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum GrStatus gr_report_to_json(const struct GrReport *report, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void gr_string_free(char *s);

/**
 * `100·|predicted − truth| / (range_max − range_min)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GrStatus gr_relative_error(double predicted,
                                double truth,
                                double range_min,
                                double range_max,
                                double *out);

/**
 * Direct least-squares ellipse fit to `n_points` points stored as
 * interleaved `x, y` pairs.
 *
 * # Safety
 * `xy` must point to `2 * n_points` doubles; `out` must be writable.
 */
enum GrStatus gr_fit_ellipse(const double *xy, size_t n_points, struct GrEllipse *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUGE_READER_H */
