#ifndef ISOQUANT_H
#define ISOQUANT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum IsoquantStatus {
  ISOQUANT_STATUS_OK = 0,
  ISOQUANT_STATUS_NULL_POINTER = 1,
  ISOQUANT_STATUS_INVALID_INPUT = 2,
  ISOQUANT_STATUS_NO_DATA = 3,
  ISOQUANT_STATUS_NO_MODEL = 4,
  ISOQUANT_STATUS_ORDERING_VIOLATION = 5,
  ISOQUANT_STATUS_TOO_LARGE = 6,
  ISOQUANT_STATUS_STRUCTURAL = 7,
  ISOQUANT_STATUS_FORMAT = 8,
  ISOQUANT_STATUS_UTF8 = 9,
  ISOQUANT_STATUS_PANIC = 10,
} IsoquantStatus;

typedef struct IsoquantGrid IsoquantGrid;

typedef struct IsoquantMap IsoquantMap;

typedef struct IsoquantPrefix IsoquantPrefix;

typedef struct IsoquantTree IsoquantTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never null.
 */
const char *isoquant_status_str(enum IsoquantStatus status);

/**
 * Message for the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *isoquant_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed yet, or be null.
 */
void isoquant_string_free(char *s);

/**
 * Parses `levels=v1,v2,...` or `lattice=offset:step[:lo:hi]`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` writable.
 */
enum IsoquantStatus isoquant_grid_parse(const char *spec, struct IsoquantGrid **out);

/**
 * # Safety
 * `grid` must come from [`isoquant_grid_parse`] or be null.
 */
void isoquant_grid_free(struct IsoquantGrid *grid);

/**
 * Nearest grid level to `value`; ties go to the lower level.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum IsoquantStatus isoquant_grid_project(const struct IsoquantGrid *grid,
                                          double value,
                                          double *out);

/**
 * Batch fit of `n` samples. `weights` may be null for unit weights.
 *
 * # Safety
 * `scores` and `targets` (and `weights` unless null) must point to `n`
 * readable doubles; `out` must be writable.
 */
enum IsoquantStatus isoquant_fit(const struct IsoquantGrid *grid,
                                 const double *scores,
                                 const double *targets,
                                 const double *weights,
                                 size_t n,
                                 struct IsoquantMap **out);

/**
 * # Safety
 * `map` must come from this library or be null.
 */
void isoquant_map_free(struct IsoquantMap *map);

/**
 * Calibrated value for `score`.
 *
 * # Safety
 * `map` must be a live handle and `out` writable.
 */
enum IsoquantStatus isoquant_map_evaluate(const struct IsoquantMap *map, double score, double *out);

/**
 * Number of constant pieces in the map.
 *
 * # Safety
 * `map` must be a live handle or null (which yields 0).
 */
size_t isoquant_map_len(const struct IsoquantMap *map);

/**
 * Serializes the map to its canonical text form. Free the result with
 * [`isoquant_string_free`].
 *
 * # Safety
 * `map` must be a live handle and `out` writable.
 */
enum IsoquantStatus isoquant_map_to_text(const struct IsoquantMap *map, char **out);

/**
 * Loads a map from text written by [`isoquant_map_to_text`] or the CLI.
 *
 * # Safety
 * `text` must be NUL-terminated and `out` writable.
 */
enum IsoquantStatus isoquant_map_from_text(const char *text, struct IsoquantMap **out);

/**
 * Streaming calibrator for nondecreasing scores.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable. The grid is copied.
 */
enum IsoquantStatus isoquant_prefix_new(const struct IsoquantGrid *grid,
                                        struct IsoquantPrefix **out);

/**
 * # Safety
 * `state` must come from [`isoquant_prefix_new`] or be null.
 */
void isoquant_prefix_free(struct IsoquantPrefix *state);

/**
 * Appends one sample. A score below the previous one yields
 * `ORDERING_VIOLATION` and leaves the state unchanged.
 *
 * # Safety
 * `state` must be a live handle.
 */
enum IsoquantStatus isoquant_prefix_push(struct IsoquantPrefix *state,
                                         double score,
                                         double target,
                                         double weight);

/**
 * Detached copy of the current fit.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
enum IsoquantStatus isoquant_prefix_snapshot(const struct IsoquantPrefix *state,
                                             struct IsoquantMap **out);

/**
 * Streaming calibrator for scores in any order.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable. The grid is copied.
 */
enum IsoquantStatus isoquant_tree_new(const struct IsoquantGrid *grid, struct IsoquantTree **out);

/**
 * # Safety
 * `tree` must come from [`isoquant_tree_new`] or be null.
 */
void isoquant_tree_free(struct IsoquantTree *tree);

/**
 * Inserts one sample.
 *
 * # Safety
 * `tree` must be a live handle.
 */
enum IsoquantStatus isoquant_tree_insert(struct IsoquantTree *tree,
                                         double score,
                                         double target,
                                         double weight);

/**
 * Detached copy of the fit over every inserted sample.
 *
 * # Safety
 * `tree` must be a live handle and `out` writable.
 */
enum IsoquantStatus isoquant_tree_snapshot(const struct IsoquantTree *tree,
                                           struct IsoquantMap **out);

/**
 * Number of levels in the tree; 0 when empty or null.
 *
 * # Safety
 * `tree` must be a live handle or null.
 */
uint32_t isoquant_tree_depth(const struct IsoquantTree *tree);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOQUANT_H */
