/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef XPAUDIT_H
#define XPAUDIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The first six mirror the command-line exit codes.
 */
typedef enum XpStatus {
  XP_STATUS_OK = 0,
  XP_STATUS_INVARIANT = 1,
  XP_STATUS_INPUT = 2,
  XP_STATUS_CONSTANT = 3,
  XP_STATUS_INSTANCE = 4,
  XP_STATUS_CHECKPOINT = 5,
  XP_STATUS_NULL_ARGUMENT = 6,
  XP_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * An exact value does not fit the requested integer type.
   */
  XP_STATUS_OVERFLOW = 8,
  XP_STATUS_PANIC = 9,
} XpStatus;

typedef enum XpRegistry {
  XP_REGISTRY_TABLE3_V1 = 0,
  XP_REGISTRY_DEFAULT_V1 = 1,
} XpRegistry;

/**
 * A table together with an instance; Shapley values are computed once.
 */
typedef struct XpProblem XpProblem;

/**
 * A classifier given by its complete truth table.
 */
typedef struct XpTable XpTable;

/**
 * Census counters; index `k` of the per-issue arrays is issue `I(k+1)`.
 */
typedef struct XpCensusCounts {
  uint64_t functions;
  uint64_t instances_class0;
  uint64_t instances_class1;
  uint64_t issue_functions[7];
  uint64_t issue_instances_class0[7];
  uint64_t issue_instances_class1[7];
  uint64_t implication_violations;
} XpCensusCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` and returns its
 * length in bytes, excluding the terminator. The message is truncated if
 * `capacity` is too small; pass a null `buf` to query the length.
 *
 * # Safety
 * `buf` must be null or valid for `capacity` bytes.
 */
size_t xp_last_error(char *buf, size_t capacity);

/**
 * Parses a table in the text format (`tt <m>` followed by the bit rows).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `table` a valid pointer.
 */
enum XpStatus xp_table_parse(const char *text, struct XpTable **table);

/**
 * Builds a table from `2^m` output bytes (zero or one), row 1 first.
 *
 * # Safety
 * `values` must be valid for `len` bytes and `table` a valid pointer.
 */
enum XpStatus xp_table_new(size_t m, const uint8_t *values, size_t len, struct XpTable **table);

/**
 * Number of features, or 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t xp_table_features(const struct XpTable *table);

/**
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void xp_table_free(struct XpTable *table);

/**
 * Explanation problem for the instance at 1-based `row` of the table.
 *
 * # Safety
 * `table` must be a live handle and `problem` a valid pointer.
 */
enum XpStatus xp_problem_from_row(const struct XpTable *table,
                                  size_t row,
                                  struct XpProblem **problem);

/**
 * Explanation problem for an instance given as `len` bytes (zero or one).
 *
 * # Safety
 * `table` must be a live handle, `point` valid for `len` bytes and
 * `problem` a valid pointer.
 */
enum XpStatus xp_problem_from_point(const struct XpTable *table,
                                    const uint8_t *point,
                                    size_t len,
                                    struct XpProblem **problem);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void xp_problem_free(struct XpProblem *problem);

/**
 * # Safety
 * `problem` must be a live handle and `prediction` a valid pointer.
 */
enum XpStatus xp_problem_prediction(const struct XpProblem *problem, uint8_t *prediction);

/**
 * Writes the abductive explanations as bitmasks, in ascending order.
 * `len` receives the number of sets even when `capacity` is too small.
 *
 * # Safety
 * `problem` must be a live handle, `buf` valid for `capacity` values and
 * `len` a valid pointer.
 */
enum XpStatus xp_problem_axps(const struct XpProblem *problem,
                              uint32_t *buf,
                              size_t capacity,
                              size_t *len);

/**
 * Contrastive counterpart of [`xp_problem_axps`].
 *
 * # Safety
 * Same as [`xp_problem_axps`].
 */
enum XpStatus xp_problem_cxps(const struct XpProblem *problem,
                              uint32_t *buf,
                              size_t capacity,
                              size_t *len);

/**
 * Bitmask of the features occurring in some abductive explanation.
 *
 * # Safety
 * `problem` must be a live handle and `mask` a valid pointer.
 */
enum XpStatus xp_problem_relevant(const struct XpProblem *problem, uint32_t *mask);

/**
 * Exact Shapley value of `feature` (1-based) as a reduced fraction with a
 * positive denominator. Fails with `Overflow` if either part exceeds 64 bits;
 * [`xp_problem_shapley_string`] has no such limit.
 *
 * # Safety
 * `problem` must be a live handle; `numerator` and `denominator` valid
 * pointers.
 */
enum XpStatus xp_problem_shapley(struct XpProblem *problem,
                                 size_t feature,
                                 int64_t *numerator,
                                 int64_t *denominator);

/**
 * Shapley value of `feature` as a NUL-terminated fraction such as `-23/192`.
 * `needed` (may be null) receives the buffer size required.
 *
 * # Safety
 * `problem` must be a live handle and `buf` valid for `capacity` bytes.
 */
enum XpStatus xp_problem_shapley_string(struct XpProblem *problem,
                                        size_t feature,
                                        char *buf,
                                        size_t capacity,
                                        size_t *needed);

/**
 * Issue flags under `registry`: bit `k` set means issue `I(k+1)` holds.
 *
 * # Safety
 * `problem` must be a live handle and `flags` a valid pointer.
 */
enum XpStatus xp_problem_issues(const struct XpProblem *problem,
                                enum XpRegistry registry,
                                uint8_t *flags);

/**
 * Exhaustive census over all non-constant functions on `m <= 4` features.
 *
 * # Safety
 * `counts` must be a valid pointer.
 */
enum XpStatus xp_census_exhaustive(size_t m,
                                   enum XpRegistry registry,
                                   size_t workers,
                                   struct XpCensusCounts *counts);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XPAUDIT_H */
