#ifndef IPJDSVD_H
#define IPJDSVD_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every call.
 */
typedef enum IpjStatus {
  IPJ_STATUS_OK = 0,
  IPJ_STATUS_NULL_POINTER = 1,
  IPJ_STATUS_INVALID_ARGUMENT = 2,
  IPJ_STATUS_IO = 3,
  IPJ_STATUS_PARSE = 4,
  IPJ_STATUS_DIMENSION_MISMATCH = 5,
  IPJ_STATUS_NON_FINITE = 6,
  IPJ_STATUS_NUMERICAL_FAILURE = 7,
  IPJ_STATUS_INDEX_OUT_OF_RANGE = 8,
  IPJ_STATUS_BUFFER_TOO_SMALL = 9,
  IPJ_STATUS_PANIC = 10,
} IpjStatus;

/**
 * How a solve ended.
 */
typedef enum IpjTermination {
  IPJ_TERMINATION_CONVERGED = 0,
  IPJ_TERMINATION_MAX_OUTER = 1,
  IPJ_TERMINATION_STALLED = 2,
} IpjTermination;

/**
 * Which correction equation the solver uses.
 */
typedef enum IpjMode {
  IPJ_MODE_JDSVD = 0,
  IPJ_MODE_IPJDSVD = 1,
} IpjMode;

/**
 * Opaque sparse matrix.
 */
typedef struct IpjMatrix IpjMatrix;

/**
 * Opaque result of a solve.
 */
typedef struct IpjResult IpjResult;

/**
 * Solver parameters. Fill with [`ipj_config_default`] and adjust.
 */
typedef struct IpjConfig {
  double tau;
  /**
   * Number of triplets wanted.
   */
  size_t num;
  double tol;
  size_t kmax;
  size_t kmin;
  double eps_inner;
  double pretol1;
  double pretol2;
  /**
   * An [`IpjMode`] value.
   */
  uint32_t mode;
  uint64_t seed;
  /**
   * Cap on correction-equation solves; 0 selects the default.
   */
  size_t maxit_outer;
} IpjConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error of this thread, NUL-terminated, into `buf`.
 * Returns the length including the terminator; if that exceeds `len`
 * nothing is written. Passing a null `buf` queries the length.
 */
size_t ipj_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ipj_version(void);

/**
 * Default parameters for `num` triplets nearest `tau`.
 */
enum IpjStatus ipj_config_default(double tau, size_t num, struct IpjConfig *out);

/**
 * Builds a matrix from `nnz` zero-based coordinate entries. Duplicates are
 * summed.
 */
enum IpjStatus ipj_matrix_from_triplets(size_t nrows,
                                        size_t ncols,
                                        size_t nnz,
                                        const size_t *rows,
                                        const size_t *cols,
                                        const double *values,
                                        struct IpjMatrix **out);

/**
 * Reads a Matrix Market file.
 */
enum IpjStatus ipj_matrix_load(const char *path, struct IpjMatrix **out);

enum IpjStatus ipj_matrix_shape(const struct IpjMatrix *matrix, size_t *nrows, size_t *ncols);

/**
 * Releases a matrix. Null is ignored.
 */
void ipj_matrix_free(struct IpjMatrix *matrix);

/**
 * Computes the `config->num` singular triplets nearest `config->tau`.
 * A run that stops before all triplets converge still returns `Ok` with a
 * result; check [`ipj_result_termination`].
 */
enum IpjStatus ipj_solve(const struct IpjMatrix *matrix,
                         const struct IpjConfig *config,
                         struct IpjResult **out);

/**
 * Releases a result. Null is ignored.
 */
void ipj_result_free(struct IpjResult *result);

/**
 * Number of converged triplets.
 */
enum IpjStatus ipj_result_count(const struct IpjResult *result, size_t *count);

enum IpjStatus ipj_result_termination(const struct IpjResult *result,
                                      enum IpjTermination *termination);

/**
 * Total products with `A` and `Aᵀ`, and outer iterations.
 */
enum IpjStatus ipj_result_stats(const struct IpjResult *result,
                                uint64_t *mvs,
                                size_t *outer_iterations);

/**
 * Value and residual norm of triplet `index` (in order of convergence).
 */
enum IpjStatus ipj_result_triplet(const struct IpjResult *result,
                                  size_t index,
                                  double *value,
                                  double *residual);

/**
 * Copies the left (length `nrows`) and right (length `ncols`) singular
 * vectors of triplet `index`. Either buffer may be null to skip it.
 */
enum IpjStatus ipj_result_vectors(const struct IpjResult *result,
                                  size_t index,
                                  double *left,
                                  size_t left_len,
                                  double *right,
                                  size_t right_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPJDSVD_H */
