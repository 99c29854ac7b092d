#ifndef SPARSE_OLR_H
#define SPARSE_OLR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SolrStatus {
  SOLR_STATUS_OK = 0,
  SOLR_STATUS_NULL_POINTER = 1,
  SOLR_STATUS_INVALID_PARAMETER = 2,
  SOLR_STATUS_SHAPE_MISMATCH = 3,
  SOLR_STATUS_LIPSCHITZ_VIOLATION = 4,
  SOLR_STATUS_PROTOCOL = 5,
  SOLR_STATUS_RESOURCE_LIMIT = 6,
  SOLR_STATUS_PANIC = 7,
  SOLR_STATUS_OTHER = 8,
} SolrStatus;

/**
 * Opaque online learner.
 */
typedef struct SolrLearner SolrLearner;

/**
 * Regularity statistics of a comparator.
 */
typedef struct SolrStats {
  size_t horizon;
  double max_range;
  double path_length;
  double norm_sum;
  double first_variability;
  double energy;
  double second_variability;
  size_t switches;
} SolrStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *solr_last_error(void);

/**
 * Parameter-free learner on `R^dim`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SolrStatus solr_freegrad_new(size_t dim,
                                  double lipschitz,
                                  double epsilon,
                                  struct SolrLearner **out);

/**
 * Haar-dictionary learner for a fixed horizon `2^levels`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SolrStatus solr_haar_new(uint32_t levels,
                              size_t dim,
                              double lipschitz,
                              double epsilon,
                              struct SolrLearner **out);

/**
 * Haar-dictionary learner restarted on doubling blocks; no horizon needed.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SolrStatus solr_anytime_haar_new(size_t dim,
                                      double lipschitz,
                                      double epsilon,
                                      struct SolrLearner **out);

/**
 * Dimension of the learner's decisions.
 *
 * # Safety
 * `learner` must be a live handle or null.
 */
size_t solr_learner_dim(const struct SolrLearner *learner);

/**
 * Writes the current prediction into `out[0..len]`; `len` must equal the
 * learner's dimension.
 *
 * # Safety
 * `learner` must be a live handle and `out` must point to `len` writable
 * doubles.
 */
enum SolrStatus solr_learner_predict(struct SolrLearner *learner, double *out, size_t len);

/**
 * Feeds the gradient for the last prediction and advances one round.
 *
 * # Safety
 * `learner` must be a live handle and `gradient` must point to `len`
 * readable doubles.
 */
enum SolrStatus solr_learner_update(struct SolrLearner *learner,
                                    const double *gradient,
                                    size_t len);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `learner` must be null or a handle not yet freed.
 */
void solr_learner_free(struct SolrLearner *learner);

/**
 * Orthonormal Haar coefficients of a row-major `horizon x dim` signal,
 * written row-major in dictionary column order (all-one first). `horizon`
 * must be a power of two.
 *
 * # Safety
 * `values` and `out` must each point to `horizon * dim` doubles.
 */
enum SolrStatus solr_haar_analyze(const double *values, size_t horizon, size_t dim, double *out);

/**
 * Regularity statistics of a row-major `horizon x dim` comparator.
 *
 * # Safety
 * `values` must point to `horizon * dim` doubles and `out` to one
 * writable [`SolrStats`].
 */
enum SolrStatus solr_comparator_stats(const double *values,
                                      size_t horizon,
                                      size_t dim,
                                      struct SolrStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSE_OLR_H */
