#ifndef EMBR_H
#define EMBR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Word-level edit distance against a reference label sequence.
 */
#define EMBR_LOSS_WORD_EDIT 0

/**
 * Per-frame cluster mismatches against a reference alignment.
 */
#define EMBR_LOSS_FRAME_ERROR 1

/**
 * Result code of a fallible call.
 */
typedef enum EmbrStatus {
  EMBR_STATUS_OK = 0,
  EMBR_STATUS_USAGE = 2,
  EMBR_STATUS_DIMENSION = 3,
  EMBR_STATUS_DEGENERATE = 4,
  EMBR_STATUS_OVERFLOW = 5,
  EMBR_STATUS_INTERNAL = 6,
  EMBR_STATUS_NULL_POINTER = 7,
} EmbrStatus;

/**
 * Result of a sampled expected-loss estimate.
 */
typedef struct EmbrEstimate EmbrEstimate;

/**
 * A weighted finite-state transducer.
 */
typedef struct EmbrFst EmbrFst;

/**
 * A frames-by-clusters logit matrix.
 */
typedef struct EmbrLogits EmbrLogits;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null if no
 * call has failed. The pointer stays valid until the next failing call on
 * the same thread.
 */
const char *embr_last_error(void);

/**
 * Parses an FST from its text form.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum EmbrStatus embr_fst_parse(const char *text, struct EmbrFst **out);

/**
 * # Safety
 * `fst` must be null or a pointer returned by this library and not yet freed.
 */
void embr_fst_free(struct EmbrFst *fst);

/**
 * Number of states, or 0 for a null handle.
 *
 * # Safety
 * `fst` must be null or a live handle.
 */
size_t embr_fst_num_states(const struct EmbrFst *fst);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `fst` must be null or a live handle.
 */
size_t embr_fst_num_edges(const struct EmbrFst *fst);

/**
 * Copies a row-major `frames * clusters` array into a logit matrix.
 *
 * # Safety
 * `values` must point to `frames * clusters` doubles and `out` must be writable.
 */
enum EmbrStatus embr_logits_new(const double *values,
                                size_t frames,
                                size_t clusters,
                                struct EmbrLogits **out);

/**
 * # Safety
 * `logits` must be null or a pointer returned by this library and not yet freed.
 */
void embr_logits_free(struct EmbrLogits *logits);

/**
 * Builds the lattice of `logits` composed with `decoder_graph`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum EmbrStatus embr_lattice_new(const struct EmbrLogits *logits,
                                 const struct EmbrFst *decoder_graph,
                                 struct EmbrFst **out);

/**
 * Sampled expected loss and logit gradient of `lattice`.
 *
 * `loss_kind` is one of the `EMBR_LOSS_*` constants and `reference` holds
 * word labels or per-frame cluster labels accordingly.
 *
 * # Safety
 * Handles must be live, `reference` must hold `reference_len` labels and
 * `out` must be writable.
 */
enum EmbrStatus embr_estimate(const struct EmbrFst *lattice,
                              const struct EmbrLogits *logits,
                              uint32_t loss_kind,
                              const uint32_t *reference,
                              size_t reference_len,
                              size_t samples,
                              uint64_t seed,
                              bool variance_reduction,
                              struct EmbrEstimate **out);

/**
 * # Safety
 * `estimate` must be null or a live handle.
 */
double embr_estimate_expected_loss(const struct EmbrEstimate *estimate);

/**
 * # Safety
 * `estimate` must be null or a live handle.
 */
size_t embr_estimate_num_samples(const struct EmbrEstimate *estimate);

/**
 * # Safety
 * `estimate` must be null or a live handle.
 */
double embr_estimate_loss_variance(const struct EmbrEstimate *estimate);

/**
 * Copies the row-major gradient into `out`, which must hold exactly
 * frames * clusters doubles.
 *
 * # Safety
 * `estimate` must be live and `out` must point to `len` writable doubles.
 */
enum EmbrStatus embr_estimate_gradient(const struct EmbrEstimate *estimate,
                                       double *out,
                                       size_t len);

/**
 * # Safety
 * `estimate` must be null or a pointer returned by this library and not yet freed.
 */
void embr_estimate_free(struct EmbrEstimate *estimate);

/**
 * Exact expected loss by path enumeration.
 *
 * # Safety
 * `lattice` must be live, `reference` must hold `reference_len` labels and
 * `out` must be writable.
 */
enum EmbrStatus embr_expected_loss_exact(const struct EmbrFst *lattice,
                                         uint32_t loss_kind,
                                         const uint32_t *reference,
                                         size_t reference_len,
                                         double *out);

/**
 * Levenshtein distance between two label sequences.
 *
 * # Safety
 * Each pointer must hold its stated number of labels (or be null with length 0).
 */
size_t embr_edit_distance(const uint32_t *hyp,
                          size_t hyp_len,
                          const uint32_t *reference,
                          size_t reference_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMBR_H */
