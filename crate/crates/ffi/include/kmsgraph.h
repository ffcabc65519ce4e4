#ifndef KMSGRAPH_H
#define KMSGRAPH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum KmsStatus {
  KMS_STATUS_OK = 0,
  KMS_STATUS_NULL_POINTER = 1,
  KMS_STATUS_INVALID_UTF8 = 2,
  KMS_STATUS_PARSE = 3,
  KMS_STATUS_INVALID_ARGUMENT = 4,
  KMS_STATUS_NUMERICAL = 5,
  KMS_STATUS_BUFFER_TOO_SMALL = 6,
  KMS_STATUS_PANIC = 7,
} KmsStatus;

/**
 * Opaque analysed graph.
 */
typedef struct KmsGraph KmsGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a graph description (JSON text) and analyses it.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_graph` a valid pointer.
 */
enum KmsStatus kms_graph_from_json(const char *json, struct KmsGraph **out_graph);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `g` must come from [`kms_graph_from_json`] and not be used afterwards.
 */
void kms_graph_free(struct KmsGraph *g);

/**
 * # Safety
 * `g` must be a live handle and `out_count` a valid pointer.
 */
enum KmsStatus kms_graph_vertex_count(const struct KmsGraph *g, uintptr_t *out_count);

/**
 * # Safety
 * `g` must be a live handle and `out_count` a valid pointer.
 */
enum KmsStatus kms_graph_edge_count(const struct KmsGraph *g, uintptr_t *out_count);

/**
 * Smallest and largest vertex entropies (`h_X` and `h_X^s`).
 *
 * # Safety
 * `g` must be a live handle; output pointers must be valid.
 */
enum KmsStatus kms_graph_entropy(const struct KmsGraph *g, double *h_min, double *h_strong);

/**
 * Writes the transition β values, including any boundary entry at zero, in increasing order.
 *
 * `out_count` always receives the number of transitions. Pass a null buffer to query it;
 * a buffer shorter than that yields `BufferTooSmall`.
 *
 * # Safety
 * `g` must be a live handle; `buf` must hold `len` doubles unless null.
 */
enum KmsStatus kms_graph_transitions(const struct KmsGraph *g,
                                     double *buf,
                                     uintptr_t len,
                                     uintptr_t *out_count);

/**
 * Normalising constant `c_{τ,β}`. Writes infinity when the series diverges.
 *
 * # Safety
 * `g` must be a live handle; `weights` must hold `len` doubles, one per vertex.
 */
enum KmsStatus kms_graph_c_series(const struct KmsGraph *g,
                                  const double *weights,
                                  uintptr_t len,
                                  double beta,
                                  double *out_value);

/**
 * Full analysis report as JSON: entropies, phase diagram and, for each β, the simplices of
 * all three algebras. Free the result with [`kms_string_free`].
 *
 * # Safety
 * `g` must be a live handle; `betas` must hold `len` doubles; `out_json` must be valid.
 */
enum KmsStatus kms_graph_analyze_json(const struct KmsGraph *g,
                                      const double *betas,
                                      uintptr_t len,
                                      char **out_json);

/**
 * Parses `"1.5"` or `"log:3"` style β text.
 *
 * # Safety
 * `s` must be a NUL-terminated string and `out_beta` a valid pointer.
 */
enum KmsStatus kms_parse_beta(const char *s, double *out_beta);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void kms_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null.
 * The pointer stays valid until the next call into the library on the same thread.
 */
const char *kms_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KMSGRAPH_H */
