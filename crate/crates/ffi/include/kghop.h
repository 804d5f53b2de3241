#ifndef KGHOP_H
#define KGHOP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KgSemantics {
  KG_SEMANTICS_EXACT_WALK = 0,
  KG_SEMANTICS_FRONTIER = 1,
  KG_SEMANTICS_CUMULATIVE = 2,
} KgSemantics;

typedef enum KgStatus {
  KG_STATUS_OK = 0,
  KG_STATUS_NULL_POINTER = 1,
  KG_STATUS_INVALID_ARGUMENT = 2,
  KG_STATUS_NOT_FOUND = 3,
  KG_STATUS_FORMAT = 4,
  KG_STATUS_QUERY = 5,
  KG_STATUS_ENGINE = 6,
  KG_STATUS_BUFFER_TOO_SMALL = 7,
  KG_STATUS_PANIC = 8,
} KgStatus;

/**
 * A graph held whole in memory.
 */
typedef struct KgGraph KgGraph;

/**
 * A sharded graph behind an LRU subgraph cache.
 */
typedef struct KgPartitioned KgPartitioned;

/**
 * Per-hop entity sets of one query, as sorted entity ids.
 */
typedef struct KgResult KgResult;

typedef struct KgCacheCounters {
  uint64_t hits;
  uint64_t misses;
  uint64_t loads;
  uint64_t evictions;
} KgCacheCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL after a
 * success. Valid until the next kghop call on the same thread.
 */
const char *kg_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *kg_status_name(enum KgStatus status);

/**
 * Opens a graph directory written by `kghop build`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` must be writable.
 */
enum KgStatus kg_graph_open(const char *dir, struct KgGraph **out);

/**
 * # Safety
 * `g` must be NULL or a handle from `kg_graph_open` not yet freed.
 */
void kg_graph_free(struct KgGraph *g);

/**
 * # Safety
 * `g` must be a live handle; each non-NULL output must be writable.
 */
enum KgStatus kg_graph_counts(const struct KgGraph *g,
                              uint64_t *num_entities,
                              uint64_t *num_relations,
                              uint64_t *num_triples);

/**
 * Resolves an entity label to its id.
 *
 * # Safety
 * `g` must be a live handle, `label` NUL-terminated, `id` writable.
 */
enum KgStatus kg_graph_entity_id(const struct KgGraph *g, const char *label, uint32_t *id);

/**
 * Copies the label of entity `id` into `buf` with a trailing NUL.
 * `needed` receives the buffer size required, NUL included, even when the
 * call fails with `KG_STATUS_BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `g` must be a live handle; `buf` must hold `cap` bytes or be NULL with
 * `cap == 0`; `needed` must be NULL or writable.
 */
enum KgStatus kg_graph_entity_label(const struct KgGraph *g,
                                    uint32_t id,
                                    char *buf,
                                    size_t cap,
                                    size_t *needed);

/**
 * Runs a k-hop query from `seeds` on the whole graph.
 *
 * # Safety
 * `g` must be a live handle, `seeds` must point to `num_seeds` ids (or be
 * NULL when `num_seeds == 0`), and `out` must be writable.
 */
enum KgStatus kg_query(const struct KgGraph *g,
                       const uint32_t *seeds,
                       size_t num_seeds,
                       uint32_t hops,
                       enum KgSemantics semantics,
                       struct KgResult **out);

/**
 * Opens a partition directory written by `kghop partition`, with an LRU
 * cache of `cache_capacity` subgraphs.
 *
 * # Safety
 * `dir` must be NUL-terminated; `out` must be writable.
 */
enum KgStatus kg_partitioned_open(const char *dir,
                                  size_t cache_capacity,
                                  struct KgPartitioned **out);

/**
 * # Safety
 * `p` must be NULL or a handle from `kg_partitioned_open` not yet freed.
 */
void kg_partitioned_free(struct KgPartitioned *p);

/**
 * # Safety
 * `p` must be a live handle, `label` NUL-terminated, `id` writable.
 */
enum KgStatus kg_partitioned_entity_id(const struct KgPartitioned *p,
                                       const char *label,
                                       uint32_t *id);

/**
 * Runs a k-hop query across shards. The handle's cache state persists
 * between calls; a handle must not be used from two threads at once.
 *
 * # Safety
 * As for `kg_query`, with `p` a live partitioned handle.
 */
enum KgStatus kg_partitioned_query(struct KgPartitioned *p,
                                   const uint32_t *seeds,
                                   size_t num_seeds,
                                   uint32_t hops,
                                   enum KgSemantics semantics,
                                   struct KgResult **out);

/**
 * Cumulative cache counters since open or the last reset.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum KgStatus kg_partitioned_cache_counters(const struct KgPartitioned *p,
                                            struct KgCacheCounters *out);

/**
 * Replaces the cache with an empty one of `capacity` subgraphs and zeroes
 * its counters.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum KgStatus kg_partitioned_reset_cache(struct KgPartitioned *p, size_t capacity);

/**
 * Number of hops in the result.
 *
 * # Safety
 * `r` must be NULL or a live result.
 */
size_t kg_result_hops(const struct KgResult *r);

/**
 * Borrows the sorted entity ids reached at `hop` (1-based). The pointer is
 * valid until `kg_result_free`; it may be NULL when `len` is 0.
 *
 * # Safety
 * `r` must be a live result; `ids` and `len` must be writable.
 */
enum KgStatus kg_result_entities(const struct KgResult *r,
                                 size_t hop,
                                 const uint32_t **ids,
                                 size_t *len);

/**
 * # Safety
 * `r` must be NULL or a result not yet freed.
 */
void kg_result_free(struct KgResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KGHOP_H */
