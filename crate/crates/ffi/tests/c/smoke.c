#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "kghop.h"

#define CHECK(call)                                                            \
  do {                                                                         \
    KgStatus s_ = (call);                                                      \
    if (s_ != KG_STATUS_OK) {                                                  \
      const char *m_ = kg_last_error_message();                                \
      fprintf(stderr, "%s -> %s: %s\n", #call, kg_status_name(s_),             \
              m_ ? m_ : "");                                                   \
      return 1;                                                                \
    }                                                                          \
  } while (0)

/* argv: graph-dir partition-dir seed-label hops */
int main(int argc, char **argv) {
  if (argc != 5) return 2;
  unsigned hops = (unsigned)atoi(argv[4]);

  KgGraph *g = NULL;
  CHECK(kg_graph_open(argv[1], &g));
  uint64_t ne = 0, nt = 0;
  CHECK(kg_graph_counts(g, &ne, NULL, &nt));
  uint32_t seed = 0;
  CHECK(kg_graph_entity_id(g, argv[3], &seed));

  char label[64];
  size_t needed = 0;
  CHECK(kg_graph_entity_label(g, seed, label, sizeof label, &needed));
  if (strcmp(label, argv[3]) != 0) return 3;

  KgPartitioned *p = NULL;
  CHECK(kg_partitioned_open(argv[2], 2, &p));

  KgResult *a = NULL, *b = NULL;
  CHECK(kg_query(g, &seed, 1, hops, KG_SEMANTICS_FRONTIER, &a));
  CHECK(kg_partitioned_query(p, &seed, 1, hops, KG_SEMANTICS_FRONTIER, &b));
  if (kg_result_hops(a) != hops || kg_result_hops(b) != hops) return 4;

  printf("entities=%llu triples=%llu\n", (unsigned long long)ne,
         (unsigned long long)nt);
  for (size_t h = 1; h <= hops; h++) {
    const uint32_t *xa, *xb;
    size_t la, lb;
    CHECK(kg_result_entities(a, h, &xa, &la));
    CHECK(kg_result_entities(b, h, &xb, &lb));
    if (la != lb || (la && memcmp(xa, xb, la * sizeof *xa) != 0)) return 5;
    printf("hop=%zu size=%zu\n", h, la);
  }

  KgCacheCounters c;
  CHECK(kg_partitioned_cache_counters(p, &c));
  printf("loads=%llu evictions=%llu\n", (unsigned long long)c.loads,
         (unsigned long long)c.evictions);

  KgResult *bad = NULL;
  if (kg_query(g, &seed, 1, 0, KG_SEMANTICS_FRONTIER, &bad) != KG_STATUS_QUERY)
    return 6;
  if (bad != NULL || kg_last_error_message() == NULL) return 7;

  kg_result_free(a);
  kg_result_free(b);
  kg_partitioned_free(p);
  kg_graph_free(g);
  return 0;
}
