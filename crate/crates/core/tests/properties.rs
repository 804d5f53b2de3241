use std::sync::Arc;

use proptest::prelude::*;

use kghop::archive::{decode_graph, decode_plan, encode_graph, encode_plan};
use kghop::oracle::{expected_frontiers, simulate_lru};
use kghop::partition::{out_degrees, strategy};
use kghop::{
    jaccard, k_hop, materialize_subgraphs, plan_batch, route, EntityId, EntityVector, HopSemantics,
    IncidenceGraph, MemoryStore, PartitionedGraph, Query, SubgraphCache, Triple,
};

fn graph_strategy() -> impl Strategy<Value = (usize, usize, Vec<Triple>)> {
    (1usize..40, 1usize..4).prop_flat_map(|(ne, nr)| {
        let triple =
            (0..ne as u32, 0..nr as u32, 0..ne as u32).prop_map(|(s, r, o)| Triple::new(s, r, o));
        (
            Just(ne),
            Just(nr),
            proptest::collection::btree_set(triple, 0..120)
                .prop_map(|s| s.into_iter().collect::<Vec<_>>())
                .prop_shuffle(),
        )
    })
}

fn seeds_for(ne: usize, raw: &[u32]) -> EntityVector {
    EntityVector::from_ids(raw.iter().map(|&i| EntityId(i % ne as u32)))
}

fn semantics() -> impl Strategy<Value = HopSemantics> {
    prop::sample::select(HopSemantics::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engine_matches_oracle(
        (ne, nr, triples) in graph_strategy(),
        raw in proptest::collection::vec(any::<u32>(), 0..6),
        k in 1usize..5,
        sem in semantics(),
    ) {
        let g = IncidenceGraph::build(&triples, ne, nr).unwrap();
        let seeds = seeds_for(ne, &raw);
        let trace = k_hop(&seeds, k, &g, sem).unwrap();
        let expected = expected_frontiers(&seeds, k, &triples, ne, sem).unwrap();
        for h in 1..=k {
            prop_assert_eq!(trace.frontier(h), &expected[h - 1]);
            prop_assert_eq!(jaccard(trace.frontier(h), &expected[h - 1]), 1.0);
        }
    }

    #[test]
    fn partitioned_matches_single(
        (ne, nr, triples) in graph_strategy(),
        raw in proptest::collection::vec(any::<u32>(), 1..6),
        k in 1usize..5,
        m_raw in 1usize..9,
        cache in 1usize..4,
        sem in semantics(),
    ) {
        let subjects = out_degrees(&triples, ne).iter().filter(|&&d| d > 0).count();
        prop_assume!(subjects > 0);
        let m = m_raw.min(subjects);
        let plan = strategy("lpt").unwrap().plan(&out_degrees(&triples, ne), m).unwrap();
        let shards = materialize_subgraphs(&plan, &triples, nr).unwrap();
        let mut pg = PartitionedGraph::new(plan, Box::new(MemoryStore::new(shards)), cache).unwrap();
        let g = IncidenceGraph::build(&triples, ne, nr).unwrap();
        let seeds = seeds_for(ne, &raw);
        let single = k_hop(&seeds, k, &g, sem).unwrap();
        let part = pg.cross_graph_k_hop(&seeds, k, sem).unwrap();
        prop_assert_eq!(single.hops, part.hops);
        let c = pg.counters();
        prop_assert_eq!(c.loads, c.misses);
        prop_assert!(c.evictions <= c.loads);
    }

    #[test]
    fn routing_covers_every_seed(
        (ne, _nr, triples) in graph_strategy(),
        raw in proptest::collection::vec(any::<u32>(), 0..10),
        m_raw in 1usize..6,
    ) {
        let degrees = out_degrees(&triples, ne);
        let subjects = degrees.iter().filter(|&&d| d > 0).count();
        prop_assume!(subjects > 0);
        let plan = strategy("hash").unwrap().plan(&degrees, m_raw.min(subjects)).unwrap();
        let seeds = seeds_for(ne, &raw);
        let routing = route(&seeds, &plan);
        let mut all: Vec<EntityId> = routing.sink.iter().collect();
        for (p, bucket) in &routing.buckets {
            prop_assert!(!bucket.is_empty());
            for e in bucket.iter() {
                prop_assert_eq!(plan.partition_of(e), Some(*p));
            }
            all.extend(bucket.iter());
        }
        for e in routing.sink.iter() {
            prop_assert_eq!(plan.partition_of(e), None);
        }
        prop_assert_eq!(EntityVector::from_ids(all), seeds);
    }

    #[test]
    fn cache_agrees_with_offline_lru(
        capacity in 1usize..6,
        trace in proptest::collection::vec(0usize..10, 0..200),
    ) {
        let mut cache: SubgraphCache<usize> = SubgraphCache::new(capacity).unwrap();
        for &p in &trace {
            let v = cache.get(p, |i| Ok::<_, ()>(Arc::new(i))).unwrap();
            prop_assert_eq!(*v, p);
            prop_assert!(cache.len() <= capacity);
        }
        let c = cache.counters();
        prop_assert_eq!(c, simulate_lru(capacity, &trace));
        prop_assert_eq!(c.hits + c.misses, trace.len() as u64);
        prop_assert_eq!(c.loads - c.evictions, cache.len() as u64);
    }

    #[test]
    fn failed_loads_change_nothing(
        capacity in 1usize..4,
        trace in proptest::collection::vec((0usize..6, any::<bool>()), 0..100),
    ) {
        let mut cache: SubgraphCache<usize> = SubgraphCache::new(capacity).unwrap();
        let mut ok_trace = Vec::new();
        for &(p, fail) in &trace {
            let before = (cache.counters(), cache.resident());
            let resident = cache.contains(p);
            let r = cache.get(p, |i| if fail { Err("boom") } else { Ok(Arc::new(i)) });
            if fail && !resident {
                prop_assert!(r.is_err());
                prop_assert_eq!((cache.counters(), cache.resident()), before);
            } else {
                ok_trace.push(p);
            }
        }
        prop_assert_eq!(cache.counters(), simulate_lru(capacity, &ok_trace));
    }

    #[test]
    fn planned_batches_keep_results(
        (ne, nr, triples) in graph_strategy(),
        raws in proptest::collection::vec(proptest::collection::vec(any::<u32>(), 1..4), 1..12),
        m_raw in 1usize..5,
    ) {
        let degrees = out_degrees(&triples, ne);
        let subjects = degrees.iter().filter(|&&d| d > 0).count();
        prop_assume!(subjects > 0);
        let plan = strategy("lpt").unwrap().plan(&degrees, m_raw.min(subjects)).unwrap();
        let shards = materialize_subgraphs(&plan, &triples, nr).unwrap();
        let mut pg = PartitionedGraph::new(plan.clone(), Box::new(MemoryStore::new(shards)), 1).unwrap();
        let g = IncidenceGraph::build(&triples, ne, nr).unwrap();
        let queries: Vec<Query> = raws
            .iter()
            .enumerate()
            .map(|(i, raw)| Query { id: i as u64, seeds: seeds_for(ne, raw), hops: 2 })
            .collect();
        let batch = plan_batch(queries.clone(), &plan);
        let mut sorted = batch.order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..queries.len()).collect::<Vec<_>>());
        for (pos, &i) in batch.order.iter().enumerate() {
            prop_assert_eq!(batch.restore[i], pos);
        }
        for (q, (id, r)) in queries.iter().zip(pg.run_batch(&batch, HopSemantics::Frontier)) {
            prop_assert_eq!(q.id, id);
            prop_assert_eq!(r.unwrap().hops, k_hop(&q.seeds, 2, &g, HopSemantics::Frontier).unwrap().hops);
        }
    }

    #[test]
    fn archives_round_trip((ne, nr, triples) in graph_strategy(), m_raw in 1usize..5) {
        let g = IncidenceGraph::build(&triples, ne, nr).unwrap();
        let bytes = encode_graph(&g);
        let back = decode_graph(&bytes).unwrap();
        prop_assert_eq!(encode_graph(&back), bytes);
        prop_assert_eq!(back, g);
        let degrees = out_degrees(&triples, ne);
        let subjects = degrees.iter().filter(|&&d| d > 0).count();
        if subjects > 0 {
            let plan = strategy("lpt").unwrap().plan(&degrees, m_raw.min(subjects)).unwrap();
            prop_assert_eq!(decode_plan(&encode_plan(&plan)).unwrap(), plan);
        }
    }
}
