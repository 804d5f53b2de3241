//! Cross-partition k-hop retrieval with on-demand shard loading.
//!
//! Each hop routes the active entities to their owning shards, multiplies
//! every touched shard locally, maps the results back to global ids and
//! merges them into the next global frontier.

use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cache::{CacheCounters, CacheError, SubgraphCache};
use crate::incidence::{drive_hops, HopSemantics, HopTrace, OneHop, QueryError};
use crate::kg::{EntityId, Triple, TripleId};
use crate::partition::{route, PartitionPlan, Subgraph};
use crate::paths::{assemble_paths, PathSet};
use crate::vector::{collect_sorted, EntityVector, TripleVector};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("partition {partition} is not present in the store ({available} partitions)")]
    MissingPartition { partition: usize, available: usize },
    #[error("partition {partition}: {message}")]
    Integrity { partition: usize, message: String },
    #[error("loading partition {partition}: {message}")]
    Load { partition: usize, message: String },
    #[error("plan has {plan} partitions but store has {store}")]
    PlanMismatch { plan: usize, store: usize },
    #[error("query exceeded its time limit")]
    Timeout,
}

/// Source of shards for the cache to load from.
pub trait SubgraphStore: Send + Sync {
    fn num_partitions(&self) -> usize;
    fn load(&self, partition: usize) -> Result<Arc<Subgraph>, EngineError>;
}

/// Shards held in memory; every load is a pointer copy.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    shards: Vec<Arc<Subgraph>>,
}

impl MemoryStore {
    pub fn new(shards: Vec<Subgraph>) -> Self {
        Self {
            shards: shards.into_iter().map(Arc::new).collect(),
        }
    }
}

impl SubgraphStore for MemoryStore {
    fn num_partitions(&self) -> usize {
        self.shards.len()
    }

    fn load(&self, partition: usize) -> Result<Arc<Subgraph>, EngineError> {
        self.shards
            .get(partition)
            .cloned()
            .ok_or(EngineError::MissingPartition {
                partition,
                available: self.shards.len(),
            })
    }
}

/// A partition plan, a shard store and the LRU cache in front of it.
pub struct PartitionedGraph {
    plan: PartitionPlan,
    store: Box<dyn SubgraphStore>,
    cache: SubgraphCache,
}

impl PartitionedGraph {
    pub fn new(
        plan: PartitionPlan,
        store: Box<dyn SubgraphStore>,
        cache_capacity: usize,
    ) -> Result<Self, EngineError> {
        if plan.m != store.num_partitions() {
            return Err(EngineError::PlanMismatch {
                plan: plan.m,
                store: store.num_partitions(),
            });
        }
        Ok(Self {
            plan,
            store,
            cache: SubgraphCache::new(cache_capacity)?,
        })
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    pub fn num_entities(&self) -> usize {
        self.plan.num_entities()
    }

    pub fn num_triples(&self) -> usize {
        self.plan.num_triples()
    }

    pub fn cache(&self) -> &SubgraphCache {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut SubgraphCache {
        &mut self.cache
    }

    pub fn counters(&self) -> CacheCounters {
        self.cache.counters()
    }

    /// Replaces the cache with an empty one of the given capacity.
    pub fn reset_cache(&mut self, capacity: usize) -> Result<(), EngineError> {
        self.cache = SubgraphCache::new(capacity)?;
        Ok(())
    }

    fn check_seeds(&self, seeds: &EntityVector, k: usize) -> Result<(), EngineError> {
        if k == 0 {
            return Err(QueryError::ZeroHops.into());
        }
        if let Some(&id) = seeds.ids().last() {
            if id.index() >= self.num_entities() {
                return Err(QueryError::EntityOutOfRange {
                    id: id.0,
                    num_entities: self.num_entities(),
                }
                .into());
            }
        }
        Ok(())
    }

    fn fetch(&mut self, partition: usize) -> Result<Arc<Subgraph>, EngineError> {
        let available = self.store.num_partitions();
        if partition >= available {
            return Err(EngineError::MissingPartition {
                partition,
                available,
            });
        }
        let store = &self.store;
        self.cache.get(partition, |p| store.load(p))
    }

    fn localize(shard: &Subgraph, q: &EntityVector) -> Result<EntityVector, EngineError> {
        // entity_map is increasing, so the local ids stay sorted
        let local = q
            .iter()
            .map(|e| {
                shard.to_local(e).ok_or_else(|| EngineError::Integrity {
                    partition: shard.index,
                    message: format!("routed entity {e} missing from shard"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EntityVector::from_sorted_unchecked(local))
    }

    /// One global hop: `q · SUB · OBJ` evaluated shard by shard.
    pub fn expand(&mut self, q: &EntityVector) -> Result<OneHop, EngineError> {
        let routing = route(q, &self.plan);
        let mut triples: Vec<u32> = Vec::new();
        let mut next: Vec<u32> = Vec::new();
        for (partition, bucket) in routing.buckets {
            let shard = self.fetch(partition)?;
            let local = Self::localize(&shard, &bucket)?;
            let hop = crate::incidence::one_hop(&local, &shard.graph);
            triples.extend(hop.activated.iter().map(|t| shard.triple_to_global(t).0));
            next.extend(hop.next.iter().map(|e| shard.to_global(e).0));
        }
        Ok(OneHop {
            activated: TripleVector::from_sorted_unchecked(
                collect_sorted(triples, self.num_triples())
                    .into_iter()
                    .map(TripleId)
                    .collect(),
            ),
            next: EntityVector::from_sorted_unchecked(
                collect_sorted(next, self.num_entities())
                    .into_iter()
                    .map(EntityId)
                    .collect(),
            ),
        })
    }

    /// Edges activated by `q` across all shards, in global ids, by triple id.
    pub fn activated_edges(
        &mut self,
        q: &EntityVector,
    ) -> Result<Vec<(TripleId, Triple)>, EngineError> {
        let routing = route(q, &self.plan);
        let mut edges = Vec::new();
        for (partition, bucket) in routing.buckets {
            let shard = self.fetch(partition)?;
            let local = Self::localize(&shard, &bucket)?;
            edges.extend(
                shard
                    .graph
                    .activated_edges(&local)
                    .into_iter()
                    .map(|(t, e)| {
                        (
                            shard.triple_to_global(t),
                            Triple {
                                subject: shard.to_global(e.subject),
                                relation: e.relation,
                                object: shard.to_global(e.object),
                            },
                        )
                    }),
            );
        }
        edges.sort_unstable_by_key(|e| e.0);
        Ok(edges)
    }

    /// k-hop retrieval over the shards; equal to single-graph retrieval on the union.
    pub fn cross_graph_k_hop(
        &mut self,
        seeds: &EntityVector,
        k: usize,
        semantics: HopSemantics,
    ) -> Result<HopTrace, EngineError> {
        self.check_seeds(seeds, k)?;
        let n = self.num_entities();
        drive_hops(seeds, k, n, semantics, |q| self.expand(q))
    }

    /// Like [`Self::cross_graph_k_hop`], but fails with [`EngineError::Timeout`]
    /// once `limit` has passed since `start`. Checked between hops.
    pub fn cross_graph_k_hop_until(
        &mut self,
        seeds: &EntityVector,
        k: usize,
        semantics: HopSemantics,
        start: Instant,
        limit: Duration,
    ) -> Result<HopTrace, EngineError> {
        self.check_seeds(seeds, k)?;
        let n = self.num_entities();
        let trace = drive_hops(seeds, k, n, semantics, |q| {
            if start.elapsed() >= limit {
                return Err(EngineError::Timeout);
            }
            self.expand(q)
        })?;
        if start.elapsed() >= limit {
            return Err(EngineError::Timeout);
        }
        Ok(trace)
    }

    /// Length-k paths assembled from the activated edges collected per hop.
    pub fn cross_graph_paths(
        &mut self,
        seeds: &EntityVector,
        k: usize,
        max_paths: usize,
    ) -> Result<PathSet, EngineError> {
        self.check_seeds(seeds, k)?;
        let mut layers = Vec::with_capacity(k);
        let mut frontier = seeds.clone();
        for _ in 0..k {
            let edges = self.activated_edges(&frontier)?;
            frontier = EntityVector::from_ids(edges.iter().map(|(_, t)| t.object));
            layers.push(edges);
        }
        Ok(assemble_paths(&layers, max_paths))
    }

    /// Executes `batch` in its planned order; results come back in input order.
    pub fn run_batch(
        &mut self,
        batch: &QueryBatch,
        semantics: HopSemantics,
    ) -> Vec<(u64, Result<HopTrace, EngineError>)> {
        let mut results: Vec<Option<Result<HopTrace, EngineError>>> =
            (0..batch.queries.len()).map(|_| None).collect();
        for &i in &batch.order {
            let q = &batch.queries[i];
            results[i] = Some(self.cross_graph_k_hop(&q.seeds, q.hops, semantics));
        }
        batch
            .queries
            .iter()
            .zip(results)
            .map(|(q, r)| (q.id, r.expect("every query executed once")))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: u64,
    pub seeds: EntityVector,
    pub hops: usize,
}

/// Queries plus the order to execute them in.
///
/// `order[pos]` is the input index run at position `pos`; `restore[input]`
/// is the position where that input ran.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBatch {
    pub queries: Vec<Query>,
    pub order: Vec<usize>,
    pub restore: Vec<usize>,
}

impl QueryBatch {
    /// Executes in input order.
    pub fn in_order(queries: Vec<Query>) -> Self {
        let order: Vec<usize> = (0..queries.len()).collect();
        Self::with_order(queries, order)
    }

    /// `order` must be a permutation of `0..queries.len()`.
    pub fn with_order(queries: Vec<Query>, order: Vec<usize>) -> Self {
        assert_eq!(order.len(), queries.len(), "order must permute the queries");
        let mut restore = vec![usize::MAX; order.len()];
        for (pos, &i) in order.iter().enumerate() {
            assert!(restore[i] == usize::MAX, "order repeats query {i}");
            restore[i] = pos;
        }
        Self {
            queries,
            order,
            restore,
        }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Partitions a query's seeds touch at hop 0.
pub fn signature(seeds: &EntityVector, plan: &PartitionPlan) -> Vec<usize> {
    route(seeds, plan).partitions().collect()
}

/// Groups queries with equal hop-0 signatures, groups ordered by signature,
/// input order kept within a group.
pub fn plan_batch(queries: Vec<Query>, plan: &PartitionPlan) -> QueryBatch {
    let signatures: Vec<Vec<usize>> = queries.iter().map(|q| signature(&q.seeds, plan)).collect();
    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_by(|&a, &b| signatures[a].cmp(&signatures[b]));
    QueryBatch::with_order(queries, order)
}
