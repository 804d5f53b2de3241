//! k-hop retrieval over knowledge graphs expressed as sparse boolean algebra.
//!
//! A graph of `(subject, relation, object)` triples is held as a subject
//! incidence matrix (entities × triples, compressed rows) plus per-triple
//! object and relation arrays. One hop is `q · SUB · OBJ`; k hops repeat it.
//! Graphs that do not fit in memory are split into subject-cohesive shards
//! that are routed to per hop and loaded through an LRU cache.

pub mod archive;
pub mod bench;
pub mod cache;
pub mod engine;
pub mod incidence;
pub mod kg;
pub mod oracle;
pub mod partition;
pub mod paths;
pub mod synth;
pub mod vector;

pub use cache::{CacheCounters, CostModel, SubgraphCache};
pub use engine::{
    plan_batch, EngineError, MemoryStore, PartitionedGraph, Query, QueryBatch, SubgraphStore,
};
pub use incidence::{k_hop, one_hop, HopSemantics, HopStep, HopTrace, IncidenceGraph, QueryError};
pub use kg::{
    ingest_triples, lookup_entities, Dictionary, EntityId, RelationId, Triple, TripleId,
    TripleStore,
};
pub use partition::{
    materialize_subgraphs, partition_degree_aware, route, PartitionPlan, Partitioner, Subgraph,
};
pub use paths::{reconstruct_paths, Path, PathSet};
pub use vector::{jaccard, EntityVector, TripleVector};
