//! Subject-cohesive partitioning, shard materialization and frontier routing.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use thiserror::Error;

use crate::incidence::{GraphError, IncidenceGraph};
use crate::kg::{EntityId, Triple, TripleId};
use crate::vector::EntityVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("partition count must be at least 1")]
    ZeroPartitions,
    #[error("cannot split {subjects} distinct subjects into {m} partitions")]
    TooManyPartitions { m: usize, subjects: usize },
    #[error("unknown partitioning strategy '{0}'")]
    UnknownStrategy(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Subject → partition map plus per-partition triple loads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    pub m: usize,
    /// Indexed by entity id; `None` for entities that are never a subject.
    pub assignment: Vec<Option<u32>>,
    /// Triples per partition.
    pub loads: Vec<usize>,
}

impl PartitionPlan {
    pub fn num_entities(&self) -> usize {
        self.assignment.len()
    }

    pub fn partition_of(&self, e: EntityId) -> Option<usize> {
        self.assignment
            .get(e.index())
            .copied()
            .flatten()
            .map(|p| p as usize)
    }

    pub fn num_triples(&self) -> usize {
        self.loads.iter().sum()
    }

    /// `max(load) - min(load)`.
    pub fn spread(&self) -> usize {
        let max = self.loads.iter().max().copied().unwrap_or(0);
        let min = self.loads.iter().min().copied().unwrap_or(0);
        max - min
    }
}

/// Out-degree (triples as subject) of every entity.
pub fn out_degrees(triples: &[Triple], num_entities: usize) -> Vec<usize> {
    let mut deg = vec![0usize; num_entities];
    for t in triples {
        deg[t.subject.index()] += 1;
    }
    deg
}

/// A rule assigning each subject entity to one of `m` partitions.
pub trait Partitioner {
    fn name(&self) -> &'static str;

    /// `degrees[e]` is the out-degree of entity `e`; zero-degree entities get no partition.
    fn assign(&self, degrees: &[usize], m: usize) -> Vec<Option<u32>>;

    fn plan(&self, degrees: &[usize], m: usize) -> Result<PartitionPlan, PartitionError> {
        if m == 0 {
            return Err(PartitionError::ZeroPartitions);
        }
        let subjects = degrees.iter().filter(|&&d| d > 0).count();
        if m > subjects {
            return Err(PartitionError::TooManyPartitions { m, subjects });
        }
        let assignment = self.assign(degrees, m);
        let mut loads = vec![0usize; m];
        for (e, p) in assignment.iter().enumerate() {
            if let Some(p) = p {
                loads[*p as usize] += degrees[e];
            }
        }
        Ok(PartitionPlan {
            m,
            assignment,
            loads,
        })
    }
}

/// Greedy longest-processing-time assignment: subjects by descending
/// out-degree (ties by ascending id), each to the least-loaded partition
/// (ties to the lowest index).
#[derive(Debug, Clone, Copy, Default)]
pub struct DegreeAware;

impl Partitioner for DegreeAware {
    fn name(&self) -> &'static str {
        "lpt"
    }

    fn assign(&self, degrees: &[usize], m: usize) -> Vec<Option<u32>> {
        let mut order: Vec<usize> = (0..degrees.len()).filter(|&e| degrees[e] > 0).collect();
        order.sort_unstable_by_key(|&e| (Reverse(degrees[e]), e));

        let mut heap: BinaryHeap<Reverse<(usize, u32)>> =
            (0..m as u32).map(|p| Reverse((0, p))).collect();
        let mut assignment = vec![None; degrees.len()];
        for e in order {
            let Reverse((load, p)) = heap.pop().expect("m >= 1");
            assignment[e] = Some(p);
            heap.push(Reverse((load + degrees[e], p)));
        }
        assignment
    }
}

/// Assigns subjects by a fixed integer hash of the entity id.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashPartition;

fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl Partitioner for HashPartition {
    fn name(&self) -> &'static str {
        "hash"
    }

    fn assign(&self, degrees: &[usize], m: usize) -> Vec<Option<u32>> {
        degrees
            .iter()
            .enumerate()
            .map(|(e, &d)| (d > 0).then(|| (mix64(e as u64) % m as u64) as u32))
            .collect()
    }
}

pub fn strategy(name: &str) -> Result<Box<dyn Partitioner + Send + Sync>, PartitionError> {
    match name {
        "lpt" | "degree" => Ok(Box::new(DegreeAware)),
        "hash" => Ok(Box::new(HashPartition)),
        other => Err(PartitionError::UnknownStrategy(other.to_owned())),
    }
}

/// Degree-aware plan for `triples` over `num_entities` entities.
pub fn partition_degree_aware(
    triples: &[Triple],
    num_entities: usize,
    m: usize,
) -> Result<PartitionPlan, PartitionError> {
    DegreeAware.plan(&out_degrees(triples, num_entities), m)
}

/// One shard: a local incidence graph plus maps back to global ids.
///
/// Local entity ids enumerate, in global id order, every entity that occurs in
/// the shard's triples. Local triple ids follow global triple id order. Both
/// maps are therefore strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub index: usize,
    pub graph: IncidenceGraph,
    pub entity_map: Vec<EntityId>,
    pub triple_map: Vec<TripleId>,
}

impl Subgraph {
    pub fn to_local(&self, e: EntityId) -> Option<EntityId> {
        self.entity_map
            .binary_search(&e)
            .ok()
            .map(EntityId::from_index)
    }

    #[inline]
    pub fn to_global(&self, local: EntityId) -> EntityId {
        self.entity_map[local.index()]
    }

    #[inline]
    pub fn triple_to_global(&self, local: TripleId) -> TripleId {
        self.triple_map[local.index()]
    }

    pub fn num_triples(&self) -> usize {
        self.triple_map.len()
    }

    /// Builds a shard from global triples, given as `(global id, triple)` in ascending id order.
    pub fn from_global(
        index: usize,
        triples: &[(TripleId, Triple)],
        num_relations: usize,
    ) -> Result<Self, GraphError> {
        let mut entity_map: Vec<EntityId> = triples
            .iter()
            .flat_map(|(_, t)| [t.subject, t.object])
            .collect();
        entity_map.sort_unstable();
        entity_map.dedup();
        let local = |e: EntityId| {
            EntityId::from_index(entity_map.binary_search(&e).expect("entity in shard"))
        };
        let local_triples: Vec<Triple> = triples
            .iter()
            .map(|(_, t)| Triple {
                subject: local(t.subject),
                relation: t.relation,
                object: local(t.object),
            })
            .collect();
        let graph = IncidenceGraph::build(&local_triples, entity_map.len(), num_relations)?;
        Ok(Self {
            index,
            graph,
            triple_map: triples.iter().map(|(id, _)| *id).collect(),
            entity_map,
        })
    }
}

/// Splits `triples` into one shard per partition of `plan`.
pub fn materialize_subgraphs(
    plan: &PartitionPlan,
    triples: &[Triple],
    num_relations: usize,
) -> Result<Vec<Subgraph>, PartitionError> {
    let mut buckets: Vec<Vec<(TripleId, Triple)>> =
        plan.loads.iter().map(|&n| Vec::with_capacity(n)).collect();
    for (i, t) in triples.iter().enumerate() {
        let p = plan.partition_of(t.subject).ok_or_else(|| {
            GraphError::Invariant(format!(
                "subject {} of triple {i} has no partition",
                t.subject
            ))
        })?;
        buckets[p].push((TripleId::from_index(i), *t));
    }
    buckets
        .iter()
        .enumerate()
        .map(|(p, b)| Subgraph::from_global(p, b, num_relations).map_err(PartitionError::from))
        .collect()
}

/// Active entities split by owning partition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Routing {
    pub buckets: BTreeMap<usize, EntityVector>,
    /// Entities with no outgoing edges, hence no partition.
    pub sink: EntityVector,
}

impl Routing {
    pub fn partitions(&self) -> impl Iterator<Item = usize> + '_ {
        self.buckets.keys().copied()
    }
}

pub fn route(q: &EntityVector, plan: &PartitionPlan) -> Routing {
    let mut buckets: BTreeMap<usize, Vec<EntityId>> = BTreeMap::new();
    let mut sink = Vec::new();
    for e in q.iter() {
        match plan.partition_of(e) {
            Some(p) => buckets.entry(p).or_default().push(e),
            None => sink.push(e),
        }
    }
    Routing {
        buckets: buckets
            .into_iter()
            .map(|(p, v)| (p, EntityVector::from_sorted_unchecked(v)))
            .collect(),
        sink: EntityVector::from_sorted_unchecked(sink),
    }
}
