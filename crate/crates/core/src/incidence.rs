//! Subject/object/relation incidence structures and single-graph k-hop retrieval.
//!
//! The subject matrix (entities × triples) is held as compressed rows: row `e`
//! lists the triples whose subject is `e`. The object and relation matrices
//! have exactly one nonzero per triple row, so they are flat per-triple
//! arrays and multiplying by them is a gather.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kg::{EntityId, RelationId, Triple, TripleId};
use crate::vector::{collect_sorted, Bitmask, EntityVector, TripleVector};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("triple {triple}: {what} id {id} out of range (count {count})")]
    IdOutOfRange {
        triple: usize,
        what: &'static str,
        id: u32,
        count: usize,
    },
    #[error("{0} exceeds the 32-bit id space")]
    TooLarge(&'static str),
    #[error("incidence invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("entity id {id} out of range for a graph with {num_entities} entities")]
    EntityOutOfRange { id: u32, num_entities: usize },
}

/// Immutable incidence representation of a knowledge graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceGraph {
    num_entities: usize,
    num_relations: usize,
    sub_offsets: Vec<usize>,
    sub_cols: Vec<TripleId>,
    obj: Vec<EntityId>,
    rel: Vec<RelationId>,
}

impl IncidenceGraph {
    /// Builds the incidence structures with a counting pass over the triples.
    ///
    /// Triple `i` of the input becomes `TripleId(i)`. Input should already be
    /// deduplicated.
    pub fn build(
        triples: &[Triple],
        num_entities: usize,
        num_relations: usize,
    ) -> Result<Self, GraphError> {
        if num_entities > u32::MAX as usize {
            return Err(GraphError::TooLarge("entity count"));
        }
        if triples.len() > u32::MAX as usize {
            return Err(GraphError::TooLarge("triple count"));
        }
        let mut counts = vec![0usize; num_entities + 1];
        for (i, t) in triples.iter().enumerate() {
            for (what, id, count) in [
                ("subject", t.subject.0, num_entities),
                ("relation", t.relation.0, num_relations),
                ("object", t.object.0, num_entities),
            ] {
                if id as usize >= count {
                    return Err(GraphError::IdOutOfRange {
                        triple: i,
                        what,
                        id,
                        count,
                    });
                }
            }
            counts[t.subject.index() + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let sub_offsets = counts;
        let mut cursor = sub_offsets.clone();
        let mut sub_cols = vec![TripleId(0); triples.len()];
        let mut obj = Vec::with_capacity(triples.len());
        let mut rel = Vec::with_capacity(triples.len());
        for (i, t) in triples.iter().enumerate() {
            let slot = &mut cursor[t.subject.index()];
            sub_cols[*slot] = TripleId::from_index(i);
            *slot += 1;
            obj.push(t.object);
            rel.push(t.relation);
        }
        Ok(Self {
            num_entities,
            num_relations,
            sub_offsets,
            sub_cols,
            obj,
            rel,
        })
    }

    /// Assembles a graph from raw arrays, checking every structural invariant.
    pub fn from_parts(
        num_entities: usize,
        num_relations: usize,
        sub_offsets: Vec<usize>,
        sub_cols: Vec<TripleId>,
        obj: Vec<EntityId>,
        rel: Vec<RelationId>,
    ) -> Result<Self, GraphError> {
        let num_triples = obj.len();
        let bad = |msg: String| Err(GraphError::Invariant(msg));
        if rel.len() != num_triples || sub_cols.len() != num_triples {
            return bad(format!(
                "array lengths differ: obj {}, rel {}, sub {}",
                num_triples,
                rel.len(),
                sub_cols.len()
            ));
        }
        if sub_offsets.len() != num_entities + 1 || sub_offsets[0] != 0 {
            return bad("offset array must have |E|+1 entries starting at 0".into());
        }
        if sub_offsets.windows(2).any(|w| w[0] > w[1]) {
            return bad("offsets decrease".into());
        }
        if sub_offsets[num_entities] != num_triples {
            return bad(format!(
                "last offset {} != triple count {}",
                sub_offsets[num_entities], num_triples
            ));
        }
        let mut seen = Bitmask::new(num_triples);
        for e in 0..num_entities {
            let row = &sub_cols[sub_offsets[e]..sub_offsets[e + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {e} is not strictly increasing"));
            }
            for t in row {
                if t.index() >= num_triples || !seen.insert(t.index()) {
                    return bad(format!("triple {t} out of range or in two rows"));
                }
            }
        }
        if let Some(i) = obj.iter().position(|o| o.index() >= num_entities) {
            return bad(format!("object of triple {i} out of range"));
        }
        if let Some(i) = rel.iter().position(|r| r.index() >= num_relations) {
            return bad(format!("relation of triple {i} out of range"));
        }
        Ok(Self {
            num_entities,
            num_relations,
            sub_offsets,
            sub_cols,
            obj,
            rel,
        })
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn num_triples(&self) -> usize {
        self.obj.len()
    }

    /// Triples with subject `e`, ascending.
    #[inline]
    pub fn sub_row(&self, e: EntityId) -> &[TripleId] {
        &self.sub_cols[self.sub_offsets[e.index()]..self.sub_offsets[e.index() + 1]]
    }

    pub fn out_degree(&self, e: EntityId) -> usize {
        self.sub_offsets[e.index() + 1] - self.sub_offsets[e.index()]
    }

    #[inline]
    pub fn object(&self, t: TripleId) -> EntityId {
        self.obj[t.index()]
    }

    #[inline]
    pub fn relation(&self, t: TripleId) -> RelationId {
        self.rel[t.index()]
    }

    pub fn sub_offsets(&self) -> &[usize] {
        &self.sub_offsets
    }

    pub fn sub_cols(&self) -> &[TripleId] {
        &self.sub_cols
    }

    pub fn objects(&self) -> &[EntityId] {
        &self.obj
    }

    pub fn relations(&self) -> &[RelationId] {
        &self.rel
    }

    /// Recovers the triple table in id order.
    pub fn triples(&self) -> Vec<Triple> {
        let mut subject = vec![EntityId(0); self.num_triples()];
        for e in 0..self.num_entities {
            for t in self.sub_row(EntityId::from_index(e)) {
                subject[t.index()] = EntityId::from_index(e);
            }
        }
        subject
            .into_iter()
            .zip(self.obj.iter().zip(&self.rel))
            .map(|(s, (&o, &r))| Triple {
                subject: s,
                relation: r,
                object: o,
            })
            .collect()
    }

    pub fn check_vector(&self, q: &EntityVector) -> Result<(), QueryError> {
        match q.ids().last() {
            Some(&id) if id.index() >= self.num_entities => Err(QueryError::EntityOutOfRange {
                id: id.0,
                num_entities: self.num_entities,
            }),
            _ => Ok(()),
        }
    }

    /// Edges activated by `q`, i.e. the nonzeros of `q · SUB` together with
    /// their subject, relation and object, ordered by triple id.
    pub fn activated_edges(&self, q: &EntityVector) -> Vec<(TripleId, Triple)> {
        let mut edges: Vec<(TripleId, Triple)> = q
            .iter()
            .flat_map(|s| {
                self.sub_row(s).iter().map(move |&t| {
                    (
                        t,
                        Triple {
                            subject: s,
                            relation: self.relation(t),
                            object: self.object(t),
                        },
                    )
                })
            })
            .collect();
        edges.sort_unstable_by_key(|e| e.0);
        edges
    }
}

/// One application of `q · SUB` then `· OBJ`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OneHop {
    pub activated: TripleVector,
    pub next: EntityVector,
}

/// Expands `q` by one hop. `q` must only hold ids valid for `g`.
pub fn one_hop(q: &EntityVector, g: &IncidenceGraph) -> OneHop {
    let mut triples: Vec<u32> = Vec::new();
    for e in q.iter() {
        triples.extend(g.sub_row(e).iter().map(|t| t.0));
    }
    // rows are disjoint, so this only needs ordering
    let triples = collect_sorted(triples, g.num_triples());
    let objects: Vec<u32> = triples.iter().map(|&t| g.obj[t as usize].0).collect();
    let next = collect_sorted(objects, g.num_entities());
    OneHop {
        activated: TripleVector::from_sorted_unchecked(triples.into_iter().map(TripleId).collect()),
        next: EntityVector::from_sorted_unchecked(next.into_iter().map(EntityId).collect()),
    }
}

/// What a hop's frontier means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HopSemantics {
    /// Entities at the end of some walk of exactly `h` edges.
    ExactWalk,
    /// Entities first reached at hop `h` (shortest-path distance `h`).
    #[default]
    Frontier,
    /// Entities at distance `1..=h`.
    Cumulative,
}

impl HopSemantics {
    pub const ALL: [HopSemantics; 3] = [
        HopSemantics::ExactWalk,
        HopSemantics::Frontier,
        HopSemantics::Cumulative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HopSemantics::ExactWalk => "exact",
            HopSemantics::Frontier => "frontier",
            HopSemantics::Cumulative => "cumulative",
        }
    }
}

impl fmt::Display for HopSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HopSemantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" | "exact-walk" | "walk" => Ok(HopSemantics::ExactWalk),
            "frontier" | "bfs" => Ok(HopSemantics::Frontier),
            "cumulative" => Ok(HopSemantics::Cumulative),
            other => Err(format!(
                "unknown semantics '{other}' (expected exact, frontier or cumulative)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HopStep {
    pub frontier: EntityVector,
    /// Triples activated while producing this hop.
    pub activated: TripleVector,
}

/// Per-hop frontiers and activated triples of a k-hop retrieval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopTrace {
    pub semantics: HopSemantics,
    pub seeds: EntityVector,
    pub hops: Vec<HopStep>,
}

impl HopTrace {
    pub fn k(&self) -> usize {
        self.hops.len()
    }

    pub fn frontier(&self, hop: usize) -> &EntityVector {
        &self.hops[hop - 1].frontier
    }

    pub fn last(&self) -> &EntityVector {
        &self
            .hops
            .last()
            .expect("trace has at least one hop")
            .frontier
    }
}

/// Runs `k` hops of `expand` under the given semantics.
///
/// `expand` maps the vector to be multiplied at this hop to its activated
/// triples and object image. Shared by single-graph and partitioned retrieval
/// so both apply identical frontier bookkeeping.
pub(crate) fn drive_hops<E>(
    seeds: &EntityVector,
    k: usize,
    num_entities: usize,
    semantics: HopSemantics,
    mut expand: impl FnMut(&EntityVector) -> Result<OneHop, E>,
) -> Result<HopTrace, E> {
    let mut hops = Vec::with_capacity(k);
    let mut current = seeds.clone();
    match semantics {
        HopSemantics::ExactWalk => {
            for _ in 0..k {
                let step = expand(&current)?;
                current = step.next.clone();
                hops.push(HopStep {
                    frontier: step.next,
                    activated: step.activated,
                });
            }
        }
        HopSemantics::Frontier | HopSemantics::Cumulative => {
            let mut visited = Bitmask::new(num_entities);
            for e in seeds.iter() {
                visited.insert(e.index());
            }
            let mut reached = EntityVector::new();
            for _ in 0..k {
                let step = expand(&current)?;
                let fresh: Vec<EntityId> = step
                    .next
                    .iter()
                    .filter(|e| visited.insert(e.index()))
                    .collect();
                current = EntityVector::from_sorted_unchecked(fresh);
                let frontier = if semantics == HopSemantics::Cumulative {
                    reached = reached.union(&current);
                    reached.clone()
                } else {
                    current.clone()
                };
                hops.push(HopStep {
                    frontier,
                    activated: step.activated,
                });
            }
        }
    }
    Ok(HopTrace {
        semantics,
        seeds: seeds.clone(),
        hops,
    })
}

/// k-hop retrieval over a single in-memory graph.
pub fn k_hop(
    seeds: &EntityVector,
    k: usize,
    g: &IncidenceGraph,
    semantics: HopSemantics,
) -> Result<HopTrace, QueryError> {
    if k == 0 {
        return Err(QueryError::ZeroHops);
    }
    g.check_vector(seeds)?;
    drive_hops(seeds, k, g.num_entities(), semantics, |q| {
        Ok::<_, QueryError>(one_hop(q, g))
    })
}
