//! Reconstruction of complete length-k paths from per-hop activated triples.

use std::collections::{HashMap, HashSet};

use crate::incidence::{IncidenceGraph, QueryError};
use crate::kg::{EntityId, Triple, TripleId};
use crate::vector::EntityVector;

pub const DEFAULT_MAX_PATHS: usize = 10_000;

/// A chain of edges where each step's object is the next step's subject.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub triple_ids: Vec<TripleId>,
    pub steps: Vec<Triple>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn source(&self) -> Option<EntityId> {
        self.steps.first().map(|t| t.subject)
    }

    pub fn target(&self) -> Option<EntityId> {
        self.steps.last().map(|t| t.object)
    }

    /// Checks each step against `triples` (indexed by triple id) and the chaining rule.
    pub fn is_valid_in(&self, triples: &[Triple]) -> bool {
        self.triple_ids.len() == self.steps.len()
            && self
                .triple_ids
                .iter()
                .zip(&self.steps)
                .all(|(t, s)| triples.get(t.index()) == Some(s))
            && self.steps.windows(2).all(|w| w[0].object == w[1].subject)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathSet {
    pub paths: Vec<Path>,
    /// More complete paths existed than were returned.
    pub truncated: bool,
}

/// Enumerates length-k walks from `seeds`, in lexicographic triple id order.
pub fn reconstruct_paths(
    seeds: &EntityVector,
    k: usize,
    g: &IncidenceGraph,
    max_paths: usize,
) -> Result<PathSet, QueryError> {
    if k == 0 {
        return Err(QueryError::ZeroHops);
    }
    g.check_vector(seeds)?;
    let mut layers = Vec::with_capacity(k);
    let mut frontier = seeds.clone();
    for _ in 0..k {
        let edges = g.activated_edges(&frontier);
        frontier = EntityVector::from_ids(edges.iter().map(|(_, t)| t.object));
        layers.push(edges);
    }
    Ok(assemble_paths(&layers, max_paths))
}

/// Chains per-hop activated edges into complete paths.
///
/// `layers[h]` holds the edges activated at hop `h + 1`, sorted by triple id,
/// with subjects drawn from the walk frontier of hop `h`. Edges that cannot be
/// extended to the last layer are pruned before enumeration.
pub(crate) fn assemble_paths(layers: &[Vec<(TripleId, Triple)>], max_paths: usize) -> PathSet {
    let k = layers.len();
    if k == 0 || layers[0].is_empty() {
        return PathSet::default();
    }

    // alive[h]: edges of layer h that reach the final layer
    let mut alive: Vec<Vec<(TripleId, Triple)>> = vec![Vec::new(); k];
    alive[k - 1] = layers[k - 1].clone();
    for h in (0..k - 1).rev() {
        let extendable: HashSet<EntityId> = alive[h + 1].iter().map(|(_, t)| t.subject).collect();
        alive[h] = layers[h]
            .iter()
            .filter(|(_, t)| extendable.contains(&t.object))
            .copied()
            .collect();
    }

    // per-layer subject index; each bucket stays in triple id order
    let by_subject: Vec<HashMap<EntityId, Vec<(TripleId, Triple)>>> = alive
        .iter()
        .map(|edges| {
            let mut m: HashMap<EntityId, Vec<(TripleId, Triple)>> = HashMap::new();
            for &e in edges {
                m.entry(e.1.subject).or_default().push(e);
            }
            m
        })
        .collect();

    let mut out = PathSet::default();
    let mut prefix = Vec::with_capacity(k);
    for &edge in &alive[0] {
        prefix.push(edge);
        if extend(&by_subject, &mut prefix, max_paths, &mut out) {
            break;
        }
        prefix.pop();
    }
    out
}

/// Returns true once enumeration should stop.
fn extend(
    by_subject: &[HashMap<EntityId, Vec<(TripleId, Triple)>>],
    prefix: &mut Vec<(TripleId, Triple)>,
    max_paths: usize,
    out: &mut PathSet,
) -> bool {
    let depth = prefix.len();
    if depth == by_subject.len() {
        if out.paths.len() >= max_paths {
            out.truncated = true;
            return true;
        }
        out.paths.push(Path {
            triple_ids: prefix.iter().map(|e| e.0).collect(),
            steps: prefix.iter().map(|e| e.1).collect(),
        });
        return false;
    }
    let tail = prefix[depth - 1].1.object;
    if let Some(next) = by_subject[depth].get(&tail) {
        for &edge in next {
            prefix.push(edge);
            let stop = extend(by_subject, prefix, max_paths, out);
            prefix.pop();
            if stop {
                return true;
            }
        }
    }
    false
}
