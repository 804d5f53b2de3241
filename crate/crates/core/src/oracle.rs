//! Reference implementations used to check the engine.
//!
//! These deliberately avoid the incidence structures: BFS runs on adjacency
//! lists with a queue, walks on a dense boolean matrix, and the LRU model is a
//! plain list.

use std::collections::VecDeque;

use thiserror::Error;

use crate::cache::CacheCounters;
use crate::incidence::HopSemantics;
use crate::kg::{EntityId, Triple};
use crate::vector::EntityVector;

/// Largest entity count accepted by [`oracle_walk`].
pub const WALK_ORACLE_MAX_ENTITIES: usize = 1_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("walk oracle limited to {limit} entities, graph has {actual}")]
    TooLarge { limit: usize, actual: usize },
}

/// BFS layers from a seed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsLayers {
    /// `layers[h-1]`: entities at distance exactly `h`.
    pub layers: Vec<EntityVector>,
    /// `cumulative[h-1]`: entities at distance `1..=h`.
    pub cumulative: Vec<EntityVector>,
}

pub fn oracle_bfs(
    seeds: &EntityVector,
    k: usize,
    triples: &[Triple],
    num_entities: usize,
) -> BfsLayers {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); num_entities];
    for t in triples {
        adj[t.subject.index()].push(t.object.0);
    }
    let mut dist = vec![usize::MAX; num_entities];
    let mut queue = VecDeque::new();
    for s in seeds.iter() {
        dist[s.index()] = 0;
        queue.push_back(s.0);
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize];
        if d == k {
            continue;
        }
        for &v in &adj[u as usize] {
            if dist[v as usize] == usize::MAX {
                dist[v as usize] = d + 1;
                queue.push_back(v);
            }
        }
    }
    let mut layers = vec![Vec::new(); k];
    for (e, &d) in dist.iter().enumerate() {
        if d >= 1 && d <= k {
            layers[d - 1].push(EntityId(e as u32));
        }
    }
    let layers: Vec<EntityVector> = layers.into_iter().map(EntityVector::from_ids).collect();
    let mut cumulative = Vec::with_capacity(k);
    let mut acc: Vec<EntityId> = Vec::new();
    for layer in &layers {
        acc.extend(layer.iter());
        cumulative.push(EntityVector::from_ids(acc.iter().copied()));
    }
    BfsLayers { layers, cumulative }
}

/// Entities at the end of some walk of exactly `h` edges, for `h = 1..=k`.
pub fn oracle_walk(
    seeds: &EntityVector,
    k: usize,
    triples: &[Triple],
    num_entities: usize,
) -> Result<Vec<EntityVector>, OracleError> {
    if num_entities > WALK_ORACLE_MAX_ENTITIES {
        return Err(OracleError::TooLarge {
            limit: WALK_ORACLE_MAX_ENTITIES,
            actual: num_entities,
        });
    }
    let n = num_entities;
    let mut adj = vec![vec![false; n]; n];
    for t in triples {
        adj[t.subject.index()][t.object.index()] = true;
    }
    let mut current = vec![false; n];
    for s in seeds.iter() {
        current[s.index()] = true;
    }
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut next = vec![false; n];
        for i in 0..n {
            if !current[i] {
                continue;
            }
            for j in 0..n {
                if adj[i][j] {
                    next[j] = true;
                }
            }
        }
        out.push(EntityVector::from_ids(
            (0..n).filter(|&j| next[j]).map(|j| EntityId(j as u32)),
        ));
        current = next;
    }
    Ok(out)
}

/// Per-hop expected frontiers for `semantics`, from the matching oracle.
pub fn expected_frontiers(
    seeds: &EntityVector,
    k: usize,
    triples: &[Triple],
    num_entities: usize,
    semantics: HopSemantics,
) -> Result<Vec<EntityVector>, OracleError> {
    match semantics {
        HopSemantics::ExactWalk => oracle_walk(seeds, k, triples, num_entities),
        HopSemantics::Frontier => Ok(oracle_bfs(seeds, k, triples, num_entities).layers),
        HopSemantics::Cumulative => Ok(oracle_bfs(seeds, k, triples, num_entities).cumulative),
    }
}

/// Counters a textbook LRU of `capacity` slots would report for `trace`.
pub fn simulate_lru(capacity: usize, trace: &[usize]) -> CacheCounters {
    let mut list: Vec<usize> = Vec::new();
    let mut c = CacheCounters::default();
    for &p in trace {
        if let Some(pos) = list.iter().position(|&x| x == p) {
            list.remove(pos);
            list.push(p);
            c.hits += 1;
        } else {
            c.misses += 1;
            c.loads += 1;
            if list.len() == capacity {
                list.remove(0);
                c.evictions += 1;
            }
            list.push(p);
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Vec<Triple> {
        vec![
            Triple::new(0, 0, 1),
            Triple::new(1, 1, 2),
            Triple::new(0, 0, 2),
            Triple::new(2, 2, 0),
        ]
    }

    fn ev(ids: &[u32]) -> EntityVector {
        EntityVector::from_raw(ids.iter().copied())
    }

    #[test]
    fn bfs_tiny() {
        let b = oracle_bfs(&ev(&[0]), 2, &tiny(), 3);
        assert_eq!(b.layers, vec![ev(&[1, 2]), ev(&[])]);
        assert_eq!(b.cumulative, vec![ev(&[1, 2]), ev(&[1, 2])]);
    }

    #[test]
    fn bfs_from_everything_finds_nothing_new() {
        let b = oracle_bfs(&ev(&[0, 1, 2]), 3, &tiny(), 3);
        assert!(b.layers.iter().all(EntityVector::is_empty));
    }

    #[test]
    fn walk_tiny() {
        let w = oracle_walk(&ev(&[0]), 2, &tiny(), 3).unwrap();
        assert_eq!(w, vec![ev(&[1, 2]), ev(&[0, 2])]);
        assert!(oracle_walk(&ev(&[]), 3, &tiny(), 3)
            .unwrap()
            .iter()
            .all(EntityVector::is_empty));
        assert!(oracle_walk(&ev(&[]), 1, &tiny(), 5000).is_err());
    }

    #[test]
    fn lru_model() {
        let c = simulate_lru(1, &[1, 2, 1]);
        assert_eq!((c.loads, c.evictions, c.hits), (3, 2, 0));
        let c = simulate_lru(2, &[1, 2, 1]);
        assert_eq!((c.loads, c.evictions, c.hits), (2, 0, 1));
        let alternating: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let c = simulate_lru(1, &alternating);
        assert_eq!((c.loads, c.evictions), (100, 99));
    }
}
