//! Seeded synthetic graphs and query workloads.
//!
//! All generators draw from a `ChaCha8Rng` so a seed reproduces the same
//! graph or workload on every platform.

use std::collections::HashSet;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::engine::Query;
use crate::kg::{Dictionary, EntityId, Triple, TripleStore};
use crate::vector::EntityVector;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Uniform subjects and objects.
    ErdosRenyi,
    /// Zipf-distributed subjects (exponent 1.1), uniform objects.
    PowerLaw,
    /// Every entity gets the same number of distinct random successors.
    Expander,
}

/// Up to `num_edges` distinct triples with uniformly random endpoints.
pub fn erdos_renyi<R: Rng>(
    num_entities: usize,
    num_relations: usize,
    num_edges: usize,
    rng: &mut R,
) -> Vec<Triple> {
    sample_edges(num_edges, rng, |rng| {
        Triple::new(
            rng.gen_range(0..num_entities as u32),
            rng.gen_range(0..num_relations as u32),
            rng.gen_range(0..num_entities as u32),
        )
    })
}

/// Up to `num_edges` distinct triples whose subjects follow a Zipf law, so a
/// few hubs carry most out-edges.
pub fn power_law<R: Rng>(
    num_entities: usize,
    num_relations: usize,
    num_edges: usize,
    rng: &mut R,
) -> Vec<Triple> {
    let weights: Vec<f64> = (1..=num_entities).map(|i| (i as f64).powf(-1.1)).collect();
    let subjects = WeightedIndex::new(&weights).expect("positive weights");
    // shuffle so hub ids are not simply 0, 1, 2, ...
    let mut relabel: Vec<u32> = (0..num_entities as u32).collect();
    relabel.shuffle(rng);
    sample_edges(num_edges, rng, |rng| {
        Triple::new(
            relabel[subjects.sample(rng)],
            rng.gen_range(0..num_relations as u32),
            rng.gen_range(0..num_entities as u32),
        )
    })
}

/// Random out-regular digraph: each entity gets `out_degree` distinct successors.
pub fn expander<R: Rng>(
    num_entities: usize,
    num_relations: usize,
    out_degree: usize,
    rng: &mut R,
) -> Vec<Triple> {
    let mut triples = Vec::with_capacity(num_entities * out_degree);
    for s in 0..num_entities {
        for o in rand::seq::index::sample(rng, num_entities, out_degree.min(num_entities)) {
            triples.push(Triple::new(
                s as u32,
                rng.gen_range(0..num_relations as u32),
                o as u32,
            ));
        }
    }
    triples
}

fn sample_edges<R: Rng>(
    num_edges: usize,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Triple,
) -> Vec<Triple> {
    let mut seen = HashSet::with_capacity(num_edges);
    let mut triples = Vec::with_capacity(num_edges);
    let mut attempts = 0usize;
    while triples.len() < num_edges && attempts < num_edges * 20 {
        attempts += 1;
        let t = draw(rng);
        if seen.insert(t) {
            triples.push(t);
        }
    }
    triples
}

pub fn generate<R: Rng>(
    kind: GraphKind,
    num_entities: usize,
    num_relations: usize,
    num_edges: usize,
    rng: &mut R,
) -> Vec<Triple> {
    match kind {
        GraphKind::ErdosRenyi => erdos_renyi(num_entities, num_relations, num_edges, rng),
        GraphKind::PowerLaw => power_law(num_entities, num_relations, num_edges, rng),
        GraphKind::Expander => expander(
            num_entities,
            num_relations,
            num_edges.div_ceil(num_entities.max(1)),
            rng,
        ),
    }
}

/// Wraps generated triples with `e<i>` / `r<j>` labels.
pub fn labelled(triples: Vec<Triple>, num_entities: usize, num_relations: usize) -> TripleStore {
    let mut entities = Dictionary::new();
    for i in 0..num_entities {
        entities.intern(&format!("e{i}"));
    }
    let mut relations = Dictionary::new();
    for j in 0..num_relations {
        relations.intern(&format!("r{j}"));
    }
    TripleStore {
        entities,
        relations,
        triples,
    }
}

/// `count` queries of `hops` hops, each seeded with a uniformly drawn number of
/// distinct entities from `seed_sizes`, the entities themselves uniform over
/// `0..num_entities`. Query ids are `0..count`.
pub fn random_queries<R: Rng>(
    num_entities: usize,
    count: usize,
    seed_sizes: std::ops::RangeInclusive<usize>,
    hops: usize,
    rng: &mut R,
) -> Vec<Query> {
    (0..count)
        .map(|id| {
            let size = rng
                .gen_range(seed_sizes.clone())
                .clamp(1, num_entities.max(1));
            let seeds = rand::seq::index::sample(rng, num_entities, size)
                .into_iter()
                .map(|i| EntityId(i as u32));
            Query {
                id: id as u64,
                seeds: EntityVector::from_ids(seeds),
                hops,
            }
        })
        .collect()
}
