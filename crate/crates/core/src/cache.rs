//! Fixed-capacity LRU cache of loaded shards, and the expected-cost model.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::partition::Subgraph;

#[derive(Debug, Error, PartialEq)]
pub enum CacheError {
    #[error("cache capacity must be at least 1")]
    ZeroCapacity,
    #[error("hit rate {0} outside [0, 1]")]
    HitRate(f64),
    #[error("negative or non-finite time {0}")]
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CacheCounters {
    pub hits: u64,
    pub misses: u64,
    pub loads: u64,
    pub evictions: u64,
}

impl CacheCounters {
    pub fn accesses(&self) -> u64 {
        self.hits + self.misses
    }

    /// `hits / (hits + misses)`, or 0 before the first access.
    pub fn hit_rate(&self) -> f64 {
        match self.accesses() {
            0 => 0.0,
            n => self.hits as f64 / n as f64,
        }
    }

    pub fn since(&self, earlier: &CacheCounters) -> CacheCounters {
        CacheCounters {
            hits: self.hits - earlier.hits,
            misses: self.misses - earlier.misses,
            loads: self.loads - earlier.loads,
            evictions: self.evictions - earlier.evictions,
        }
    }
}

/// LRU over partition indices. Recency is refreshed on every access.
///
/// Counters only move on successful accesses: a failing loader leaves
/// contents, recency and counters exactly as they were.
#[derive(Debug)]
pub struct SubgraphCache<V = Subgraph> {
    capacity: usize,
    resident: HashMap<usize, (Arc<V>, u64)>,
    recency: BTreeMap<u64, usize>,
    clock: u64,
    counters: CacheCounters,
    trace: Option<Vec<usize>>,
}

impl<V> SubgraphCache<V> {
    pub fn new(capacity: usize) -> Result<Self, CacheError> {
        if capacity == 0 {
            return Err(CacheError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            resident: HashMap::with_capacity(capacity),
            recency: BTreeMap::new(),
            clock: 0,
            counters: CacheCounters::default(),
            trace: None,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.resident.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resident.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.resident.contains_key(&idx)
    }

    /// Resident partitions, least recently used first.
    pub fn resident(&self) -> Vec<usize> {
        self.recency.values().copied().collect()
    }

    pub fn counters(&self) -> CacheCounters {
        self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = CacheCounters::default();
    }

    /// Drops every resident entry; counters are kept.
    pub fn clear(&mut self) {
        self.resident.clear();
        self.recency.clear();
    }

    /// Starts recording the partition index of every successful access.
    pub fn record_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<usize> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn touch(&mut self, idx: usize) -> u64 {
        self.clock += 1;
        self.recency.insert(self.clock, idx);
        self.clock
    }

    /// Returns partition `idx`, invoking `loader` on a miss.
    pub fn get<E>(
        &mut self,
        idx: usize,
        loader: impl FnOnce(usize) -> Result<Arc<V>, E>,
    ) -> Result<Arc<V>, E> {
        if let Some((_, stamp)) = self.resident.get(&idx) {
            let old = *stamp;
            self.recency.remove(&old);
            let stamp = self.touch(idx);
            let entry = self.resident.get_mut(&idx).expect("resident");
            entry.1 = stamp;
            self.counters.hits += 1;
            if let Some(t) = self.trace.as_mut() {
                t.push(idx);
            }
            return Ok(entry.0.clone());
        }

        let value = loader(idx)?;
        self.counters.misses += 1;
        self.counters.loads += 1;
        if self.resident.len() >= self.capacity {
            let (&stamp, &victim) = self.recency.iter().next().expect("cache is full");
            self.recency.remove(&stamp);
            self.resident.remove(&victim);
            self.counters.evictions += 1;
        }
        let stamp = self.touch(idx);
        self.resident.insert(idx, (value.clone(), stamp));
        if let Some(t) = self.trace.as_mut() {
            t.push(idx);
        }
        Ok(value)
    }
}

/// Per-shard retrieval cost under hit rate `hit_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    hit_rate: f64,
    tau_mm: f64,
    tau_io: f64,
}

impl CostModel {
    /// `tau_mm` is the in-memory multiply time and `tau_io` the mean shard load time, in ms.
    pub fn new(hit_rate: f64, tau_mm: f64, tau_io: f64) -> Result<Self, CacheError> {
        if !(0.0..=1.0).contains(&hit_rate) {
            return Err(CacheError::HitRate(hit_rate));
        }
        for t in [tau_mm, tau_io] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CacheError::Time(t));
            }
        }
        Ok(Self {
            hit_rate,
            tau_mm,
            tau_io,
        })
    }

    pub fn hit_rate(&self) -> f64 {
        self.hit_rate
    }

    /// `h·τ_mm + (1−h)·(τ_mm + τ_io)`.
    pub fn expected_cost(&self) -> f64 {
        let h = self.hit_rate;
        h * self.tau_mm + (1.0 - h) * (self.tau_mm + self.tau_io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(capacity: usize, trace: &[usize]) -> SubgraphCache<usize> {
        let mut c = SubgraphCache::new(capacity).unwrap();
        for &p in trace {
            let v = c.get(p, |i| Ok::<_, ()>(Arc::new(i * 10))).unwrap();
            assert_eq!(*v, p * 10);
        }
        c
    }

    #[test]
    fn capacity_one_thrashes() {
        let c = run(1, &[1, 2, 1]);
        assert_eq!(
            c.counters(),
            CacheCounters {
                hits: 0,
                misses: 3,
                loads: 3,
                evictions: 2
            }
        );
    }

    #[test]
    fn capacity_two_hits() {
        let c = run(2, &[1, 2, 1]);
        assert_eq!(
            c.counters(),
            CacheCounters {
                hits: 1,
                misses: 2,
                loads: 2,
                evictions: 0
            }
        );
        assert_eq!(c.resident(), vec![2, 1]);
    }

    #[test]
    fn large_cache_loads_each_once() {
        let trace: Vec<usize> = (0..16).chain(0..16).chain((0..16).rev()).collect();
        let c = run(16, &trace);
        assert_eq!(c.counters().loads, 16);
        assert_eq!(c.counters().evictions, 0);
    }

    #[test]
    fn fresh_counters() {
        let c = SubgraphCache::<usize>::new(3).unwrap();
        assert_eq!(c.counters(), CacheCounters::default());
        assert_eq!(c.counters().hit_rate(), 0.0);
        assert!(SubgraphCache::<usize>::new(0).is_err());
    }

    #[test]
    fn failed_load_leaves_state() {
        let mut c = run(2, &[1, 2]);
        let before = (c.counters(), c.resident());
        let err = c.get(3, |_| Err::<Arc<usize>, _>("disk gone"));
        assert_eq!(err.unwrap_err(), "disk gone");
        assert_eq!((c.counters(), c.resident()), before);
    }

    #[test]
    fn hit_refreshes_recency() {
        let mut c = run(2, &[1, 2, 1, 3]);
        // 2 was least recent when 3 arrived
        assert!(c.contains(1) && c.contains(3) && !c.contains(2));
        c.record_trace();
        c.get(1, |i| Ok::<_, ()>(Arc::new(i))).unwrap();
        assert_eq!(c.take_trace(), vec![1]);
    }

    #[test]
    fn cost_model() {
        let cost = |h| CostModel::new(h, 2.0, 10.0).unwrap().expected_cost();
        assert_eq!(cost(1.0), 2.0);
        assert_eq!(cost(0.0), 12.0);
        assert_eq!(cost(0.5), 7.0);
        assert!(CostModel::new(1.5, 1.0, 1.0).is_err());
        assert!(CostModel::new(0.5, -1.0, 1.0).is_err());
        assert!(CostModel::new(0.5, 1.0, f64::NAN).is_err());
    }
}
