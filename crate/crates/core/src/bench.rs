//! Query-time, timeout-rate, fidelity and cache-activity measurements.
//!
//! Timed-out queries are censored: they count toward the timeout rate but
//! not toward the mean query time. Latencies are hardware-dependent; the
//! workloads are not, since they derive only from the configured seed.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cache::CacheCounters;
use crate::engine::{plan_batch, EngineError, PartitionedGraph, Query, QueryBatch};
use crate::incidence::{drive_hops, one_hop, HopSemantics, HopTrace, IncidenceGraph};
use crate::kg::Triple;
use crate::oracle::{expected_frontiers, WALK_ORACLE_MAX_ENTITIES};
use crate::synth::{random_queries, rng};
use crate::vector::{jaccard, EntityVector};

pub const CENSORING_NOTE: &str = "timed-out queries are excluded from qt_ms and counted in tr_pct";

/// Triple count above which the BFS oracle is skipped.
pub const BFS_ORACLE_MAX_TRIPLES: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub depths: Vec<usize>,
    /// Limit for depth `d` is `timeouts_ms[d - 1]`, or the last entry beyond that.
    pub timeouts_ms: Vec<u64>,
    pub queries_per_depth: usize,
    pub seed_sizes: (usize, usize),
    pub seed: u64,
    pub semantics: HopSemantics,
    pub repetitions: usize,
    /// Compare every finished query against the matching oracle when it fits.
    pub check_oracle: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            depths: (1..=5).collect(),
            timeouts_ms: vec![2000, 4000, 6000, 8000, 10000],
            queries_per_depth: 100,
            seed_sizes: (1, 20),
            seed: 0,
            semantics: HopSemantics::default(),
            repetitions: 1,
            check_oracle: true,
        }
    }
}

impl BenchConfig {
    pub fn timeout_for(&self, depth: usize) -> Duration {
        let ms = self
            .timeouts_ms
            .get(depth.saturating_sub(1))
            .or(self.timeouts_ms.last())
            .copied()
            .unwrap_or(u64::MAX);
        Duration::from_millis(ms)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.depths.is_empty() || self.depths.contains(&0) {
            return Err("depths must be non-empty and at least 1".into());
        }
        if self.repetitions == 0 {
            return Err("repetitions must be at least 1".into());
        }
        if self.seed_sizes.0 == 0 || self.seed_sizes.0 > self.seed_sizes.1 {
            return Err("seed size range must satisfy 1 <= min <= max".into());
        }
        Ok(())
    }

    /// The workload for `depth`: seeded by `(seed, depth)` only.
    pub fn workload(&self, num_entities: usize, depth: usize) -> Vec<Query> {
        let mut r = rng(self.seed ^ (depth as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        random_queries(
            num_entities,
            self.queries_per_depth,
            self.seed_sizes.0..=self.seed_sizes.1,
            depth,
            &mut r,
        )
    }
}

/// One output row; shared by benchmark and scaling reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub factor: String,
    pub value: String,
    pub qt_ms: Option<f64>,
    pub tr_pct: f64,
    pub jaccard: Option<f64>,
    pub loads: u64,
    pub evictions: u64,
}

pub const CSV_COLUMNS: [&str; 7] = [
    "factor",
    "value",
    "qt_ms",
    "tr_pct",
    "jaccard",
    "loads",
    "evictions",
];

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}"))
        .unwrap_or_else(|| "NA".into())
}

/// CSV with the fixed column order `factor,value,qt_ms,tr_pct,jaccard,loads,evictions`.
pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.factor.clone(),
            r.value.clone(),
            fmt_opt(r.qt_ms, 3),
            format!("{:.2}", r.tr_pct),
            fmt_opt(r.jaccard, 4),
            r.loads.to_string(),
            r.evictions.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn rows_to_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>12} {:>8} {:>8} {:>8} {:>9}",
        "factor", "value", "qt_ms", "tr_pct", "jaccard", "loads", "evictions"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>10} {:>12} {:>8.2} {:>8} {:>8} {:>9}",
            r.factor,
            r.value,
            fmt_opt(r.qt_ms, 3),
            r.tr_pct,
            fmt_opt(r.jaccard, 4),
            r.loads,
            r.evictions
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub fingerprint: String,
    pub cache: CacheCounters,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    pub fn to_table(&self) -> String {
        format!(
            "# {}\n# {}\n{}",
            self.fingerprint,
            CENSORING_NOTE,
            rows_to_table(&self.rows)
        )
    }
}

pub fn fingerprint(cfg: &BenchConfig, target: &str) -> String {
    format!(
        "os={} arch={} threads={} target={} semantics={} seed={} queries={} reps={} seeds={}..={}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(1, |n| n.get()),
        target,
        cfg.semantics,
        cfg.seed,
        cfg.queries_per_depth,
        cfg.repetitions,
        cfg.seed_sizes.0,
        cfg.seed_sizes.1,
    )
}

/// What a benchmark runs against.
pub enum BenchTarget<'a> {
    Single(&'a IncidenceGraph),
    Partitioned {
        graph: &'a mut PartitionedGraph,
        /// Global triple table for the oracle; `None` skips fidelity checks.
        triples: Option<&'a [Triple]>,
    },
}

/// Single-graph k-hop that gives up once `limit` has elapsed since `start`.
pub fn k_hop_timed(
    seeds: &EntityVector,
    k: usize,
    g: &IncidenceGraph,
    semantics: HopSemantics,
    start: Instant,
    limit: Duration,
) -> Result<HopTrace, EngineError> {
    if k == 0 {
        return Err(crate::incidence::QueryError::ZeroHops.into());
    }
    g.check_vector(seeds)?;
    let trace = drive_hops(seeds, k, g.num_entities(), semantics, |q| {
        if start.elapsed() >= limit {
            return Err(EngineError::Timeout);
        }
        Ok(one_hop(q, g))
    })?;
    if start.elapsed() >= limit {
        return Err(EngineError::Timeout);
    }
    Ok(trace)
}

fn oracle_fits(semantics: HopSemantics, num_entities: usize, num_triples: usize) -> bool {
    match semantics {
        HopSemantics::ExactWalk => num_entities <= WALK_ORACLE_MAX_ENTITIES,
        _ => num_triples <= BFS_ORACLE_MAX_TRIPLES,
    }
}

/// Runs the configured depth sweep against `target`.
pub fn run_benchmark(cfg: &BenchConfig, target: BenchTarget<'_>) -> BenchReport {
    let mut target = target;
    let label = match &target {
        BenchTarget::Single(_) => "single",
        BenchTarget::Partitioned { .. } => "partitioned",
    };
    let single_triples;
    let (num_entities, oracle_triples): (usize, Option<&[Triple]>) = match &target {
        BenchTarget::Single(g) => {
            single_triples = if cfg.check_oracle {
                g.triples()
            } else {
                Vec::new()
            };
            (
                g.num_entities(),
                cfg.check_oracle.then_some(&single_triples[..]),
            )
        }
        BenchTarget::Partitioned { graph, triples } => {
            (graph.num_entities(), triples.filter(|_| cfg.check_oracle))
        }
    };
    let oracle_triples =
        oracle_triples.filter(|t| oracle_fits(cfg.semantics, num_entities, t.len()));

    let mut rows = Vec::with_capacity(cfg.depths.len());
    let cache_start = match &target {
        BenchTarget::Partitioned { graph, .. } => graph.counters(),
        BenchTarget::Single(_) => CacheCounters::default(),
    };
    for &depth in &cfg.depths {
        let limit = cfg.timeout_for(depth);
        let queries = cfg.workload(num_entities, depth);
        let before = match &target {
            BenchTarget::Partitioned { graph, .. } => graph.counters(),
            BenchTarget::Single(_) => CacheCounters::default(),
        };
        let mut finished_ms = Vec::new();
        let mut timed_out = 0usize;
        let mut scores = Vec::new();
        for q in &queries {
            let mut last: Option<HopTrace> = None;
            for _ in 0..cfg.repetitions {
                let start = Instant::now();
                let result = match &mut target {
                    BenchTarget::Single(g) => {
                        k_hop_timed(&q.seeds, depth, g, cfg.semantics, start, limit)
                    }
                    BenchTarget::Partitioned { graph, .. } => {
                        graph.cross_graph_k_hop_until(&q.seeds, depth, cfg.semantics, start, limit)
                    }
                };
                let elapsed = start.elapsed();
                match result {
                    Ok(trace) => {
                        finished_ms.push(elapsed.as_secs_f64() * 1e3);
                        last = Some(trace);
                    }
                    Err(_) => timed_out += 1,
                }
            }
            if let (Some(trace), Some(triples)) = (last, oracle_triples) {
                if let Ok(expected) =
                    expected_frontiers(&q.seeds, depth, triples, num_entities, cfg.semantics)
                {
                    scores.push(jaccard(trace.last(), &expected[depth - 1]));
                }
            }
        }
        let after = match &target {
            BenchTarget::Partitioned { graph, .. } => graph.counters(),
            BenchTarget::Single(_) => CacheCounters::default(),
        };
        let delta = after.since(&before);
        let total = queries.len() * cfg.repetitions;
        rows.push(BenchRow {
            factor: "hops".into(),
            value: depth.to_string(),
            qt_ms: (!finished_ms.is_empty())
                .then(|| finished_ms.iter().sum::<f64>() / finished_ms.len() as f64),
            tr_pct: if total == 0 {
                0.0
            } else {
                100.0 * timed_out as f64 / total as f64
            },
            jaccard: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
            loads: delta.loads,
            evictions: delta.evictions,
        });
    }
    let cache = match &target {
        BenchTarget::Partitioned { graph, .. } => graph.counters().since(&cache_start),
        BenchTarget::Single(_) => CacheCounters::default(),
    };
    BenchReport {
        rows,
        fingerprint: fingerprint(cfg, label),
        cache,
    }
}

/// Queries per second over `threads` workers sharing one graph. Not a QT measurement.
pub fn measure_throughput(
    g: &IncidenceGraph,
    queries: &[Query],
    semantics: HopSemantics,
    threads: usize,
) -> f64 {
    let threads = threads.max(1);
    let start = Instant::now();
    std::thread::scope(|s| {
        for chunk in queries.chunks(queries.len().div_ceil(threads).max(1)) {
            s.spawn(move || {
                for q in chunk {
                    let _ = crate::incidence::k_hop(&q.seeds, q.hops, g, semantics);
                }
            });
        }
    });
    queries.len() as f64 / start.elapsed().as_secs_f64().max(1e-9)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub hops: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub cache_sizes: Vec<usize>,
    pub semantics: Vec<HopSemantics>,
    pub base_hops: usize,
    pub base_batch: usize,
    pub base_cache: usize,
    pub base_semantics: HopSemantics,
    pub queries: usize,
    pub seed_sizes: (usize, usize),
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            hops: (1..=5).collect(),
            batch_sizes: vec![1, 10, 50, 100],
            cache_sizes: vec![1, 2, 4, 8, 16],
            semantics: HopSemantics::ALL.to_vec(),
            base_hops: 2,
            base_batch: 50,
            base_cache: 16,
            base_semantics: HopSemantics::default(),
            queries: 100,
            seed_sizes: (1, 20),
            seed: 0,
        }
    }
}

/// A scaling row plus the shard access trace that produced its counters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub row: BenchRow,
    pub counters: CacheCounters,
    pub trace: Vec<usize>,
}

/// Runs `queries` in consecutive batches of `batch_size`, each reordered by
/// [`plan_batch`], against a fresh cache of `cache` slots.
pub fn run_workload(
    pg: &mut PartitionedGraph,
    queries: &[Query],
    batch_size: usize,
    cache: usize,
    semantics: HopSemantics,
) -> Result<(Duration, CacheCounters, Vec<usize>), EngineError> {
    pg.reset_cache(cache)?;
    pg.cache_mut().record_trace();
    let start = Instant::now();
    for chunk in queries.chunks(batch_size.max(1)) {
        let batch = plan_batch(chunk.to_vec(), pg.plan());
        for (_, r) in pg.run_batch(&batch, semantics) {
            r?;
        }
    }
    let elapsed = start.elapsed();
    let trace = pg.cache_mut().take_trace();
    Ok((elapsed, pg.counters(), trace))
}

/// Executes `queries` in exactly the given order, without reordering.
pub fn run_unplanned(
    pg: &mut PartitionedGraph,
    queries: &[Query],
    cache: usize,
    semantics: HopSemantics,
) -> Result<(Vec<HopTrace>, CacheCounters, Vec<usize>), EngineError> {
    pg.reset_cache(cache)?;
    pg.cache_mut().record_trace();
    let batch = QueryBatch::in_order(queries.to_vec());
    let traces = pg
        .run_batch(&batch, semantics)
        .into_iter()
        .map(|(_, r)| r)
        .collect::<Result<Vec<_>, _>>()?;
    let trace = pg.cache_mut().take_trace();
    Ok((traces, pg.counters(), trace))
}

/// Hop, batch-size, cache-size and semantics sweeps over one seeded workload.
pub fn run_scaling_suite(
    pg: &mut PartitionedGraph,
    cfg: &ScalingConfig,
) -> Result<Vec<ScalingRow>, EngineError> {
    let base = random_queries(
        pg.num_entities(),
        cfg.queries,
        cfg.seed_sizes.0..=cfg.seed_sizes.1,
        cfg.base_hops,
        &mut rng(cfg.seed),
    );
    let with_hops = |k: usize| -> Vec<Query> {
        base.iter()
            .map(|q| Query {
                hops: k,
                ..q.clone()
            })
            .collect()
    };
    let mut rows = Vec::new();
    let mut push =
        |factor: &str, value: String, res: (Duration, CacheCounters, Vec<usize>), n: usize| {
            let (elapsed, counters, trace) = res;
            rows.push(ScalingRow {
                row: BenchRow {
                    factor: factor.into(),
                    value,
                    qt_ms: Some(elapsed.as_secs_f64() * 1e3 / n.max(1) as f64),
                    tr_pct: 0.0,
                    jaccard: None,
                    loads: counters.loads,
                    evictions: counters.evictions,
                },
                counters,
                trace,
            });
        };
    for &k in &cfg.hops {
        let res = run_workload(
            pg,
            &with_hops(k),
            cfg.base_batch,
            cfg.base_cache,
            cfg.base_semantics,
        )?;
        push("hops", k.to_string(), res, base.len());
    }
    for &b in &cfg.batch_sizes {
        let res = run_workload(pg, &base, b, cfg.base_cache, cfg.base_semantics)?;
        push("batch_size", b.to_string(), res, base.len());
    }
    for &c in &cfg.cache_sizes {
        let res = run_workload(pg, &base, cfg.base_batch, c, cfg.base_semantics)?;
        push("cache_size", c.to_string(), res, base.len());
    }
    for &s in &cfg.semantics {
        let res = run_workload(pg, &base, cfg.base_batch, cfg.base_cache, s)?;
        push("semantics", s.to_string(), res, base.len());
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::MemoryStore;
    use crate::oracle::simulate_lru;
    use crate::partition::{materialize_subgraphs, partition_degree_aware};
    use crate::synth::{erdos_renyi, rng};

    fn graph() -> (Vec<Triple>, IncidenceGraph) {
        let triples = erdos_renyi(200, 3, 1200, &mut rng(11));
        let g = IncidenceGraph::build(&triples, 200, 3).unwrap();
        (triples, g)
    }

    fn small_cfg() -> BenchConfig {
        BenchConfig {
            depths: vec![1, 2, 3],
            queries_per_depth: 10,
            seed: 5,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn generous_limits_give_zero_timeouts() {
        let (_, g) = graph();
        let report = run_benchmark(&small_cfg(), BenchTarget::Single(&g));
        assert_eq!(report.rows.len(), 3);
        for r in &report.rows {
            assert_eq!(r.tr_pct, 0.0);
            assert!(r.qt_ms.is_some());
            assert_eq!(r.jaccard, Some(1.0));
        }
    }

    #[test]
    fn zero_limit_times_everything_out() {
        let (_, g) = graph();
        let cfg = BenchConfig {
            timeouts_ms: vec![0],
            ..small_cfg()
        };
        let report = run_benchmark(&cfg, BenchTarget::Single(&g));
        for r in &report.rows {
            assert_eq!(r.tr_pct, 100.0);
            assert_eq!(r.qt_ms, None);
        }
    }

    #[test]
    fn same_seed_same_workload_and_fidelity() {
        let (_, g) = graph();
        let cfg = small_cfg();
        assert_eq!(cfg.workload(200, 2), cfg.workload(200, 2));
        let a = run_benchmark(&cfg, BenchTarget::Single(&g));
        let b = run_benchmark(&cfg, BenchTarget::Single(&g));
        let ja: Vec<_> = a.rows.iter().map(|r| r.jaccard).collect();
        let jb: Vec<_> = b.rows.iter().map(|r| r.jaccard).collect();
        assert_eq!(ja, jb);
    }

    #[test]
    fn partitioned_benchmark_tracks_cache() {
        let (triples, _) = graph();
        let plan = partition_degree_aware(&triples, 200, 4).unwrap();
        let shards = materialize_subgraphs(&plan, &triples, 3).unwrap();
        let mut pg = PartitionedGraph::new(plan, Box::new(MemoryStore::new(shards)), 2).unwrap();
        let cfg = BenchConfig {
            semantics: HopSemantics::ExactWalk,
            ..small_cfg()
        };
        let report = run_benchmark(
            &cfg,
            BenchTarget::Partitioned {
                graph: &mut pg,
                triples: Some(&triples),
            },
        );
        assert!(report.rows.iter().all(|r| r.jaccard == Some(1.0)));
        assert!(report.cache.loads > 0);
        assert_eq!(
            report.rows.iter().map(|r| r.loads).sum::<u64>(),
            report.cache.loads
        );
    }

    #[test]
    fn csv_has_fixed_columns() {
        let rows = vec![BenchRow {
            factor: "hops".into(),
            value: "1".into(),
            qt_ms: None,
            tr_pct: 100.0,
            jaccard: Some(1.0),
            loads: 3,
            evictions: 1,
        }];
        let csv = rows_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("factor,value,qt_ms,tr_pct,jaccard,loads,evictions")
        );
        assert_eq!(lines.next(), Some("hops,1,NA,100.00,1.0000,3,1"));
    }

    #[test]
    fn scaling_counters_match_lru_model() {
        let (triples, _) = graph();
        let plan = partition_degree_aware(&triples, 200, 4).unwrap();
        let shards = materialize_subgraphs(&plan, &triples, 3).unwrap();
        let mut pg = PartitionedGraph::new(plan, Box::new(MemoryStore::new(shards)), 1).unwrap();
        let cfg = ScalingConfig {
            hops: vec![1, 2],
            batch_sizes: vec![1, 5],
            cache_sizes: vec![1, 2, 4],
            queries: 12,
            base_cache: 4,
            base_batch: 5,
            ..ScalingConfig::default()
        };
        let rows = run_scaling_suite(&mut pg, &cfg).unwrap();
        assert_eq!(rows.len(), 2 + 2 + 3 + 3);
        for r in &rows {
            let cap: usize = if r.row.factor == "cache_size" {
                r.row.value.parse().unwrap()
            } else {
                cfg.base_cache
            };
            assert_eq!(simulate_lru(cap, &r.trace), r.counters, "{:?}", r.row);
        }
        let big = rows
            .iter()
            .find(|r| r.row.factor == "cache_size" && r.row.value == "4")
            .unwrap();
        assert_eq!((big.row.loads, big.row.evictions), (4, 0));
    }
}
