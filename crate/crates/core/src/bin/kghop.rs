//! Command-line front end: build, partition, query, bench, scale, verify.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kghop::archive::{load_graph_dir, load_partition_dir, save_graph_dir, save_partition_dir};
use kghop::bench::{self, BenchConfig, BenchTarget, ScalingConfig};
use kghop::oracle::{expected_frontiers, WALK_ORACLE_MAX_ENTITIES};
use kghop::partition::{out_degrees, strategy};
use kghop::paths::DEFAULT_MAX_PATHS;
use kghop::synth::{self, GraphKind};
use kghop::{
    ingest_triples, jaccard, k_hop, lookup_entities, materialize_subgraphs, reconstruct_paths,
    Dictionary, EntityVector, HopSemantics, HopTrace, IncidenceGraph, PartitionedGraph, PathSet,
    SubgraphStore, Triple, TripleId,
};

#[derive(Parser)]
#[command(
    name = "kghop",
    version,
    about = "k-hop retrieval over knowledge graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a TSV triple file and write a graph directory
    Build {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a graph directory into subject-cohesive shards
    Partition {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        m: u32,
        #[arg(long, default_value = "lpt", value_parser = ["lpt", "hash"])]
        strategy: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one k-hop query and print JSON lines
    Query {
        #[command(flatten)]
        source: Source,
        /// Comma-separated labels, or a file with one label per line
        #[arg(long)]
        entities: String,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        hops: u32,
        #[arg(long, default_value = "frontier", value_parser = parse_semantics)]
        semantics: HopSemantics,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
        cache: u32,
        /// Also print complete length-k paths
        #[arg(long)]
        paths: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
        max_paths: usize,
    },
    /// Depth sweep with query time, timeout rate and fidelity
    Bench {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5])]
        depths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [2000u64, 4000, 6000, 8000, 10000])]
        timeouts: Vec<u64>,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 1)]
        min_seeds: usize,
        #[arg(long, default_value_t = 20)]
        max_seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "frontier", value_parser = parse_semantics)]
        semantics: HopSemantics,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
        cache: u32,
        /// Skip the oracle comparison
        #[arg(long)]
        no_oracle: bool,
        /// Also measure multi-threaded throughput (single graph only)
        #[arg(long)]
        throughput_threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Hop, batch-size, cache-size and semantics sweeps over a partition directory
    Scale {
        #[arg(long)]
        partitioned: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5])]
        hops: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 10, 50, 100])]
        batch_sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 16])]
        cache_sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        base_hops: usize,
        #[arg(long, default_value_t = 50)]
        base_batch: usize,
        #[arg(long, default_value_t = 16)]
        base_cache: usize,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Compare engine output with reference oracles; exit 3 on any mismatch
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        partitioned: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        max_hops: u32,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
        cache: u32,
    },
    /// Write a seeded synthetic graph as TSV
    Generate {
        #[arg(long, value_enum, default_value_t = Kind::Er)]
        kind: Kind,
        #[arg(long)]
        entities: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 8)]
        relations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Graph directory written by `build`
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Partition directory written by `partition`
    #[arg(long)]
    partitioned: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Er,
    Powerlaw,
    Expander,
}

fn parse_semantics(s: &str) -> Result<HopSemantics, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Data(String),
    Verify(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Verify(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Verify(m) => m,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(m)) if m.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Build { triples, out } => cmd_build(&triples, &out),
        Command::Partition {
            graph,
            m,
            strategy,
            out,
        } => cmd_partition(&graph, m as usize, &strategy, &out),
        Command::Query {
            source,
            entities,
            hops,
            semantics,
            cache,
            paths,
            max_paths,
        } => cmd_query(
            &source,
            &entities,
            hops as usize,
            semantics,
            cache as usize,
            paths.then_some(max_paths),
        ),
        Command::Bench {
            source,
            depths,
            timeouts,
            queries,
            min_seeds,
            max_seeds,
            seed,
            semantics,
            reps,
            cache,
            no_oracle,
            throughput_threads,
            format,
        } => {
            let cfg = BenchConfig {
                depths,
                timeouts_ms: timeouts,
                queries_per_depth: queries,
                seed_sizes: (min_seeds, max_seeds),
                seed,
                semantics,
                repetitions: reps,
                check_oracle: !no_oracle,
            };
            cfg.validate().map_err(Failure::Usage)?;
            cmd_bench(&source, &cfg, cache as usize, throughput_threads, format)
        }
        Command::Scale {
            partitioned,
            hops,
            batch_sizes,
            cache_sizes,
            base_hops,
            base_batch,
            base_cache,
            queries,
            seed,
            format,
        } => {
            if hops.contains(&0) || base_hops == 0 {
                return Err(Failure::Usage("hop counts must be at least 1".into()));
            }
            if cache_sizes.contains(&0) || base_cache == 0 {
                return Err(Failure::Usage("cache sizes must be at least 1".into()));
            }
            let cfg = ScalingConfig {
                hops,
                batch_sizes,
                cache_sizes,
                base_hops,
                base_batch,
                base_cache,
                queries,
                seed,
                ..ScalingConfig::default()
            };
            cmd_scale(&partitioned, &cfg, format)
        }
        Command::Verify {
            graph,
            partitioned,
            queries,
            seed,
            max_hops,
            cache,
        } => cmd_verify(
            &graph,
            partitioned.as_deref(),
            queries,
            seed,
            max_hops as usize,
            cache as usize,
        ),
        Command::Generate {
            kind,
            entities,
            edges,
            relations,
            seed,
            out,
        } => cmd_generate(kind, entities, edges, relations, seed, &out),
    }
}

fn cmd_build(triples: &Path, out: &Path) -> CliResult {
    let file = fs::File::open(triples).map_err(|e| data(format!("{}: {e}", triples.display())))?;
    let kg = ingest_triples(BufReader::new(file)).map_err(data)?;
    let g =
        IncidenceGraph::build(&kg.triples, kg.num_entities(), kg.num_relations()).map_err(data)?;
    save_graph_dir(out, &g, &kg.entities, &kg.relations).map_err(data)?;
    eprintln!(
        "built {}: {} entities, {} relations, {} triples",
        out.display(),
        g.num_entities(),
        g.num_relations(),
        g.num_triples()
    );
    Ok(())
}

fn cmd_partition(graph: &Path, m: usize, strategy_name: &str, out: &Path) -> CliResult {
    let gd = load_graph_dir(graph).map_err(data)?;
    let triples = gd.graph.triples();
    let partitioner = strategy(strategy_name).map_err(|e| Failure::Usage(e.to_string()))?;
    let plan = partitioner
        .plan(&out_degrees(&triples, gd.graph.num_entities()), m)
        .map_err(data)?;
    let shards = materialize_subgraphs(&plan, &triples, gd.graph.num_relations()).map_err(data)?;
    save_partition_dir(
        out,
        partitioner.name(),
        &plan,
        &shards,
        &gd.entities,
        &gd.relations,
    )
    .map_err(data)?;
    eprintln!(
        "wrote {} partitions to {} (loads {:?}, spread {})",
        plan.m,
        out.display(),
        plan.loads,
        plan.spread()
    );
    Ok(())
}

fn read_labels(arg: &str) -> Result<Vec<String>, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| data(format!("{arg}: {e}")))?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect())
    } else {
        Ok(arg
            .split(',')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect())
    }
}

enum Loaded {
    Single {
        graph: IncidenceGraph,
        entities: Dictionary,
        relations: Dictionary,
    },
    Partitioned {
        graph: PartitionedGraph,
        entities: Dictionary,
        relations: Dictionary,
    },
}

impl Loaded {
    fn open(source: &Source, cache: usize) -> Result<Self, Failure> {
        if let Some(dir) = &source.graph {
            let gd = load_graph_dir(dir).map_err(data)?;
            Ok(Loaded::Single {
                graph: gd.graph,
                entities: gd.entities,
                relations: gd.relations,
            })
        } else if let Some(dir) = &source.partitioned {
            let pd = load_partition_dir(dir).map_err(data)?;
            let graph = PartitionedGraph::new(pd.plan, Box::new(pd.store), cache).map_err(data)?;
            Ok(Loaded::Partitioned {
                graph,
                entities: pd.entities,
                relations: pd.relations,
            })
        } else {
            Err(Failure::Usage(
                "one of --graph or --partitioned is required".into(),
            ))
        }
    }

    fn dictionaries(&self) -> (&Dictionary, &Dictionary) {
        match self {
            Loaded::Single {
                entities,
                relations,
                ..
            }
            | Loaded::Partitioned {
                entities,
                relations,
                ..
            } => (entities, relations),
        }
    }
}

fn labels_of(v: &EntityVector, dict: &Dictionary) -> Vec<String> {
    v.iter()
        .map(|e| dict.label(e.0).unwrap_or("?").to_owned())
        .collect()
}

fn cmd_query(
    source: &Source,
    entities: &str,
    hops: usize,
    semantics: HopSemantics,
    cache: usize,
    max_paths: Option<usize>,
) -> CliResult {
    let mut loaded = Loaded::open(source, cache)?;
    let labels = read_labels(entities)?;
    let lookup = lookup_entities(&labels, loaded.dictionaries().0);
    for u in &lookup.unknown {
        eprintln!("warning: unknown entity {u:?}");
    }
    let seeds = lookup.vector;
    let (trace, paths, counters): (HopTrace, Option<PathSet>, _) = match &mut loaded {
        Loaded::Single { graph, .. } => {
            let trace = k_hop(&seeds, hops, graph, semantics).map_err(data)?;
            let paths = max_paths
                .map(|p| reconstruct_paths(&seeds, hops, graph, p))
                .transpose()
                .map_err(data)?;
            (trace, paths, None)
        }
        Loaded::Partitioned { graph, .. } => {
            let trace = graph
                .cross_graph_k_hop(&seeds, hops, semantics)
                .map_err(data)?;
            let paths = max_paths
                .map(|p| graph.cross_graph_paths(&seeds, hops, p))
                .transpose()
                .map_err(data)?;
            (trace, paths, Some(graph.counters()))
        }
    };
    let (ents, rels) = loaded.dictionaries();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let emit = |out: &mut io::StdoutLock, v: serde_json::Value| writeln!(out, "{v}").map_err(data);
    emit(
        &mut out,
        json!({"type": "query", "seeds": labels_of(&seeds, ents), "unknown": lookup.unknown,
               "hops": hops, "semantics": semantics.as_str()}),
    )?;
    for (i, step) in trace.hops.iter().enumerate() {
        emit(
            &mut out,
            json!({"type": "hop", "hop": i + 1, "entities": labels_of(&step.frontier, ents),
                   "activated_triples": step.activated.len()}),
        )?;
    }
    if let Some(ps) = &paths {
        for p in &ps.paths {
            let steps: Vec<[&str; 3]> = p
                .steps
                .iter()
                .map(|t| {
                    [
                        ents.label(t.subject.0).unwrap_or("?"),
                        rels.label(t.relation.0).unwrap_or("?"),
                        ents.label(t.object.0).unwrap_or("?"),
                    ]
                })
                .collect();
            emit(&mut out, json!({"type": "path", "steps": steps}))?;
        }
    }
    let mut summary = json!({"type": "summary", "final_size": trace.last().len()});
    if let Some(ps) = &paths {
        summary["paths"] = json!(ps.paths.len());
        summary["truncated"] = json!(ps.truncated);
    }
    if let Some(c) = counters {
        summary["cache"] = json!(c);
    }
    emit(&mut out, summary)
}

fn print_rows(rows: &[bench::BenchRow], format: Format, header: Option<&str>) {
    match format {
        Format::Csv => print!("{}", bench::rows_to_csv(rows)),
        Format::Table => {
            if let Some(h) = header {
                println!("# {h}");
            }
            print!("{}", bench::rows_to_table(rows));
        }
    }
}

fn cmd_bench(
    source: &Source,
    cfg: &BenchConfig,
    cache: usize,
    threads: Option<usize>,
    format: Format,
) -> CliResult {
    let mut loaded = Loaded::open(source, cache)?;
    let shard_triples = match (&source.partitioned, cfg.check_oracle) {
        (Some(dir), true) => Some(global_triples(dir)?),
        _ => None,
    };
    let report = match &mut loaded {
        Loaded::Single { graph, .. } => {
            if let Some(t) = threads {
                let queries = cfg.workload(graph.num_entities(), cfg.depths[0]);
                let qps = bench::measure_throughput(graph, &queries, cfg.semantics, t);
                eprintln!("throughput: {qps:.1} queries/s on {t} threads (not part of qt_ms)");
            }
            bench::run_benchmark(cfg, BenchTarget::Single(graph))
        }
        Loaded::Partitioned { graph, .. } => {
            if threads.is_some() {
                eprintln!("warning: throughput mode applies to single graphs only");
            }
            bench::run_benchmark(
                cfg,
                BenchTarget::Partitioned {
                    graph,
                    triples: shard_triples.as_deref(),
                },
            )
        }
    };
    eprintln!("# {}", report.fingerprint);
    eprintln!("# {}", bench::CENSORING_NOTE);
    print_rows(&report.rows, format, None);
    Ok(())
}

/// Reassembles the global triple table from every shard, in triple-id order.
fn global_triples(dir: &Path) -> Result<Vec<Triple>, Failure> {
    let pd = load_partition_dir(dir).map_err(data)?;
    let mut slots: Vec<Option<Triple>> = vec![None; pd.plan.num_triples()];
    for p in 0..pd.store.num_partitions() {
        let sg = pd.store.load(p).map_err(data)?;
        for (local, t) in sg.graph.triples().into_iter().enumerate() {
            let gid = sg.triple_to_global(TripleId(local as u32));
            let slot = slots.get_mut(gid.index()).ok_or_else(|| {
                Failure::Data(format!("shard {p} names triple {gid} out of range"))
            })?;
            *slot = Some(Triple {
                subject: sg.entity_map[t.subject.index()],
                relation: t.relation,
                object: sg.entity_map[t.object.index()],
            });
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| Failure::Data(format!("no shard holds triple {i}"))))
        .collect()
}

fn cmd_scale(dir: &Path, cfg: &ScalingConfig, format: Format) -> CliResult {
    let pd = load_partition_dir(dir).map_err(data)?;
    let mut pg =
        PartitionedGraph::new(pd.plan, Box::new(pd.store), cfg.base_cache).map_err(data)?;
    let rows = bench::run_scaling_suite(&mut pg, cfg).map_err(data)?;
    let rows: Vec<bench::BenchRow> = rows.into_iter().map(|r| r.row).collect();
    print_rows(&rows, format, Some("qt_ms is mean wall time per query"));
    Ok(())
}

fn fmt_jaccard(j: f64) -> String {
    if j == 1.0 {
        "1.0".into()
    } else {
        format!("{j:.6}")
    }
}

fn cmd_verify(
    graph_dir: &Path,
    partitioned: Option<&Path>,
    queries: usize,
    seed: u64,
    max_hops: usize,
    cache: usize,
) -> CliResult {
    let gd = load_graph_dir(graph_dir).map_err(data)?;
    let g = &gd.graph;
    let triples = g.triples();
    let mut pg = match partitioned {
        Some(dir) => {
            let pd = load_partition_dir(dir).map_err(data)?;
            if pd.plan.num_entities() != g.num_entities()
                || pd.plan.num_triples() != g.num_triples()
            {
                return Err(Failure::Data(
                    "partition directory does not match the graph".into(),
                ));
            }
            Some(PartitionedGraph::new(pd.plan, Box::new(pd.store), cache).map_err(data)?)
        }
        None => None,
    };
    let mut failures = 0usize;
    let mut r = synth::rng(seed);
    let workload = synth::random_queries(g.num_entities(), queries, 1..=20, max_hops, &mut r);
    for semantics in HopSemantics::ALL {
        if semantics == HopSemantics::ExactWalk && g.num_entities() > WALK_ORACLE_MAX_ENTITIES {
            eprintln!(
                "note: exact-walk checked against the single graph only (walk oracle limited to {WALK_ORACLE_MAX_ENTITIES} entities)"
            );
        }
        for k in 1..=max_hops {
            let mut worst_single = 1.0f64;
            let mut worst_part = 1.0f64;
            for q in &workload {
                let single = k_hop(&q.seeds, k, g, semantics).map_err(data)?;
                let expected =
                    expected_frontiers(&q.seeds, k, &triples, g.num_entities(), semantics).ok();
                if let Some(exp) = &expected {
                    for h in 1..=k {
                        worst_single = worst_single.min(jaccard(single.frontier(h), &exp[h - 1]));
                    }
                }
                if let Some(pg) = pg.as_mut() {
                    let part = pg.cross_graph_k_hop(&q.seeds, k, semantics).map_err(data)?;
                    for h in 1..=k {
                        let reference = match &expected {
                            Some(exp) => &exp[h - 1],
                            None => single.frontier(h),
                        };
                        worst_part = worst_part.min(jaccard(part.frontier(h), reference));
                    }
                }
            }
            let single_checked = semantics != HopSemantics::ExactWalk
                || g.num_entities() <= WALK_ORACLE_MAX_ENTITIES;
            if single_checked {
                println!(
                    "target=single semantics={semantics} k={k} queries={} jaccard={}",
                    workload.len(),
                    fmt_jaccard(worst_single)
                );
                failures += usize::from(worst_single < 1.0);
            }
            if pg.is_some() {
                println!(
                    "target=partitioned semantics={semantics} k={k} queries={} jaccard={}",
                    workload.len(),
                    fmt_jaccard(worst_part)
                );
                failures += usize::from(worst_part < 1.0);
            }
        }
    }
    if failures > 0 {
        return Err(Failure::Verify(format!(
            "{failures} rows below jaccard 1.0"
        )));
    }
    Ok(())
}

fn cmd_generate(
    kind: Kind,
    entities: usize,
    edges: usize,
    relations: usize,
    seed: u64,
    out: &Path,
) -> CliResult {
    if entities == 0 || relations == 0 || edges == 0 {
        return Err(Failure::Usage(
            "entities, edges and relations must be positive".into(),
        ));
    }
    let kind = match kind {
        Kind::Er => GraphKind::ErdosRenyi,
        Kind::Powerlaw => GraphKind::PowerLaw,
        Kind::Expander => GraphKind::Expander,
    };
    let triples = synth::generate(kind, entities, relations, edges, &mut synth::rng(seed));
    let store = synth::labelled(triples, entities, relations);
    let file = fs::File::create(out).map_err(|e| data(format!("{}: {e}", out.display())))?;
    store.write_tsv(io::BufWriter::new(file)).map_err(data)?;
    eprintln!("wrote {} triples to {}", store.num_triples(), out.display());
    Ok(())
}
