use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use kghop::archive::{save_graph_dir, save_partition_dir};
use kghop::synth::{self, GraphKind};
use kghop::{k_hop, materialize_subgraphs, partition_degree_aware, HopSemantics, IncidenceGraph};
use kghop_ffi::*;

const NE: usize = 200;
const NR: usize = 5;

struct Fixture {
    _tmp: tempfile::TempDir,
    graph_dir: PathBuf,
    part_dir: PathBuf,
    graph: IncidenceGraph,
}

fn fixture() -> Fixture {
    let tmp = tempfile::tempdir().unwrap();
    let triples = synth::generate(GraphKind::PowerLaw, NE, NR, 1500, &mut synth::rng(11));
    let store = synth::labelled(triples, NE, NR);
    let graph = IncidenceGraph::build(&store.triples, NE, NR).unwrap();
    let graph_dir = tmp.path().join("g");
    save_graph_dir(&graph_dir, &graph, &store.entities, &store.relations).unwrap();
    let plan = partition_degree_aware(&store.triples, NE, 4).unwrap();
    let shards = materialize_subgraphs(&plan, &store.triples, NR).unwrap();
    let part_dir = tmp.path().join("p");
    save_partition_dir(
        &part_dir,
        "lpt",
        &plan,
        &shards,
        &store.entities,
        &store.relations,
    )
    .unwrap();
    Fixture {
        _tmp: tmp,
        graph_dir,
        part_dir,
        graph,
    }
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = kg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

unsafe fn layers(r: *const KgResult) -> Vec<Vec<u32>> {
    (1..=kg_result_hops(r))
        .map(|h| {
            let mut ids = ptr::null();
            let mut len = 0;
            assert_eq!(kg_result_entities(r, h, &mut ids, &mut len), KgStatus::Ok);
            if len == 0 {
                Vec::new()
            } else {
                std::slice::from_raw_parts(ids, len).to_vec()
            }
        })
        .collect()
}

#[test]
fn single_and_partitioned_agree_with_engine() {
    let fx = fixture();
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            kg_graph_open(cpath(&fx.graph_dir).as_ptr(), &mut g),
            KgStatus::Ok
        );
        let mut p = ptr::null_mut();
        assert_eq!(
            kg_partitioned_open(cpath(&fx.part_dir).as_ptr(), 2, &mut p),
            KgStatus::Ok
        );
        let (mut ne, mut nt) = (0u64, 0u64);
        assert_eq!(
            kg_graph_counts(g, &mut ne, ptr::null_mut(), &mut nt),
            KgStatus::Ok
        );
        assert_eq!(ne as usize, NE);
        assert_eq!(nt as usize, fx.graph.num_triples());

        let queries = synth::random_queries(NE, 10, 1..=5, 3, &mut synth::rng(2));
        for (sem, ksem) in [
            (HopSemantics::ExactWalk, KgSemantics::ExactWalk),
            (HopSemantics::Frontier, KgSemantics::Frontier),
            (HopSemantics::Cumulative, KgSemantics::Cumulative),
        ] {
            for q in &queries {
                let seeds: Vec<u32> = q.seeds.iter().map(|e| e.0).collect();
                let expected: Vec<Vec<u32>> = k_hop(&q.seeds, 3, &fx.graph, sem)
                    .unwrap()
                    .hops
                    .iter()
                    .map(|s| s.frontier.iter().map(|e| e.0).collect())
                    .collect();
                let mut a = ptr::null_mut();
                let mut b = ptr::null_mut();
                assert_eq!(
                    kg_query(g, seeds.as_ptr(), seeds.len(), 3, ksem, &mut a),
                    KgStatus::Ok
                );
                assert_eq!(
                    kg_partitioned_query(p, seeds.as_ptr(), seeds.len(), 3, ksem, &mut b),
                    KgStatus::Ok
                );
                assert_eq!(layers(a), expected);
                assert_eq!(layers(b), expected);
                kg_result_free(a);
                kg_result_free(b);
            }
        }

        let mut c = KgCacheCounters::default();
        assert_eq!(kg_partitioned_cache_counters(p, &mut c), KgStatus::Ok);
        assert!(c.loads >= 1);
        assert_eq!(c.loads, c.misses);
        assert_eq!(kg_partitioned_reset_cache(p, 3), KgStatus::Ok);
        assert_eq!(kg_partitioned_cache_counters(p, &mut c), KgStatus::Ok);
        assert_eq!(c, KgCacheCounters::default());
        assert_eq!(kg_partitioned_reset_cache(p, 0), KgStatus::InvalidArgument);

        kg_partitioned_free(p);
        kg_graph_free(g);
    }
}

#[test]
fn labels_round_trip() {
    let fx = fixture();
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            kg_graph_open(cpath(&fx.graph_dir).as_ptr(), &mut g),
            KgStatus::Ok
        );
        let mut id = 0;
        assert_eq!(
            kg_graph_entity_id(g, c"e42".as_ptr(), &mut id),
            KgStatus::Ok
        );
        assert_eq!(id, 42);
        assert_eq!(
            kg_graph_entity_id(g, c"nope".as_ptr(), &mut id),
            KgStatus::NotFound
        );
        assert!(last_error().contains("nope"));

        let mut needed = 0;
        assert_eq!(
            kg_graph_entity_label(g, 42, ptr::null_mut(), 0, &mut needed),
            KgStatus::BufferTooSmall
        );
        assert_eq!(needed, 4);
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(
            kg_graph_entity_label(g, 42, buf.as_mut_ptr(), buf.len(), &mut needed),
            KgStatus::Ok
        );
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "e42");
        assert_eq!(
            kg_graph_entity_label(g, NE as u32, buf.as_mut_ptr(), buf.len(), ptr::null_mut()),
            KgStatus::NotFound
        );

        let mut p = ptr::null_mut();
        assert_eq!(
            kg_partitioned_open(cpath(&fx.part_dir).as_ptr(), 1, &mut p),
            KgStatus::Ok
        );
        assert_eq!(
            kg_partitioned_entity_id(p, c"e7".as_ptr(), &mut id),
            KgStatus::Ok
        );
        assert_eq!(id, 7);
        kg_partitioned_free(p);
        kg_graph_free(g);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let fx = fixture();
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(kg_graph_open(ptr::null(), &mut g), KgStatus::NullPointer);
        assert!(g.is_null());
        assert_eq!(
            kg_graph_open(c"/definitely/missing".as_ptr(), &mut g),
            KgStatus::Format
        );
        assert!(g.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            kg_graph_open(cpath(&fx.graph_dir).as_ptr(), ptr::null_mut()),
            KgStatus::NullPointer
        );

        let mut p = ptr::null_mut();
        assert_eq!(
            kg_partitioned_open(cpath(&fx.part_dir).as_ptr(), 0, &mut p),
            KgStatus::InvalidArgument
        );
        assert!(p.is_null());

        assert_eq!(
            kg_graph_open(cpath(&fx.graph_dir).as_ptr(), &mut g),
            KgStatus::Ok
        );
        assert!(kg_last_error_message().is_null());
        let mut r = ptr::null_mut();
        let seeds = [0u32];
        assert_eq!(
            kg_query(g, seeds.as_ptr(), 1, 0, KgSemantics::Frontier, &mut r),
            KgStatus::Query
        );
        assert!(r.is_null());
        let bad = [NE as u32];
        assert_eq!(
            kg_query(g, bad.as_ptr(), 1, 1, KgSemantics::Frontier, &mut r),
            KgStatus::Query
        );
        assert!(last_error().contains(&NE.to_string()));
        assert_eq!(
            kg_query(g, ptr::null(), 3, 1, KgSemantics::Frontier, &mut r),
            KgStatus::NullPointer
        );

        assert_eq!(
            kg_query(g, ptr::null(), 0, 2, KgSemantics::Frontier, &mut r),
            KgStatus::Ok
        );
        assert_eq!(kg_result_hops(r), 2);
        let mut ids = ptr::null();
        let mut len = 9;
        assert_eq!(kg_result_entities(r, 1, &mut ids, &mut len), KgStatus::Ok);
        assert_eq!(len, 0);
        assert_eq!(
            kg_result_entities(r, 0, &mut ids, &mut len),
            KgStatus::InvalidArgument
        );
        assert_eq!(
            kg_result_entities(r, 3, &mut ids, &mut len),
            KgStatus::InvalidArgument
        );
        kg_result_free(r);

        assert_eq!(kg_result_hops(ptr::null()), 0);
        kg_result_free(ptr::null_mut());
        kg_graph_free(ptr::null_mut());
        kg_partitioned_free(ptr::null_mut());
        kg_graph_free(g);
    }
}

#[test]
fn status_names_are_static() {
    for s in [KgStatus::Ok, KgStatus::Format, KgStatus::Panic] {
        let name = unsafe { CStr::from_ptr(kg_status_name(s)) };
        assert!(!name.to_bytes().is_empty());
    }
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/kghop.h"))
            .unwrap();
    let src =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}

/// Directory holding the built cdylib, next to the test executable's `deps/`.
fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header_and_library() {
    let lib = lib_dir();
    if !lib.join("libkghop_ffi.so").exists() {
        eprintln!("skipping: no cdylib at {}", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let fx = fixture();
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = fx._tmp.path().join("smoke");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-o"])
        .arg(&exe)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib)
        .arg(format!("-Wl,-rpath,{}", lib.display()))
        .arg("-lkghop_ffi")
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe)
        .arg(&fx.graph_dir)
        .arg(&fx.part_dir)
        .arg("e3")
        .arg("3")
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "smoke exited {:?}\n{stdout}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains(&format!("entities={NE}")));
    assert_eq!(stdout.matches("hop=").count(), 3);
}
