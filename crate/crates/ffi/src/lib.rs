//! C ABI over the kghop engine.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `*_free`. Every fallible call returns a `KgStatus`; on failure the message
//! is kept per thread and readable through `kg_last_error_message`.
//! Panics never cross the boundary; they surface as `KG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use kghop::archive::{load_graph_dir, load_partition_dir};
use kghop::{
    k_hop, Dictionary, EntityId, EntityVector, HopSemantics, HopTrace, IncidenceGraph,
    PartitionedGraph,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotFound = 3,
    Format = 4,
    Query = 5,
    Engine = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgSemantics {
    ExactWalk = 0,
    Frontier = 1,
    Cumulative = 2,
}

impl From<KgSemantics> for HopSemantics {
    fn from(s: KgSemantics) -> Self {
        match s {
            KgSemantics::ExactWalk => HopSemantics::ExactWalk,
            KgSemantics::Frontier => HopSemantics::Frontier,
            KgSemantics::Cumulative => HopSemantics::Cumulative,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KgCacheCounters {
    pub hits: u64,
    pub misses: u64,
    pub loads: u64,
    pub evictions: u64,
}

/// A graph held whole in memory.
pub struct KgGraph {
    graph: IncidenceGraph,
    entities: Dictionary,
}

/// A sharded graph behind an LRU subgraph cache.
pub struct KgPartitioned {
    graph: PartitionedGraph,
    entities: Dictionary,
}

/// Per-hop entity sets of one query, as sorted entity ids.
pub struct KgResult {
    hops: Vec<Vec<u32>>,
}

impl From<HopTrace> for KgResult {
    fn from(t: HopTrace) -> Self {
        KgResult {
            hops: t
                .hops
                .into_iter()
                .map(|s| s.frontier.iter().map(|e| e.0).collect())
                .collect(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(KgStatus, String);

fn fail<E: std::fmt::Display>(status: KgStatus) -> impl FnOnce(E) -> Fail {
    move |e| Fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KgStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            KgStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    Ok(PathBuf::from(str_arg(p)?))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(KgStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(fail(KgStatus::InvalidArgument))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(KgStatus::NullPointer, format!("null {what}")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(KgStatus::NullPointer, format!("null {what}")))
}

unsafe fn seeds_arg(seeds: *const u32, len: usize) -> Result<EntityVector, Fail> {
    if len == 0 {
        return Ok(EntityVector::new());
    }
    if seeds.is_null() {
        return Err(Fail(KgStatus::NullPointer, "null seed array".into()));
    }
    let ids = std::slice::from_raw_parts(seeds, len);
    Ok(EntityVector::from_ids(ids.iter().map(|&i| EntityId(i))))
}

fn lookup(dict: &Dictionary, label: &str) -> Result<u32, Fail> {
    dict.get(label)
        .ok_or_else(|| Fail(KgStatus::NotFound, format!("unknown entity {label:?}")))
}

/// Message for the most recent failure on this thread, or NULL after a
/// success. Valid until the next kghop call on the same thread.
#[no_mangle]
pub extern "C" fn kg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn kg_status_name(status: KgStatus) -> *const c_char {
    let s: &'static CStr = match status {
        KgStatus::Ok => c"ok",
        KgStatus::NullPointer => c"null pointer",
        KgStatus::InvalidArgument => c"invalid argument",
        KgStatus::NotFound => c"not found",
        KgStatus::Format => c"format error",
        KgStatus::Query => c"query error",
        KgStatus::Engine => c"engine error",
        KgStatus::BufferTooSmall => c"buffer too small",
        KgStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Opens a graph directory written by `kghop build`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_graph_open(dir: *const c_char, out: *mut *mut KgGraph) -> KgStatus {
    guard(|| {
        let out = out_arg(out, "output handle")?;
        *out = ptr::null_mut();
        let gd = load_graph_dir(&path_arg(dir)?).map_err(fail(KgStatus::Format))?;
        *out = Box::into_raw(Box::new(KgGraph {
            graph: gd.graph,
            entities: gd.entities,
        }));
        Ok(())
    })
}

/// # Safety
/// `g` must be NULL or a handle from `kg_graph_open` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kg_graph_free(g: *mut KgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle; each non-NULL output must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_graph_counts(
    g: *const KgGraph,
    num_entities: *mut u64,
    num_relations: *mut u64,
    num_triples: *mut u64,
) -> KgStatus {
    guard(|| {
        let g = &ref_arg(g, "graph")?.graph;
        if let Some(p) = num_entities.as_mut() {
            *p = g.num_entities() as u64;
        }
        if let Some(p) = num_relations.as_mut() {
            *p = g.num_relations() as u64;
        }
        if let Some(p) = num_triples.as_mut() {
            *p = g.num_triples() as u64;
        }
        Ok(())
    })
}

/// Resolves an entity label to its id.
///
/// # Safety
/// `g` must be a live handle, `label` NUL-terminated, `id` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_graph_entity_id(
    g: *const KgGraph,
    label: *const c_char,
    id: *mut u32,
) -> KgStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        let id = out_arg(id, "id output")?;
        *id = lookup(&g.entities, str_arg(label)?)?;
        Ok(())
    })
}

/// Copies the label of entity `id` into `buf` with a trailing NUL.
/// `needed` receives the buffer size required, NUL included, even when the
/// call fails with `KG_STATUS_BUFFER_TOO_SMALL`.
///
/// # Safety
/// `g` must be a live handle; `buf` must hold `cap` bytes or be NULL with
/// `cap == 0`; `needed` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn kg_graph_entity_label(
    g: *const KgGraph,
    id: u32,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> KgStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        let label = g
            .entities
            .label(id)
            .ok_or_else(|| Fail(KgStatus::NotFound, format!("no entity with id {id}")))?;
        let n = label.len() + 1;
        if let Some(p) = needed.as_mut() {
            *p = n;
        }
        if cap < n || buf.is_null() {
            return Err(Fail(
                KgStatus::BufferTooSmall,
                format!("label needs {n} bytes, buffer has {cap}"),
            ));
        }
        ptr::copy_nonoverlapping(label.as_ptr(), buf.cast::<u8>(), label.len());
        *buf.add(label.len()) = 0;
        Ok(())
    })
}

/// Runs a k-hop query from `seeds` on the whole graph.
///
/// # Safety
/// `g` must be a live handle, `seeds` must point to `num_seeds` ids (or be
/// NULL when `num_seeds == 0`), and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_query(
    g: *const KgGraph,
    seeds: *const u32,
    num_seeds: usize,
    hops: u32,
    semantics: KgSemantics,
    out: *mut *mut KgResult,
) -> KgStatus {
    guard(|| {
        let out = out_arg(out, "output handle")?;
        *out = ptr::null_mut();
        let g = ref_arg(g, "graph")?;
        let seeds = seeds_arg(seeds, num_seeds)?;
        let trace = k_hop(&seeds, hops as usize, &g.graph, semantics.into())
            .map_err(fail(KgStatus::Query))?;
        *out = Box::into_raw(Box::new(KgResult::from(trace)));
        Ok(())
    })
}

/// Opens a partition directory written by `kghop partition`, with an LRU
/// cache of `cache_capacity` subgraphs.
///
/// # Safety
/// `dir` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_partitioned_open(
    dir: *const c_char,
    cache_capacity: usize,
    out: *mut *mut KgPartitioned,
) -> KgStatus {
    guard(|| {
        let out = out_arg(out, "output handle")?;
        *out = ptr::null_mut();
        let pd = load_partition_dir(&path_arg(dir)?).map_err(fail(KgStatus::Format))?;
        let graph = PartitionedGraph::new(pd.plan, Box::new(pd.store), cache_capacity)
            .map_err(fail(KgStatus::InvalidArgument))?;
        *out = Box::into_raw(Box::new(KgPartitioned {
            graph,
            entities: pd.entities,
        }));
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a handle from `kg_partitioned_open` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kg_partitioned_free(p: *mut KgPartitioned) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle, `label` NUL-terminated, `id` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_partitioned_entity_id(
    p: *const KgPartitioned,
    label: *const c_char,
    id: *mut u32,
) -> KgStatus {
    guard(|| {
        let p = ref_arg(p, "partitioned graph")?;
        let id = out_arg(id, "id output")?;
        *id = lookup(&p.entities, str_arg(label)?)?;
        Ok(())
    })
}

/// Runs a k-hop query across shards. The handle's cache state persists
/// between calls; a handle must not be used from two threads at once.
///
/// # Safety
/// As for `kg_query`, with `p` a live partitioned handle.
#[no_mangle]
pub unsafe extern "C" fn kg_partitioned_query(
    p: *mut KgPartitioned,
    seeds: *const u32,
    num_seeds: usize,
    hops: u32,
    semantics: KgSemantics,
    out: *mut *mut KgResult,
) -> KgStatus {
    guard(|| {
        let out = out_arg(out, "output handle")?;
        *out = ptr::null_mut();
        let p = out_arg(p, "partitioned graph")?;
        let seeds = seeds_arg(seeds, num_seeds)?;
        let trace = p
            .graph
            .cross_graph_k_hop(&seeds, hops as usize, semantics.into())
            .map_err(|e| match e {
                kghop::EngineError::Query(q) => Fail(KgStatus::Query, q.to_string()),
                other => Fail(KgStatus::Engine, other.to_string()),
            })?;
        *out = Box::into_raw(Box::new(KgResult::from(trace)));
        Ok(())
    })
}

/// Cumulative cache counters since open or the last reset.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_partitioned_cache_counters(
    p: *const KgPartitioned,
    out: *mut KgCacheCounters,
) -> KgStatus {
    guard(|| {
        let c = ref_arg(p, "partitioned graph")?.graph.counters();
        *out_arg(out, "counters output")? = KgCacheCounters {
            hits: c.hits,
            misses: c.misses,
            loads: c.loads,
            evictions: c.evictions,
        };
        Ok(())
    })
}

/// Replaces the cache with an empty one of `capacity` subgraphs and zeroes
/// its counters.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kg_partitioned_reset_cache(
    p: *mut KgPartitioned,
    capacity: usize,
) -> KgStatus {
    guard(|| {
        out_arg(p, "partitioned graph")?
            .graph
            .reset_cache(capacity)
            .map_err(fail(KgStatus::InvalidArgument))
    })
}

/// Number of hops in the result.
///
/// # Safety
/// `r` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn kg_result_hops(r: *const KgResult) -> usize {
    r.as_ref().map_or(0, |r| r.hops.len())
}

/// Borrows the sorted entity ids reached at `hop` (1-based). The pointer is
/// valid until `kg_result_free`; it may be NULL when `len` is 0.
///
/// # Safety
/// `r` must be a live result; `ids` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_result_entities(
    r: *const KgResult,
    hop: usize,
    ids: *mut *const u32,
    len: *mut usize,
) -> KgStatus {
    guard(|| {
        let r = ref_arg(r, "result")?;
        let ids = out_arg(ids, "ids output")?;
        let len = out_arg(len, "length output")?;
        let layer = hop
            .checked_sub(1)
            .and_then(|h| r.hops.get(h))
            .ok_or_else(|| {
                Fail(
                    KgStatus::InvalidArgument,
                    format!("hop {hop} outside 1..={}", r.hops.len()),
                )
            })?;
        *ids = if layer.is_empty() {
            ptr::null()
        } else {
            layer.as_ptr()
        };
        *len = layer.len();
        Ok(())
    })
}

/// # Safety
/// `r` must be NULL or a result not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kg_result_free(r: *mut KgResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
