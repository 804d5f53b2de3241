//! Binary archives for graphs, shards and partition plans, plus directory layouts.
//!
//! Every archive is little-endian and ends with a CRC-32 of all preceding
//! bytes. Graph archive layout:
//!
//! ```text
//! 0   magic "LKG1"
//! 4   version        u16
//! 6   endianness     u8   (0 = little)
//! 7   id width       u8   (4 or 8 bytes)
//! 8   |E| |R| |T|    u64 x3
//! 32  sub offsets    u64 x (|E|+1)
//!     sub columns    id  x |T|
//!     objects        id  x |T|
//!     relations      id  x |T|
//!     crc32          u32
//! ```
//!
//! Shards (`LKS1`) carry their local→global entity and triple maps followed by
//! an embedded graph archive. Plans (`LKP1`) store the subject→partition map
//! with an all-ones sentinel for entities that own no partition.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, SubgraphStore};
use crate::incidence::{GraphError, IncidenceGraph};
use crate::kg::{Dictionary, EntityId, RelationId, TripleId};
use crate::partition::{PartitionPlan, Subgraph};

pub const GRAPH_MAGIC: [u8; 4] = *b"LKG1";
pub const SHARD_MAGIC: [u8; 4] = *b"LKS1";
pub const PLAN_MAGIC: [u8; 4] = *b"LKP1";
pub const FORMAT_VERSION: u16 = 1;
const LITTLE_ENDIAN: u8 = 0;
const HEADER_LEN: usize = 8;
const CRC_LEN: usize = 4;

pub const GRAPH_FILE: &str = "graph.lkg";
pub const ENTITIES_FILE: &str = "entities.txt";
pub const RELATIONS_FILE: &str = "relations.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLAN_FILE: &str = "assignment.lkp";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad magic: expected {expected:?}, read {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {found} (this build reads {FORMAT_VERSION})")]
    Version { found: u16 },
    #[error("unsupported endianness flag {0}")]
    Endianness(u8),
    #[error("unsupported id width {0}")]
    IdWidth(u8),
    #[error("truncated archive: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{extra} unexpected trailing bytes")]
    TrailingBytes { extra: usize },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("id {0} does not fit in memory ids")]
    IdTooWide(u64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("inconsistent archive: {0}")]
    Inconsistent(String),
    #[error("manifest: {0}")]
    Manifest(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Byte width of ids written to an archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdWidth {
    U32,
    U64,
}

impl IdWidth {
    /// Narrowest width that can hold every value below `max_count`, and the all-ones sentinel.
    pub fn for_count(max_count: usize) -> Self {
        if (max_count as u64) < u32::MAX as u64 {
            IdWidth::U32
        } else {
            IdWidth::U64
        }
    }

    fn bytes(self) -> usize {
        match self {
            IdWidth::U32 => 4,
            IdWidth::U64 => 8,
        }
    }

    fn from_byte(b: u8) -> Result<Self, FormatError> {
        match b {
            4 => Ok(IdWidth::U32),
            8 => Ok(IdWidth::U64),
            other => Err(FormatError::IdWidth(other)),
        }
    }

    fn sentinel(self) -> u64 {
        match self {
            IdWidth::U32 => u32::MAX as u64,
            IdWidth::U64 => u64::MAX,
        }
    }
}

struct Encoder {
    buf: Vec<u8>,
    width: IdWidth,
}

impl Encoder {
    fn new(magic: [u8; 4], width: IdWidth) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(&magic);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.push(LITTLE_ENDIAN);
        buf.push(width.bytes() as u8);
        Self { buf, width }
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn id(&mut self, v: u64) {
        match self.width {
            IdWidth::U32 => self.buf.extend_from_slice(&(v as u32).to_le_bytes()),
            IdWidth::U64 => self.u64(v),
        }
    }

    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
    width: IdWidth,
}

impl<'a> Decoder<'a> {
    /// Validates the fixed header; the checksum is verified separately once
    /// the expected length is known.
    fn open(data: &'a [u8], magic: [u8; 4]) -> Result<Self, FormatError> {
        if data.len() < 4 {
            return Err(FormatError::Truncated {
                expected: HEADER_LEN + CRC_LEN,
                actual: data.len(),
            });
        }
        if data[..4] != magic {
            return Err(FormatError::BadMagic {
                expected: String::from_utf8_lossy(&magic).into_owned(),
                found: String::from_utf8_lossy(&data[..4]).into_owned(),
            });
        }
        if data.len() < HEADER_LEN + CRC_LEN {
            return Err(FormatError::Truncated {
                expected: HEADER_LEN + CRC_LEN,
                actual: data.len(),
            });
        }
        let version = u16::from_le_bytes([data[4], data[5]]);
        if version != FORMAT_VERSION {
            return Err(FormatError::Version { found: version });
        }
        if data[6] != LITTLE_ENDIAN {
            return Err(FormatError::Endianness(data[6]));
        }
        let width = IdWidth::from_byte(data[7])?;
        Ok(Self {
            data,
            pos: HEADER_LEN,
            width,
        })
    }

    fn need(&self, n: usize) -> Result<(), FormatError> {
        match self.pos.checked_add(n) {
            Some(end) if end + CRC_LEN <= self.data.len() => Ok(()),
            _ => Err(FormatError::Truncated {
                expected: self.pos.saturating_add(n).saturating_add(CRC_LEN),
                actual: self.data.len(),
            }),
        }
    }

    /// Checks that `remaining` more payload bytes plus the CRC make up exactly the
    /// rest of the input, then verifies the CRC.
    fn expect_remaining(&self, remaining: u128) -> Result<(), FormatError> {
        let expected = self.pos as u128 + remaining + CRC_LEN as u128;
        let actual = self.data.len() as u128;
        if actual < expected {
            return Err(FormatError::Truncated {
                expected: expected.min(usize::MAX as u128) as usize,
                actual: self.data.len(),
            });
        }
        if actual > expected {
            return Err(FormatError::TrailingBytes {
                extra: (actual - expected) as usize,
            });
        }
        let body = &self.data[..self.data.len() - CRC_LEN];
        let stored = u32::from_le_bytes(self.data[self.data.len() - CRC_LEN..].try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(FormatError::Checksum { stored, computed });
        }
        Ok(())
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        self.need(8)?;
        let v = u64::from_le_bytes(self.data[self.pos..self.pos + 8].try_into().unwrap());
        self.pos += 8;
        Ok(v)
    }

    fn id(&mut self) -> Result<u64, FormatError> {
        match self.width {
            IdWidth::U32 => {
                self.need(4)?;
                let v = u32::from_le_bytes(self.data[self.pos..self.pos + 4].try_into().unwrap());
                self.pos += 4;
                Ok(v as u64)
            }
            IdWidth::U64 => self.u64(),
        }
    }

    fn id32(&mut self) -> Result<u32, FormatError> {
        let v = self.id()?;
        u32::try_from(v).map_err(|_| FormatError::IdTooWide(v))
    }

    fn ids32(&mut self, n: usize) -> Result<Vec<u32>, FormatError> {
        self.need(n.saturating_mul(self.width.bytes()))?;
        (0..n).map(|_| self.id32()).collect()
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        self.need(n)?;
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

fn count(v: u64) -> Result<usize, FormatError> {
    if v > u32::MAX as u64 {
        return Err(FormatError::IdTooWide(v));
    }
    Ok(v as usize)
}

/// Serializes `g` with the narrowest id width its counts allow.
pub fn encode_graph(g: &IncidenceGraph) -> Vec<u8> {
    let widest = g.num_entities().max(g.num_relations()).max(g.num_triples());
    encode_graph_with(g, IdWidth::for_count(widest))
}

pub fn encode_graph_with(g: &IncidenceGraph, width: IdWidth) -> Vec<u8> {
    let mut enc = Encoder::new(GRAPH_MAGIC, width);
    enc.u64(g.num_entities() as u64);
    enc.u64(g.num_relations() as u64);
    enc.u64(g.num_triples() as u64);
    for &o in g.sub_offsets() {
        enc.u64(o as u64);
    }
    for t in g.sub_cols() {
        enc.id(t.0 as u64);
    }
    for e in g.objects() {
        enc.id(e.0 as u64);
    }
    for r in g.relations() {
        enc.id(r.0 as u64);
    }
    enc.finish()
}

pub fn decode_graph(data: &[u8]) -> Result<IncidenceGraph, FormatError> {
    let mut dec = Decoder::open(data, GRAPH_MAGIC)?;
    dec.need(24)?;
    let (ne, nr, nt) = (dec.u64()?, dec.u64()?, dec.u64()?);
    let payload = (ne as u128 + 1) * 8 + 3 * nt as u128 * dec.width.bytes() as u128;
    dec.expect_remaining(payload)?;
    let (ne, nr, nt) = (count(ne)?, count(nr)?, count(nt)?);
    let offsets = (0..=ne)
        .map(|_| dec.u64().map(|v| v as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let cols = dec.ids32(nt)?.into_iter().map(TripleId).collect();
    let obj = dec.ids32(nt)?.into_iter().map(EntityId).collect();
    let rel = dec.ids32(nt)?.into_iter().map(RelationId).collect();
    Ok(IncidenceGraph::from_parts(ne, nr, offsets, cols, obj, rel)?)
}

pub fn encode_subgraph(s: &Subgraph) -> Vec<u8> {
    let graph = encode_graph(&s.graph);
    let widest = s
        .entity_map
        .last()
        .map(|e| e.index() + 1)
        .unwrap_or(0)
        .max(s.triple_map.last().map(|t| t.index() + 1).unwrap_or(0));
    let mut enc = Encoder::new(SHARD_MAGIC, IdWidth::for_count(widest));
    enc.u64(s.index as u64);
    enc.u64(s.entity_map.len() as u64);
    enc.u64(s.triple_map.len() as u64);
    for e in &s.entity_map {
        enc.id(e.0 as u64);
    }
    for t in &s.triple_map {
        enc.id(t.0 as u64);
    }
    enc.u64(graph.len() as u64);
    enc.bytes(&graph);
    enc.finish()
}

pub fn decode_subgraph(data: &[u8]) -> Result<Subgraph, FormatError> {
    let mut dec = Decoder::open(data, SHARD_MAGIC)?;
    dec.need(24)?;
    let (index, ne, nt) = (dec.u64()?, dec.u64()?, dec.u64()?);
    let maps = (ne as u128 + nt as u128) * dec.width.bytes() as u128;
    if dec.pos as u128 + maps + 8 + CRC_LEN as u128 > data.len() as u128 {
        return Err(FormatError::Truncated {
            expected: (dec.pos as u128 + maps + 8 + CRC_LEN as u128).min(usize::MAX as u128)
                as usize,
            actual: data.len(),
        });
    }
    let graph_len_at = dec.pos + maps as usize;
    let graph_len = u64::from_le_bytes(data[graph_len_at..graph_len_at + 8].try_into().unwrap());
    dec.expect_remaining(maps + 8 + graph_len as u128)?;
    let entity_map: Vec<EntityId> = dec.ids32(count(ne)?)?.into_iter().map(EntityId).collect();
    let triple_map: Vec<TripleId> = dec.ids32(count(nt)?)?.into_iter().map(TripleId).collect();
    dec.u64()?;
    let graph = decode_graph(dec.bytes(graph_len as usize)?)?;
    if graph.num_entities() != entity_map.len() || graph.num_triples() != triple_map.len() {
        return Err(FormatError::Inconsistent(
            "shard maps do not match embedded graph".into(),
        ));
    }
    if entity_map.windows(2).any(|w| w[0] >= w[1]) || triple_map.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FormatError::Inconsistent(
            "shard maps are not strictly increasing".into(),
        ));
    }
    Ok(Subgraph {
        index: count(index)?,
        graph,
        entity_map,
        triple_map,
    })
}

pub fn encode_plan(plan: &PartitionPlan) -> Vec<u8> {
    let width = IdWidth::for_count(plan.m.max(plan.num_entities()));
    let mut enc = Encoder::new(PLAN_MAGIC, width);
    enc.u64(plan.m as u64);
    enc.u64(plan.num_entities() as u64);
    for p in &plan.assignment {
        enc.id(p.map(|p| p as u64).unwrap_or(width.sentinel()));
    }
    for &l in &plan.loads {
        enc.u64(l as u64);
    }
    enc.finish()
}

pub fn decode_plan(data: &[u8]) -> Result<PartitionPlan, FormatError> {
    let mut dec = Decoder::open(data, PLAN_MAGIC)?;
    dec.need(16)?;
    let (m, ne) = (dec.u64()?, dec.u64()?);
    dec.expect_remaining(ne as u128 * dec.width.bytes() as u128 + m as u128 * 8)?;
    let (m, ne) = (count(m)?, count(ne)?);
    let sentinel = dec.width.sentinel();
    let mut assignment = Vec::with_capacity(ne);
    for _ in 0..ne {
        let v = dec.id()?;
        if v == sentinel {
            assignment.push(None);
        } else if v < m as u64 {
            assignment.push(Some(v as u32));
        } else {
            return Err(FormatError::Inconsistent(format!(
                "partition {v} out of range for m={m}"
            )));
        }
    }
    let loads = (0..m)
        .map(|_| dec.u64().map(|v| v as usize))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PartitionPlan {
        m,
        assignment,
        loads,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(io_err(path))
}

pub fn save_graph(g: &IncidenceGraph, path: &Path) -> Result<(), FormatError> {
    write_file(path, &encode_graph(g))
}

pub fn load_graph(path: &Path) -> Result<IncidenceGraph, FormatError> {
    decode_graph(&read_file(path)?)
}

/// One label per line; line index is the id.
pub fn save_dictionary(dict: &Dictionary, path: &Path) -> Result<(), FormatError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for label in dict.labels() {
        if label.contains('\n') {
            return Err(FormatError::Inconsistent(format!(
                "label {label:?} contains a newline"
            )));
        }
        writeln!(out, "{label}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn load_dictionary(path: &Path) -> Result<Dictionary, FormatError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let labels = BufReader::new(file)
        .lines()
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err(path))?;
    Dictionary::from_labels(labels)
        .map_err(|l| FormatError::Inconsistent(format!("{}: repeated label {l:?}", path.display())))
}

/// A built graph directory: archive plus both dictionaries.
#[derive(Debug, Clone)]
pub struct GraphDir {
    pub graph: IncidenceGraph,
    pub entities: Dictionary,
    pub relations: Dictionary,
}

pub fn save_graph_dir(
    dir: &Path,
    graph: &IncidenceGraph,
    entities: &Dictionary,
    relations: &Dictionary,
) -> Result<(), FormatError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    save_graph(graph, &dir.join(GRAPH_FILE))?;
    save_dictionary(entities, &dir.join(ENTITIES_FILE))?;
    save_dictionary(relations, &dir.join(RELATIONS_FILE))
}

pub fn load_graph_dir(dir: &Path) -> Result<GraphDir, FormatError> {
    let graph = load_graph(&dir.join(GRAPH_FILE))?;
    let entities = load_dictionary(&dir.join(ENTITIES_FILE))?;
    let relations = load_dictionary(&dir.join(RELATIONS_FILE))?;
    if entities.len() != graph.num_entities() || relations.len() != graph.num_relations() {
        return Err(FormatError::Inconsistent(format!(
            "dictionaries ({} entities, {} relations) do not match graph ({}, {})",
            entities.len(),
            relations.len(),
            graph.num_entities(),
            graph.num_relations()
        )));
    }
    Ok(GraphDir {
        graph,
        entities,
        relations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub index: usize,
    pub file: String,
    pub triples: usize,
}

/// `manifest.json` of a partition directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub version: u16,
    pub strategy: String,
    pub m: usize,
    pub num_entities: usize,
    pub num_relations: usize,
    pub num_triples: usize,
    pub assignment: String,
    pub entities: String,
    pub relations: String,
    pub partitions: Vec<ShardEntry>,
}

impl PartitionManifest {
    fn validate(&self, plan: &PartitionPlan) -> Result<(), FormatError> {
        let bad = |m: String| Err(FormatError::Manifest(m));
        if self.version != FORMAT_VERSION {
            return Err(FormatError::Version {
                found: self.version,
            });
        }
        if self.partitions.len() != self.m || plan.m != self.m {
            return bad(format!(
                "m={} but {} shard entries and plan m={}",
                self.m,
                self.partitions.len(),
                plan.m
            ));
        }
        if plan.num_entities() != self.num_entities {
            return bad("plan entity count differs from manifest".into());
        }
        let total: usize = self.partitions.iter().map(|p| p.triples).sum();
        if total != self.num_triples {
            return bad(format!(
                "shard triple counts sum to {total}, expected {}",
                self.num_triples
            ));
        }
        for (i, p) in self.partitions.iter().enumerate() {
            if p.index != i || plan.loads[i] != p.triples {
                return bad(format!("shard entry {i} disagrees with the plan"));
            }
            if p.file.contains('/') || p.file.contains('\\') || p.file.contains("..") {
                return bad(format!("shard file name {:?} is not a plain name", p.file));
            }
        }
        Ok(())
    }
}

pub fn shard_file_name(index: usize) -> String {
    format!("part-{index:05}.lks")
}

/// Writes plan, shards, dictionaries and manifest into `dir`.
pub fn save_partition_dir(
    dir: &Path,
    strategy: &str,
    plan: &PartitionPlan,
    shards: &[Subgraph],
    entities: &Dictionary,
    relations: &Dictionary,
) -> Result<PartitionManifest, FormatError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join(PLAN_FILE), &encode_plan(plan))?;
    let mut partitions = Vec::with_capacity(shards.len());
    for s in shards {
        let file = shard_file_name(s.index);
        write_file(&dir.join(&file), &encode_subgraph(s))?;
        partitions.push(ShardEntry {
            index: s.index,
            file,
            triples: s.num_triples(),
        });
    }
    save_dictionary(entities, &dir.join(ENTITIES_FILE))?;
    save_dictionary(relations, &dir.join(RELATIONS_FILE))?;
    let manifest = PartitionManifest {
        version: FORMAT_VERSION,
        strategy: strategy.to_owned(),
        m: plan.m,
        num_entities: plan.num_entities(),
        num_relations: relations.len(),
        num_triples: plan.num_triples(),
        assignment: PLAN_FILE.to_owned(),
        entities: ENTITIES_FILE.to_owned(),
        relations: RELATIONS_FILE.to_owned(),
        partitions,
    };
    manifest.validate(plan)?;
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| FormatError::Manifest(e.to_string()))?;
    write_file(&dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}

/// Shards on disk, read one file per load.
#[derive(Debug, Clone)]
pub struct DiskStore {
    dir: PathBuf,
    manifest: PartitionManifest,
}

impl DiskStore {
    pub fn manifest(&self) -> &PartitionManifest {
        &self.manifest
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl SubgraphStore for DiskStore {
    fn num_partitions(&self) -> usize {
        self.manifest.m
    }

    fn load(&self, partition: usize) -> Result<Arc<Subgraph>, EngineError> {
        let entry =
            self.manifest
                .partitions
                .get(partition)
                .ok_or(EngineError::MissingPartition {
                    partition,
                    available: self.manifest.m,
                })?;
        let load_err = |message: String| EngineError::Load { partition, message };
        let bytes = read_file(&self.dir.join(&entry.file)).map_err(|e| load_err(e.to_string()))?;
        let shard = decode_subgraph(&bytes).map_err(|e| load_err(e.to_string()))?;
        if shard.index != partition || shard.num_triples() != entry.triples {
            return Err(EngineError::Integrity {
                partition,
                message: format!("file {} holds a different shard", entry.file),
            });
        }
        Ok(Arc::new(shard))
    }
}

/// A partition directory opened for querying.
#[derive(Debug, Clone)]
pub struct PartitionDir {
    pub plan: PartitionPlan,
    pub store: DiskStore,
    pub entities: Dictionary,
    pub relations: Dictionary,
}

pub fn load_partition_dir(dir: &Path) -> Result<PartitionDir, FormatError> {
    let path = dir.join(MANIFEST_FILE);
    let manifest: PartitionManifest = serde_json::from_slice(&read_file(&path)?)
        .map_err(|e| FormatError::Manifest(e.to_string()))?;
    let plan = decode_plan(&read_file(&dir.join(&manifest.assignment))?)?;
    manifest.validate(&plan)?;
    let entities = load_dictionary(&dir.join(&manifest.entities))?;
    let relations = load_dictionary(&dir.join(&manifest.relations))?;
    if entities.len() != manifest.num_entities || relations.len() != manifest.num_relations {
        return Err(FormatError::Manifest(
            "dictionary sizes differ from manifest".into(),
        ));
    }
    Ok(PartitionDir {
        plan,
        store: DiskStore {
            dir: dir.to_owned(),
            manifest,
        },
        entities,
        relations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incidence::tests::tiny;
    use crate::kg::Triple;
    use crate::partition::{materialize_subgraphs, partition_degree_aware};

    #[test]
    fn graph_round_trip_is_byte_identical() {
        let g = tiny();
        let bytes = encode_graph(&g);
        let back = decode_graph(&bytes).unwrap();
        assert_eq!(back, g);
        assert_eq!(encode_graph(&back), bytes);
        assert_eq!(&bytes[..4], b"LKG1");
        assert_eq!(bytes[7], 4);
    }

    #[test]
    fn wide_ids_decode_to_same_graph() {
        let g = tiny();
        let wide = encode_graph_with(&g, IdWidth::U64);
        assert_eq!(wide[7], 8);
        assert_eq!(decode_graph(&wide).unwrap(), g);
        assert!(wide.len() > encode_graph(&g).len());
    }

    #[test]
    fn distinct_errors() {
        let bytes = encode_graph(&tiny());

        let mut bad = bytes.clone();
        bad[0] = b'X';
        let err = decode_graph(&bad).unwrap_err();
        assert!(matches!(err, FormatError::BadMagic { .. }));
        assert!(err.to_string().contains("XKG1"));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(
            decode_graph(&bad),
            Err(FormatError::Version { found: 9 })
        ));

        let mut bad = bytes.clone();
        let mid = bad.len() / 2;
        bad[mid] ^= 0x01;
        assert!(matches!(
            decode_graph(&bad),
            Err(FormatError::Checksum { .. })
        ));

        assert!(matches!(
            decode_graph(&bytes[..bytes.len() - 3]),
            Err(FormatError::Truncated { .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            decode_graph(&long),
            Err(FormatError::TrailingBytes { extra: 1 })
        ));
        assert!(matches!(
            decode_graph(&[]),
            Err(FormatError::Truncated { .. })
        ));
    }

    #[test]
    fn shard_and_plan_round_trip() {
        let triples = tiny().triples();
        let plan = partition_degree_aware(&triples, 3, 2).unwrap();
        let shards = materialize_subgraphs(&plan, &triples, 3).unwrap();
        for s in &shards {
            let bytes = encode_subgraph(s);
            assert_eq!(&decode_subgraph(&bytes).unwrap(), s);
        }
        let bytes = encode_plan(&plan);
        assert_eq!(decode_plan(&bytes).unwrap(), plan);

        let mut corrupt = encode_subgraph(&shards[0]);
        let last = corrupt.len() - 10;
        corrupt[last] ^= 0x80;
        assert!(decode_subgraph(&corrupt).is_err());
    }

    #[test]
    fn plan_sentinel_for_object_only() {
        let triples = vec![Triple::new(0, 0, 2), Triple::new(1, 0, 2)];
        let plan = partition_degree_aware(&triples, 3, 2).unwrap();
        assert_eq!(plan.assignment[2], None);
        assert_eq!(decode_plan(&encode_plan(&plan)).unwrap(), plan);
    }

    #[test]
    fn directories_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let g = tiny();
        let ents = Dictionary::from_labels(["A", "B", "C"]).unwrap();
        let rels = Dictionary::from_labels(["r1", "r2", "r3"]).unwrap();
        save_graph_dir(tmp.path(), &g, &ents, &rels).unwrap();
        let loaded = load_graph_dir(tmp.path()).unwrap();
        assert_eq!(loaded.graph, g);
        assert_eq!(loaded.entities, ents);

        let triples = g.triples();
        let plan = partition_degree_aware(&triples, 3, 2).unwrap();
        let shards = materialize_subgraphs(&plan, &triples, 3).unwrap();
        let pdir = tmp.path().join("parts");
        save_partition_dir(&pdir, "lpt", &plan, &shards, &ents, &rels).unwrap();
        let opened = load_partition_dir(&pdir).unwrap();
        assert_eq!(opened.plan, plan);
        assert_eq!(*opened.store.load(1).unwrap(), shards[1]);
        assert!(matches!(
            opened.store.load(5),
            Err(EngineError::MissingPartition { partition: 5, .. })
        ));

        fs::remove_file(pdir.join(shard_file_name(0))).unwrap();
        assert!(matches!(
            opened.store.load(0),
            Err(EngineError::Load { partition: 0, .. })
        ));
    }
}
