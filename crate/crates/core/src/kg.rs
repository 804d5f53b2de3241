//! Identifiers, label dictionaries and triple ingestion.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use thiserror::Error;

use crate::vector::EntityVector;

macro_rules! dense_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(i: usize) -> Self {
                debug_assert!(i <= u32::MAX as usize);
                Self(i as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

dense_id!(
    /// Dense index into the entity dictionary.
    EntityId
);
dense_id!(
    /// Dense index into the relation dictionary.
    RelationId
);
dense_id!(
    /// Dense index into the triple table.
    TripleId
);

/// A directed labelled edge `subject --relation--> object`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
}

impl Triple {
    pub fn new(subject: u32, relation: u32, object: u32) -> Self {
        Self {
            subject: EntityId(subject),
            relation: RelationId(relation),
            object: EntityId(object),
        }
    }
}

/// Bijective map between labels and contiguous ids starting at 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    forward: HashMap<String, u32>,
    reverse: Vec<String>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `label`, assigning the next free id on first sight.
    pub fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.forward.get(label) {
            return id;
        }
        let id = self.reverse.len() as u32;
        self.forward.insert(label.to_owned(), id);
        self.reverse.push(label.to_owned());
        id
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.forward.get(label).copied()
    }

    pub fn label(&self, id: u32) -> Option<&str> {
        self.reverse.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }

    /// Labels in id order.
    pub fn labels(&self) -> &[String] {
        &self.reverse
    }

    /// Rebuilds a dictionary from labels in id order. Fails on a repeated label.
    pub fn from_labels<I, S>(labels: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut dict = Dictionary::new();
        for label in labels {
            let label = label.into();
            if dict.forward.contains_key(&label) {
                return Err(label);
            }
            dict.intern(&label);
        }
        Ok(dict)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: empty field")]
    EmptyField { line: usize },
    #[error("input contains no triples")]
    Empty,
    #[error("more than {} distinct {what}", u32::MAX)]
    TooMany { what: &'static str },
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

/// Output of [`ingest_triples`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleStore {
    pub entities: Dictionary,
    pub relations: Dictionary,
    pub triples: Vec<Triple>,
}

impl TripleStore {
    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    /// Writes the triples back out as TSV, in triple id order.
    pub fn write_tsv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.triples {
            writeln!(
                out,
                "{}\t{}\t{}",
                self.entities.label(t.subject.0).unwrap_or_default(),
                self.relations.label(t.relation.0).unwrap_or_default(),
                self.entities.label(t.object.0).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}

/// Reads tab-separated `subject relation object` lines.
///
/// Ids are assigned in first-seen order (subject before object on each line),
/// and repeated triples keep only their first occurrence. Blank lines are
/// skipped; a trailing `\r` is stripped.
pub fn ingest_triples<R: BufRead>(source: R) -> Result<TripleStore, IngestError> {
    let mut entities = Dictionary::new();
    let mut relations = Dictionary::new();
    let mut seen = std::collections::HashSet::new();
    let mut triples = Vec::new();

    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(IngestError::FieldCount {
                line: line_no,
                found: fields.len(),
            });
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(IngestError::EmptyField { line: line_no });
        }
        if entities.len() >= u32::MAX as usize - 1 {
            return Err(IngestError::TooMany { what: "entities" });
        }
        let s = entities.intern(fields[0]);
        let r = relations.intern(fields[1]);
        let o = entities.intern(fields[2]);
        let triple = Triple::new(s, r, o);
        if seen.insert(triple) {
            if triples.len() >= u32::MAX as usize {
                return Err(IngestError::TooMany { what: "triples" });
            }
            triples.push(triple);
        }
    }

    if triples.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(TripleStore {
        entities,
        relations,
        triples,
    })
}

/// Result of resolving query labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityLookup {
    pub vector: EntityVector,
    pub unknown: Vec<String>,
}

/// Resolves labels to an [`EntityVector`]. Unknown labels are collected, not rejected.
pub fn lookup_entities<S: AsRef<str>>(labels: &[S], dict: &Dictionary) -> EntityLookup {
    let mut ids = Vec::with_capacity(labels.len());
    let mut unknown = Vec::new();
    for label in labels {
        match dict.get(label.as_ref()) {
            Some(id) => ids.push(EntityId(id)),
            None => unknown.push(label.as_ref().to_owned()),
        }
    }
    EntityLookup {
        vector: EntityVector::from_ids(ids),
        unknown,
    }
}
