//! Compiling a [`LogicalCorpus`] into a binary corpus image.
//!
//! The image is a preamble, a section directory with per-section CRC32
//! checksums, and nine sections. Output is a pure function of the corpus:
//! compiling the same corpus twice gives byte-identical files.

pub mod format;
mod verify;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{validate, LogicalCorpus, ValidationReport};
use crate::model::{canonical_key_compare, MonadSet, TargetKind};
use format::{Enc, SectionId, DIR_ENTRY_LEN, FORMAT_VERSION, MAGIC, PREAMBLE_LEN};

pub use format::ImageError;
pub use verify::{verify, verify_bytes, SectionCheck, SectionStatus, VerifyReport};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("corpus is invalid: {}", .0.summary())]
    Invalid(ValidationReport),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DictionarySize {
    pub kind: TargetKind,
    pub key: String,
    pub values: usize,
    pub assignments: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompileSummary {
    pub sections: Vec<(String, u64)>,
    pub total_bytes: u64,
    pub slots: usize,
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub distinct_monad_sets: usize,
    pub dictionaries: Vec<DictionarySize>,
    #[serde(serialize_with = "ser_secs")]
    pub elapsed: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl CompileSummary {
    pub fn dictionary(&self, key: &str) -> Option<&DictionarySize> {
        self.dictionaries.iter().find(|d| d.key == key)
    }
}

/// Value dictionary order: descending frequency, ties lexicographic.
pub(crate) fn dictionary_order<'a>(values: impl IntoIterator<Item = &'a str>) -> Vec<&'a str> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut dict: Vec<(&str, usize)> = counts.into_iter().collect();
    dict.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    dict.into_iter().map(|(v, _)| v).collect()
}

/// Encodes the image in memory. The corpus must validate.
pub fn compile_to_bytes(c: &LogicalCorpus) -> Result<(Vec<u8>, CompileSummary), CompileError> {
    let started = Instant::now();
    let report = validate(c);
    if !report.is_ok() {
        return Err(CompileError::Invalid(report));
    }
    let mut sections: Vec<(SectionId, Vec<u8>)> = Vec::with_capacity(SectionId::ALL.len());

    // meta
    let mut e = Enc::default();
    e.strs(c.meta.otypes.iter().map(String::as_str));
    e.str(&c.meta.slot_otype);
    e.strs(c.meta.int_features.iter().map(String::as_str));
    e.strs(c.meta.provenance.iter().map(String::as_str));
    sections.push((SectionId::Meta, e.buf));

    sections.push((SectionId::Text, c.text.as_str().as_bytes().to_vec()));

    let mut e = Enc::default();
    e.u32(c.slots.len() as u32);
    e.u32s(c.slots.iter().map(|s| s.region.start));
    e.u32s(c.slots.iter().map(|s| s.region.end));
    sections.push((SectionId::Slots, e.buf));

    // otype dictionary in rank order, restricted to otypes present
    let ranking = c.meta.ranking(c.otypes());
    let present = c.otypes();
    let otype_dict: Vec<&str> = ranking
        .ordered()
        .iter()
        .map(String::as_str)
        .filter(|o| present.contains(o))
        .collect();
    let otype_code: HashMap<&str, u32> = otype_dict
        .iter()
        .enumerate()
        .map(|(i, o)| (*o, i as u32))
        .collect();
    let mut e = Enc::default();
    e.strs(otype_dict.iter().copied());
    sections.push((SectionId::Otypes, e.buf));

    // monad pool, deduplicated in order of first use
    let mut pool_index: HashMap<&MonadSet, u32> = HashMap::new();
    let mut pool: Vec<&MonadSet> = Vec::new();
    let set_of_node: Vec<u32> = c
        .nodes
        .iter()
        .map(|n| {
            *pool_index.entry(&n.monads).or_insert_with(|| {
                pool.push(&n.monads);
                pool.len() as u32 - 1
            })
        })
        .collect();

    let mut e = Enc::default();
    e.u32(c.nodes.len() as u32);
    e.u32s(c.nodes.iter().map(|n| n.id.0));
    e.u32s(c.nodes.iter().map(|n| otype_code[n.otype.as_str()]));
    e.u32s(set_of_node.iter().copied());
    sections.push((SectionId::Nodes, e.buf));

    let mut data = Enc::default();
    let mut offsets = Vec::with_capacity(pool.len() + 1);
    for set in &pool {
        offsets.push(data.buf.len() as u32);
        data.varint(set.runs().len() as u32);
        let mut prev_end = 0;
        for r in set.runs() {
            data.varint(r.start - prev_end);
            data.varint(r.end - r.start);
            prev_end = r.end;
        }
    }
    offsets.push(data.buf.len() as u32);
    let mut e = Enc::default();
    e.u32(pool.len() as u32);
    e.u32s(offsets);
    e.buf.extend_from_slice(&data.buf);
    sections.push((SectionId::MonadPool, e.buf));

    let ranks: Vec<usize> = c.nodes.iter().map(|n| ranking.rank(&n.otype)).collect();
    let mut order: Vec<u32> = (0..c.nodes.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (na, nb) = (&c.nodes[a as usize], &c.nodes[b as usize]);
        canonical_key_compare(
            (na.monads.as_ref(), ranks[a as usize], na.id),
            (nb.monads.as_ref(), ranks[b as usize], nb.id),
        )
    });
    let mut e = Enc::default();
    e.u32(order.len() as u32);
    e.u32s(order);
    sections.push((SectionId::Canonical, e.buf));

    // edges grouped by label, each group sorted by (from, id)
    let mut by_label: BTreeMap<&str, Vec<(u32, u32, u32)>> = BTreeMap::new();
    for edge in &c.edges {
        by_label
            .entry(edge.label.as_str())
            .or_default()
            .push((edge.from.0, edge.id.0, edge.to.0));
    }
    let mut e = Enc::default();
    e.u32(by_label.len() as u32);
    for (label, mut group) in by_label {
        group.sort_unstable();
        e.str(label);
        e.u32(group.len() as u32);
        e.u32s(group.iter().map(|g| g.1));
        e.u32s(group.iter().map(|g| g.0));
        e.u32s(group.iter().map(|g| g.2));
    }
    sections.push((SectionId::Edges, e.buf));

    // feature stores, one per (kind, key)
    let mut stores: BTreeMap<(TargetKind, &str), Vec<(u32, &str)>> = BTreeMap::new();
    for f in &c.features {
        stores
            .entry((f.target.kind(), f.key.as_str()))
            .or_default()
            .push((f.target.raw(), f.value.as_str()));
    }
    let mut dictionaries = Vec::with_capacity(stores.len());
    let mut e = Enc::default();
    e.u32(stores.len() as u32);
    for ((kind, key), entries) in &stores {
        let dict = dictionary_order(entries.iter().map(|x| x.1));
        let code: HashMap<&str, u32> = dict.iter().enumerate().map(|(i, v)| (*v, i as u32)).collect();
        e.u8(match kind {
            TargetKind::Node => 0,
            TargetKind::Edge => 1,
        });
        e.str(key);
        e.strs(dict.iter().copied());
        e.u32(entries.len() as u32);
        e.u32s(entries.iter().map(|x| x.0));
        e.u32s(entries.iter().map(|x| code[x.1]));
        dictionaries.push(DictionarySize {
            kind: *kind,
            key: key.to_string(),
            values: dict.len(),
            assignments: entries.len(),
        });
    }
    sections.push((SectionId::Features, e.buf));

    // assemble: preamble, directory, directory crc, sections
    let header_len = PREAMBLE_LEN + sections.len() * DIR_ENTRY_LEN + 4;
    let total: usize = header_len + sections.iter().map(|s| s.1.len()).sum::<usize>();
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(sections.len() as u16).to_le_bytes());
    let mut offset = header_len as u64;
    for (id, data) in &sections {
        out.extend_from_slice(&(*id as u16).to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&offset.to_le_bytes());
        out.extend_from_slice(&(data.len() as u64).to_le_bytes());
        out.extend_from_slice(&crc32fast::hash(data).to_le_bytes());
        offset += data.len() as u64;
    }
    let dir_crc = crc32fast::hash(&out);
    out.extend_from_slice(&dir_crc.to_le_bytes());
    for (_, data) in &sections {
        out.extend_from_slice(data);
    }

    let summary = CompileSummary {
        sections: sections
            .iter()
            .map(|(id, d)| (id.name().to_string(), d.len() as u64))
            .collect(),
        total_bytes: out.len() as u64,
        slots: c.slots.len(),
        nodes: c.nodes.len(),
        edges: c.edges.len(),
        features: c.features.len(),
        distinct_monad_sets: pool.len(),
        dictionaries,
        elapsed: started.elapsed(),
    };
    Ok((out, summary))
}

/// Compiles `c` and writes the image to `out` atomically.
pub fn compile(c: &LogicalCorpus, out: impl AsRef<Path>) -> Result<CompileSummary, CompileError> {
    let started = Instant::now();
    let out = out.as_ref();
    let (bytes, mut summary) = compile_to_bytes(c)?;
    let io_err = |source| CompileError::Io {
        path: out.display().to_string(),
        source,
    };
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(&bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(out).map_err(|e| io_err(e.error))?;
    summary.elapsed = started.elapsed();
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::toy4;

    #[test]
    fn toy4_summary_counts() {
        let (_, s) = compile_to_bytes(&toy4()).unwrap();
        assert_eq!(s.nodes, 8);
        assert_eq!(s.slots, 4);
        assert_eq!(s.dictionary("text").unwrap().values, 4);
        assert_eq!(s.dictionary("lex").unwrap().values, 4);
        assert_eq!(s.dictionary("typ").unwrap().values, 2);
        // n4 {4} and n102 {4} share a set; n201 and n301 share {1-4}
        assert_eq!(s.distinct_monad_sets, 6);
    }

    #[test]
    fn dictionary_is_frequency_then_lexicographic() {
        let d = dictionary_order(["b", "a", "c", "c", "b", "z", "z"]);
        assert_eq!(d, ["b", "c", "z", "a"]);
    }

    #[test]
    fn invalid_corpus_is_refused() {
        let mut c = toy4();
        c.slots.clear();
        assert!(matches!(compile_to_bytes(&c), Err(CompileError::Invalid(_))));
    }

    #[test]
    fn compile_is_deterministic() {
        let a = compile_to_bytes(&toy4()).unwrap().0;
        let b = compile_to_bytes(&toy4()).unwrap().0;
        assert_eq!(a, b);
    }
}
