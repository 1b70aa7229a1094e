//! Feature documentation with complete value frequency lists.
//!
//! [`render_docs`] writes one text and one JSON document per feature and
//! object type, e.g. `word.lex.txt` and `word.lex.json`, plus `index.txt`
//! and `index.json`. Edge features are documented per label as
//! `edge.<label>.<key>`.
//!
//! ```
//! use fabric::{featuredoc, toy, Corpus};
//!
//! let corpus = Corpus::from_logical(&toy::toy4()).unwrap();
//! let t = featuredoc::feature_frequency(&corpus, "phrase", "typ").unwrap();
//! assert_eq!(t.rows, [("NP".to_string(), 1), ("VP".to_string(), 1)]);
//! assert_eq!(t.total, 2);
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, FeatureStore};
use crate::model::{EdgeId, NodeId, TargetKind};

/// Longest value shown in text documents; longer ones are cut and end in `...`.
pub const MAX_TEXT_VALUE: usize = 120;

#[derive(Debug, Error)]
pub enum FeatureDocError {
    #[error("unknown object type `{0}`")]
    UnknownOtype(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Value counts of one feature on one object type (or edge label).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    pub kind: TargetKind,
    /// Object type, or edge label for edge features.
    pub otype: String,
    pub key: String,
    /// Values by count descending, ties in ascending value order.
    pub rows: Vec<(String, u64)>,
    pub total: u64,
}

impl FrequencyTable {
    /// Base name of its documents.
    pub fn doc_name(&self) -> String {
        match self.kind {
            TargetKind::Node => format!("{}.{}", self.otype, self.key),
            TargetKind::Edge => format!("edge.{}.{}", self.otype, self.key),
        }
    }

    fn from_counts(kind: TargetKind, otype: &str, key: &str, store: &FeatureStore, counts: &[u64]) -> Self {
        let mut rows: Vec<(String, u64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(code, &n)| (store.dict[code].clone(), n))
            .collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        FrequencyTable {
            kind,
            otype: otype.to_string(),
            key: key.to_string(),
            total: rows.iter().map(|r| r.1).sum(),
            rows,
        }
    }
}

/// Counts the values of `key` over all nodes of `otype`.
pub fn feature_frequency(c: &Corpus, otype: &str, key: &str) -> Result<FrequencyTable, FeatureDocError> {
    let code = c
        .otype_code(otype)
        .ok_or_else(|| FeatureDocError::UnknownOtype(otype.to_string()))?;
    let store = c
        .store(TargetKind::Node, key)
        .ok_or_else(|| FeatureDocError::UnknownFeature(key.to_string()))?;
    let mut counts = vec![0u64; store.dict.len()];
    for (&t, &v) in store.targets.iter().zip(&store.codes) {
        let pos = c.pos_of(NodeId(t)).expect("feature target exists");
        if c.otype_code_at(pos) == code {
            counts[v as usize] += 1;
        }
    }
    Ok(FrequencyTable::from_counts(TargetKind::Node, otype, key, store, &counts))
}

/// Every non-empty table: node features per (otype, key) in otype rank
/// order then key order, followed by edge features per (label, key).
pub fn all_tables(c: &Corpus) -> Vec<FrequencyTable> {
    let mut out = Vec::new();
    let mut by_otype: BTreeMap<(usize, String), FrequencyTable> = BTreeMap::new();
    for key in c.feature_keys(TargetKind::Node) {
        let store = c.store(TargetKind::Node, key).expect("listed key");
        let mut counts: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for (&t, &v) in store.targets.iter().zip(&store.codes) {
            let ot = c.otype_code_at(c.pos_of(NodeId(t)).expect("feature target exists"));
            counts.entry(ot).or_insert_with(|| vec![0; store.dict.len()])[v as usize] += 1;
        }
        for (ot, counts) in counts {
            let otype = &c.otypes()[ot as usize];
            by_otype.insert(
                (c.ranking().rank(otype), format!("{otype}\u{0}{key}")),
                FrequencyTable::from_counts(TargetKind::Node, otype, key, store, &counts),
            );
        }
    }
    out.extend(by_otype.into_values());
    for key in c.feature_keys(TargetKind::Edge) {
        let store = c.store(TargetKind::Edge, key).expect("listed key");
        let mut counts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        for (&t, &v) in store.targets.iter().zip(&store.codes) {
            let label = c.edge(EdgeId(t)).expect("feature target exists").label;
            counts.entry(label).or_insert_with(|| vec![0; store.dict.len()])[v as usize] += 1;
        }
        for (label, counts) in counts {
            out.push(FrequencyTable::from_counts(TargetKind::Edge, &label, key, store, &counts));
        }
    }
    out
}

fn shown(value: &str) -> String {
    let escaped: String = value
        .chars()
        .flat_map(|ch| match ch {
            '\n' => vec!['\\', 'n'],
            '\t' => vec!['\\', 't'],
            '\r' => vec!['\\', 'r'],
            ch => vec![ch],
        })
        .collect();
    if escaped.chars().count() <= MAX_TEXT_VALUE {
        escaped
    } else {
        let mut cut: String = escaped.chars().take(MAX_TEXT_VALUE - 3).collect();
        cut.push_str("...");
        cut
    }
}

fn text_doc(t: &FrequencyTable) -> String {
    let name = t.doc_name();
    let mut s = String::new();
    let _ = writeln!(s, "{name}\n{}\n", "=".repeat(name.chars().count()));
    let _ = writeln!(s, "Intended meaning: not yet documented.\n");
    match t.kind {
        TargetKind::Node => {
            let _ = writeln!(s, "Object type: {}", t.otype);
        }
        TargetKind::Edge => {
            let _ = writeln!(s, "Edge label: {}", t.otype);
        }
    }
    let _ = writeln!(s, "Feature: {}", t.key);
    let _ = writeln!(s, "Assignments: {}", t.total);
    let _ = writeln!(s, "Distinct values: {}\n", t.rows.len());
    let width = t.rows.first().map_or(5, |r| r.1.to_string().len().max(5));
    let _ = writeln!(s, "{:>width$}  value", "count");
    for (v, n) in &t.rows {
        let _ = writeln!(s, "{n:>width$}  {}", shown(v));
    }
    s
}

#[derive(Serialize)]
struct JsonRow<'a> {
    value: &'a str,
    count: u64,
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    kind: TargetKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    otype: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
    key: &'a str,
    meaning: Option<&'a str>,
    total: u64,
    distinct: usize,
    values: Vec<JsonRow<'a>>,
}

#[derive(Serialize)]
struct IndexEntry<'a> {
    name: String,
    kind: TargetKind,
    otype: &'a str,
    key: &'a str,
    total: u64,
    distinct: usize,
    text: String,
    json: String,
}

fn json_doc(t: &FrequencyTable) -> String {
    let (otype, label) = match t.kind {
        TargetKind::Node => (Some(t.otype.as_str()), None),
        TargetKind::Edge => (None, Some(t.otype.as_str())),
    };
    let doc = JsonDoc {
        kind: t.kind,
        otype,
        label,
        key: &t.key,
        meaning: None,
        total: t.total,
        distinct: t.rows.len(),
        values: t.rows.iter().map(|(v, n)| JsonRow { value: v, count: *n }).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializes") + "\n"
}

/// Writes the documentation set into `out_dir` (created if needed) and
/// returns the paths written, index files last.
pub fn render_docs(c: &Corpus, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, FeatureDocError> {
    let dir = out_dir.as_ref();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| FeatureDocError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let tables = all_tables(c);
    let mut written = Vec::new();
    let mut index = Vec::new();
    let mut index_txt = String::from("Feature documentation\n=====================\n\n");
    for t in &tables {
        let name = t.doc_name();
        let (txt, json) = (format!("{name}.txt"), format!("{name}.json"));
        for (file, body) in [(&txt, text_doc(t)), (&json, json_doc(t))] {
            let path = dir.join(file);
            std::fs::write(&path, body).map_err(io(&path))?;
            written.push(path);
        }
        let _ = writeln!(index_txt, "{name}  ({} assignments, {} values)", t.total, t.rows.len());
        index.push(IndexEntry {
            name,
            kind: t.kind,
            otype: &t.otype,
            key: &t.key,
            total: t.total,
            distinct: t.rows.len(),
            text: txt,
            json,
        });
    }
    if tables.is_empty() {
        index_txt.push_str("No features.\n");
    }
    let path = dir.join("index.txt");
    std::fs::write(&path, index_txt).map_err(io(&path))?;
    written.push(path);
    let path = dir.join("index.json");
    let body = serde_json::to_string_pretty(&serde_json::json!({ "features": index })).expect("serializes") + "\n";
    std::fs::write(&path, body).map_err(io(&path))?;
    written.push(path);
    Ok(written)
}
