//! Reading external corpus representations into a validated
//! [`LogicalCorpus`].
//!
//! Two source formats are supported and interchangeable: a GrAF-style XML
//! subset ([`parse_graf`]) and a directory of tab-separated files
//! ([`parse_tabular`]). [`write_graf`] and [`write_tabular`] produce the same
//! formats from a corpus.

mod graf;
mod tabular;
mod validate;
mod write;

use std::collections::BTreeSet;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::{
    CorpusMeta, CorpusStats, Edge, FeatureAssignment, Node, PrimaryText, Slot,
};

pub use graf::parse_graf;
pub use tabular::parse_tabular;
pub use validate::{validate, Issue, IssueCode, Location, ValidationReport};
pub(crate) use validate::validate_with_origins;
pub use write::{write_graf, write_tabular};

/// Edge labels that express containment; such edges may not be self-loops.
pub const RESERVED_CONTAINMENT_LABELS: &[&str] = &["parent", "contains"];

/// A whole corpus in memory, in normalized order: nodes and edges sorted by
/// id, features sorted by target then key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalCorpus {
    pub text: PrimaryText,
    pub slots: Vec<Slot>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub features: Vec<FeatureAssignment>,
    pub meta: CorpusMeta,
}

impl LogicalCorpus {
    /// Sorts nodes, edges, features and slots into normalized order.
    pub fn normalize(&mut self) {
        self.slots.sort_by_key(|s| s.index);
        self.nodes.sort_by_key(|n| n.id);
        self.edges.sort_by_key(|e| e.id);
        self.features
            .sort_by(|a, b| a.target.cmp(&b.target).then_with(|| a.key.cmp(&b.key)));
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            words: self
                .nodes
                .iter()
                .filter(|n| n.otype == self.meta.slot_otype)
                .count() as u64,
            nodes: self.nodes.len() as u64,
            features: self.features.len() as u64,
            edges: self.edges.len() as u64,
        }
    }

    /// Distinct otypes present in the node list.
    pub fn otypes(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.otype.as_str()).collect()
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Syntax {
        file: String,
        line: u32,
        message: String,
    },
    #[error("corpus rejected: {}", .0.summary())]
    Invalid(ValidationReport),
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            IngestError::Invalid(r) => Some(r),
            _ => None,
        }
    }
}

/// Shared by both parsers: metadata given as `key=value` lines.
pub(crate) fn apply_meta_line(meta: &mut CorpusMeta, key: &str, value: &str) -> bool {
    let list = |v: &str| -> Vec<String> {
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    };
    match key {
        "otypes" => meta.otypes = list(value),
        "slot_otype" => meta.slot_otype = value.trim().to_string(),
        "int_features" => meta.int_features = list(value),
        "provenance" => meta.provenance.push(value.trim().to_string()),
        _ => return false,
    }
    true
}
