//! The logical data model: an immutable primary text, slots anchored to it,
//! nodes anchored to monad sets, edges between nodes, and features on both.
//!
//! Everything here is plain data. Ingestion builds it, the compiler
//! serializes it, and a loaded [`Corpus`](crate::Corpus) can reconstruct it
//! exactly.

mod monads;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use monads::{Monad, MonadSet, MonadSetError, Monads, Run};

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = String;

            /// Accepts `n12` style tokens as well as bare integers.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let digits = s.strip_prefix($prefix).unwrap_or(s);
                match digits.parse::<u32>() {
                    Ok(v) if v > 0 && v < (1 << 31) => Ok($name(v)),
                    _ => Err(format!(
                        concat!("invalid id `{}` (expected ", $prefix, "<positive integer>)"),
                        s
                    )),
                }
            }
        }
    };
}

id_type!(
    /// Node identifier, written `n<number>`.
    NodeId,
    "n"
);
id_type!(
    /// Edge identifier, written `e<number>`.
    EdgeId,
    "e"
);

/// The immutable primary data. Offsets everywhere are Unicode scalar value
/// offsets, not byte offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimaryText {
    content: String,
    /// Byte offset of every scalar value, plus `content.len()` at the end.
    boundaries: Vec<u32>,
}

impl PrimaryText {
    pub fn new(content: impl Into<String>) -> Self {
        let content = content.into();
        let mut boundaries: Vec<u32> = content.char_indices().map(|(b, _)| b as u32).collect();
        boundaries.push(content.len() as u32);
        PrimaryText {
            content,
            boundaries,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.content
    }

    /// Number of scalar values.
    pub fn len(&self) -> u32 {
        (self.boundaries.len() - 1) as u32
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The text covered by `region`, or `None` if the region is out of bounds.
    pub fn slice(&self, region: Region) -> Option<&str> {
        if region.start > region.end || region.end > self.len() {
            return None;
        }
        let a = self.boundaries[region.start as usize] as usize;
        let b = self.boundaries[region.end as usize] as usize;
        Some(&self.content[a..b])
    }
}

/// Half-open character region `[start, end)` of the primary text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    pub start: u32,
    pub end: u32,
}

impl Region {
    pub fn new(start: u32, end: u32) -> Self {
        Region { start, end }
    }

    /// From an inclusive `(first, last)` character pair.
    pub fn from_inclusive(first: u32, last: u32) -> Self {
        Region {
            start: first,
            end: last + 1,
        }
    }

    pub fn len(&self) -> u32 {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub index: Monad,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub otype: String,
    pub monads: MonadSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub label: String,
}

/// What a feature is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    Node(NodeId),
    Edge(EdgeId),
}

impl Target {
    pub fn kind(&self) -> TargetKind {
        match self {
            Target::Node(_) => TargetKind::Node,
            Target::Edge(_) => TargetKind::Edge,
        }
    }

    pub fn raw(&self) -> u32 {
        match self {
            Target::Node(n) => n.0,
            Target::Edge(e) => e.0,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Node(n) => n.fmt(f),
            Target::Edge(e) => e.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetKind {
    Node,
    Edge,
}

impl TargetKind {
    pub fn code(&self) -> &'static str {
        match self {
            TargetKind::Node => "N",
            TargetKind::Edge => "E",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureAssignment {
    pub target: Target,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub words: u64,
    pub nodes: u64,
    pub features: u64,
    pub edges: u64,
}

/// Corpus-level configuration declared at ingest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusMeta {
    /// Object types from outermost to innermost, e.g. `book, chapter, verse`.
    pub otypes: Vec<String>,
    /// The otype whose nodes are the slots.
    pub slot_otype: String,
    /// Feature keys whose values compare as integers in queries.
    pub int_features: Vec<String>,
    pub provenance: Vec<String>,
}

impl Default for CorpusMeta {
    fn default() -> Self {
        CorpusMeta {
            otypes: Vec::new(),
            slot_otype: "word".to_string(),
            int_features: Vec::new(),
            provenance: Vec::new(),
        }
    }
}

impl CorpusMeta {
    pub fn ranking<'a, I>(&self, present: I) -> OtypeRanking
    where
        I: IntoIterator<Item = &'a str>,
    {
        OtypeRanking::new(&self.otypes, &self.slot_otype, present)
    }

    pub fn is_int_feature(&self, key: &str) -> bool {
        self.int_features.iter().any(|k| k == key)
    }
}

/// Rank of every otype for tie-breaking in canonical order: declared otypes
/// in declaration order, then undeclared ones alphabetically, then the slot
/// otype last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtypeRanking {
    order: Vec<String>,
}

impl OtypeRanking {
    pub fn new<'a, I>(declared: &[String], slot_otype: &str, present: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut order: Vec<String> = declared
            .iter()
            .filter(|o| o.as_str() != slot_otype)
            .cloned()
            .collect();
        let mut extra: Vec<String> = present
            .into_iter()
            .filter(|o| *o != slot_otype && !declared.iter().any(|d| d == o))
            .map(str::to_string)
            .collect();
        extra.sort();
        extra.dedup();
        order.extend(extra);
        order.push(slot_otype.to_string());
        OtypeRanking { order }
    }

    pub fn rank(&self, otype: &str) -> usize {
        self.order
            .iter()
            .position(|o| o == otype)
            .unwrap_or(self.order.len())
    }

    pub fn ordered(&self) -> &[String] {
        &self.order
    }
}

/// The canonical order on nodes: first monad ascending, then last monad
/// descending, then otype rank, then id.
pub fn canonical_compare(a: &Node, b: &Node, ranking: &OtypeRanking) -> Ordering {
    canonical_key_compare(
        (a.monads.as_ref(), ranking.rank(&a.otype), a.id),
        (b.monads.as_ref(), ranking.rank(&b.otype), b.id),
    )
}

pub(crate) fn canonical_key_compare(
    a: (Monads<'_>, usize, NodeId),
    b: (Monads<'_>, usize, NodeId),
) -> Ordering {
    a.0.first()
        .cmp(&b.0.first())
        .then_with(|| b.0.last().cmp(&a.0.last()))
        .then_with(|| a.1.cmp(&b.1))
        .then_with(|| a.2.cmp(&b.2))
}

/// `a` embeds `b`: `b`'s monads are a subset of `a`'s and they are different nodes.
pub fn embeds(a: &Node, b: &Node) -> bool {
    a.id != b.id && b.monads.is_subset_of(&a.monads)
}

/// Every monad of `a` precedes every monad of `b`.
pub fn sequence_before(a: &MonadSet, b: &MonadSet) -> bool {
    a.last() < b.first()
}

/// `b` starts at the monad right after `a` ends.
pub fn adjacent(a: &MonadSet, b: &MonadSet) -> bool {
    a.last() + 1 == b.first()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u32, otype: &str, m: &str) -> Node {
        Node {
            id: NodeId(id),
            otype: otype.to_string(),
            monads: m.parse().unwrap(),
        }
    }

    fn ranking() -> OtypeRanking {
        let declared: Vec<String> = ["book", "chapter", "verse", "sentence", "clause", "phrase", "word"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        OtypeRanking::new(&declared, "word", [])
    }

    #[test]
    fn ids_parse_with_or_without_prefix() {
        assert_eq!("n12".parse::<NodeId>(), Ok(NodeId(12)));
        assert_eq!("12".parse::<NodeId>(), Ok(NodeId(12)));
        assert_eq!("e3".parse::<EdgeId>(), Ok(EdgeId(3)));
        assert!("n0".parse::<NodeId>().is_err());
        assert!("x1".parse::<NodeId>().is_err());
        assert_eq!(NodeId(7).to_string(), "n7");
    }

    #[test]
    fn text_slices_by_scalar_offset() {
        let t = PrimaryText::new("בְּ abc");
        // bet, sheva, dagesh: three scalar values
        assert_eq!(t.len(), 7);
        assert_eq!(t.slice(Region::new(5, 7)), Some("bc"));
        assert_eq!(t.slice(Region::new(0, 3)), Some("בְּ"));
        assert_eq!(t.slice(Region::new(6, 8)), None);
        assert_eq!(Region::from_inclusive(0, 2), Region::new(0, 3));
    }

    #[test]
    fn ranking_puts_unknown_after_declared_and_slot_last() {
        let declared = vec!["word".to_string(), "verse".to_string()];
        let r = OtypeRanking::new(&declared, "word", ["zeta", "alpha", "verse", "word"]);
        assert_eq!(r.ordered(), &["verse", "alpha", "zeta", "word"]);
        assert_eq!(r.rank("nope"), 4);
    }

    #[test]
    fn canonical_compare_examples() {
        let r = ranking();
        let clause = node(201, "clause", "1-4");
        let phrase = node(101, "phrase", "1-3");
        let w1 = node(1, "word", "1");
        let w2 = node(2, "word", "2");
        assert_eq!(canonical_compare(&clause, &phrase, &r), Ordering::Less);
        assert_eq!(canonical_compare(&w2, &clause, &r), Ordering::Greater);
        assert_eq!(canonical_compare(&w1, &w1, &r), Ordering::Equal);
        let w1b = node(5, "word", "1");
        assert_eq!(canonical_compare(&w1, &w1b, &r), Ordering::Less);
        let verse = node(301, "verse", "1-4");
        assert_eq!(canonical_compare(&verse, &clause, &r), Ordering::Less);
    }

    #[test]
    fn relations() {
        let clause = node(201, "clause", "1-4");
        let phrase = node(101, "phrase", "1-3");
        let w3 = node(3, "word", "3");
        let w4 = node(4, "word", "4");
        assert!(embeds(&clause, &w3));
        assert!(!embeds(&phrase, &w4));
        assert!(!embeds(&clause, &clause));

        let w1 = node(1, "word", "1");
        let w2 = node(2, "word", "2");
        assert!(sequence_before(&w2.monads, &w3.monads));
        assert!(adjacent(&w2.monads, &w3.monads));
        assert!(sequence_before(&w1.monads, &w4.monads));
        assert!(!adjacent(&w1.monads, &w4.monads));
        assert!(!sequence_before(&clause.monads, &phrase.monads));
    }
}
