//! TOY4, the four-word reference corpus used throughout the docs and tests.
//!
//! ```text
//! text   "the quick fox jumps"
//! words  n1 the {1}  n2 quick {2}  n3 fox {3}  n4 jumps {4}
//! phrase n101 {1-3} typ=NP         n102 {4} typ=VP
//! clause n201 {1-4}
//! verse  n301 {1-4}
//! ```

use crate::ingest::LogicalCorpus;
use crate::model::{
    CorpusMeta, Edge, EdgeId, FeatureAssignment, MonadSet, Node, NodeId, PrimaryText, Region,
    Slot, Target,
};

pub const TOY4_TEXT: &str = "the quick fox jumps";

pub const TOY4_OTYPES: &[&str] = &[
    "book", "chapter", "verse", "sentence", "clause", "phrase", "word",
];

pub fn toy4() -> LogicalCorpus {
    let words = [
        ("the", "the", 0, 3),
        ("quick", "quick", 4, 9),
        ("fox", "fox", 10, 13),
        ("jumps", "jump", 14, 19),
    ];
    let mut slots = Vec::new();
    let mut nodes = Vec::new();
    let mut features = Vec::new();
    for (i, (text, lex, start, end)) in words.iter().enumerate() {
        let m = i as u32 + 1;
        slots.push(Slot {
            index: m,
            region: Region::new(*start, *end),
        });
        nodes.push(Node {
            id: NodeId(m),
            otype: "word".into(),
            monads: MonadSet::singleton(m),
        });
        for (key, value) in [("text", text), ("lex", lex)] {
            features.push(FeatureAssignment {
                target: Target::Node(NodeId(m)),
                key: key.to_string(),
                value: value.to_string(),
            });
        }
    }
    let mut add = |id: u32, otype: &str, monads: MonadSet| {
        nodes.push(Node {
            id: NodeId(id),
            otype: otype.into(),
            monads,
        })
    };
    add(101, "phrase", MonadSet::range(1, 3));
    add(102, "phrase", MonadSet::singleton(4));
    add(201, "clause", MonadSet::range(1, 4));
    add(301, "verse", MonadSet::range(1, 4));
    for (id, typ) in [(101, "NP"), (102, "VP")] {
        features.push(FeatureAssignment {
            target: Target::Node(NodeId(id)),
            key: "typ".into(),
            value: typ.into(),
        });
    }
    let edges = [(1, 101), (2, 101), (3, 101), (4, 102), (101, 201), (102, 201)]
        .iter()
        .enumerate()
        .map(|(i, &(from, to))| Edge {
            id: EdgeId(i as u32 + 1),
            from: NodeId(from),
            to: NodeId(to),
            label: "parent".into(),
        })
        .collect();

    let mut c = LogicalCorpus {
        text: PrimaryText::new(TOY4_TEXT),
        slots,
        nodes,
        edges,
        features,
        meta: CorpusMeta {
            otypes: TOY4_OTYPES.iter().map(|s| s.to_string()).collect(),
            slot_otype: "word".into(),
            int_features: Vec::new(),
            provenance: vec!["toy4".into()],
        },
    };
    c.normalize();
    c
}
