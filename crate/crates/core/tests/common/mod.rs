//! Random corpora and queries for property tests. Everything is driven by a
//! seeded ChaCha generator so failures reproduce from the seed alone.

#![allow(dead_code)]

pub mod golden;

use std::collections::BTreeSet;

use fabric::model::{
    CorpusMeta, Edge, EdgeId, FeatureAssignment, MonadSet, Node, NodeId, PrimaryText, Region, Slot,
    Target,
};
use fabric::LogicalCorpus;
use rand::seq::SliceRandom;
use rand::Rng;
pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng8;

pub fn rng(seed: u64) -> Rng8 {
    Rng8::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_slots: u32,
    pub max_nodes: usize,
    /// Non-slot object types.
    pub max_otypes: usize,
    pub max_keys: usize,
}

impl Shape {
    pub const ROUND_TRIP: Shape = Shape {
        max_slots: 50,
        max_nodes: 200,
        max_otypes: 5,
        max_keys: 6,
    };
    pub const ORACLE: Shape = Shape {
        max_slots: 40,
        max_nodes: 90,
        max_otypes: 4,
        max_keys: 4,
    };
}

const WORDS: &[&str] = &[
    "the", "quick", "fox", "jumps", "over", "a", "lazy", "dog", "בְּרֵאשִׁית", "λόγος", "naïve", "x<y",
    "a&b", "\"q\"", "tab\there", "日本",
];
const OTYPES: &[&str] = &["book", "chapter", "verse", "sentence", "clause", "phrase", "half_verse"];
pub const KEYS: &[&str] = &["lex", "sp", "gloss", "n", "typ", "note"];
pub const INT_KEY: &str = "n";
const LABELS: &[&str] = &["parent", "dep", "coref", "contains"];

/// A small value vocabulary per key so values repeat and constraints hit.
pub fn values_for(key: &str) -> &'static [&'static str] {
    match key {
        "lex" => &["fox", "dog", "the", "quick", "λόγος"],
        "sp" => &["subs", "verb", "art", "prep"],
        "gloss" => &["beginning", "word", "a\tb", "line\nbreak", "back\\slash", ""],
        "n" => &["1", "2", "3", "10", "-4"],
        "typ" => &["NP", "VP", "PP"],
        _ => &["x", "y", "<z&>", "\"quoted\""],
    }
}

fn random_monads(rng: &mut Rng8, slots: u32) -> MonadSet {
    let start = rng.gen_range(1..=slots);
    let len = rng.gen_range(1..=(slots - start + 1).min(12));
    let end = start + len - 1;
    if len > 2 && rng.gen_bool(0.3) {
        // a gappy set: keep both ends, drop some of the middle
        let mut ms = vec![start, end];
        ms.extend((start + 1..end).filter(|_| rng.gen_bool(0.5)));
        MonadSet::from_monads(ms).expect("non-empty")
    } else {
        MonadSet::range(start, end)
    }
}

pub fn random_corpus(rng: &mut Rng8, shape: Shape) -> LogicalCorpus {
    let n_slots = rng.gen_range(1..=shape.max_slots);
    let max_extra = shape.max_nodes.saturating_sub(n_slots as usize);
    let n_extra = rng.gen_range(0..=max_extra.min(n_slots as usize * 3));

    // primary text: words with varied separators, some touching
    let mut text = String::new();
    let mut slots = Vec::new();
    let mut len = 0u32;
    for i in 0..n_slots {
        if i > 0 {
            let sep = *[" ", " ", " ", "", ", ", "\n"].choose(rng).unwrap();
            text.push_str(sep);
            len += sep.chars().count() as u32;
        }
        let w = *WORDS.choose(rng).unwrap();
        let start = len;
        text.push_str(w);
        len += w.chars().count() as u32;
        slots.push(Slot {
            index: i + 1,
            region: Region::new(start, len),
        });
    }
    if rng.gen_bool(0.3) {
        text.push_str(" .");
    }

    // distinct ids, some large
    let mut ids = BTreeSet::new();
    while ids.len() < n_slots as usize + n_extra {
        let id = if rng.gen_bool(0.1) {
            rng.gen_range(1..(1u32 << 31))
        } else {
            rng.gen_range(1..2000)
        };
        ids.insert(id);
    }
    let mut ids: Vec<u32> = ids.into_iter().collect();
    ids.shuffle(rng);

    let mut otypes: Vec<&str> = OTYPES.to_vec();
    otypes.shuffle(rng);
    otypes.truncate(rng.gen_range(1..=shape.max_otypes.max(1)));

    let mut nodes = Vec::new();
    for m in 1..=n_slots {
        nodes.push(Node {
            id: NodeId(ids[m as usize - 1]),
            otype: "word".into(),
            monads: MonadSet::singleton(m),
        });
    }
    for &id in &ids[n_slots as usize..] {
        nodes.push(Node {
            id: NodeId(id),
            otype: otypes.choose(rng).unwrap().to_string(),
            monads: random_monads(rng, n_slots),
        });
    }

    let mut keys: Vec<&str> = KEYS.to_vec();
    keys.shuffle(rng);
    keys.truncate(rng.gen_range(0..=shape.max_keys));
    let mut features = Vec::new();
    for n in &nodes {
        for &k in &keys {
            if rng.gen_bool(0.5) {
                features.push(FeatureAssignment {
                    target: Target::Node(n.id),
                    key: k.to_string(),
                    value: values_for(k).choose(rng).unwrap().to_string(),
                });
            }
        }
    }

    let mut edges = Vec::new();
    let n_edges = rng.gen_range(0..=nodes.len() / 2);
    let mut edge_ids = BTreeSet::new();
    while edge_ids.len() < n_edges {
        edge_ids.insert(rng.gen_range(1..5000u32));
    }
    for id in edge_ids {
        let from = nodes.choose(rng).unwrap().id;
        let label = *LABELS.choose(rng).unwrap();
        let mut to = nodes.choose(rng).unwrap().id;
        if to == from && (label == "parent" || label == "contains") {
            if nodes.len() == 1 {
                continue;
            }
            while to == from {
                to = nodes.choose(rng).unwrap().id;
            }
        }
        edges.push(Edge {
            id: EdgeId(id),
            from,
            to,
            label: label.into(),
        });
        if rng.gen_bool(0.3) {
            features.push(FeatureAssignment {
                target: Target::Edge(EdgeId(id)),
                key: "role".into(),
                value: ["subj", "obj", "a b"].choose(rng).unwrap().to_string(),
            });
        }
    }

    // declare some otypes, in some order; leave others undeclared
    let mut declared: Vec<String> = otypes
        .iter()
        .filter(|_| rng.gen_bool(0.7))
        .map(|s| s.to_string())
        .collect();
    if rng.gen_bool(0.5) {
        declared.push("word".into());
    }
    declared.shuffle(rng);

    let mut c = LogicalCorpus {
        text: PrimaryText::new(text),
        slots,
        nodes,
        edges,
        features,
        meta: CorpusMeta {
            otypes: declared,
            slot_otype: "word".into(),
            int_features: if keys.contains(&INT_KEY) { vec![INT_KEY.into()] } else { Vec::new() },
            provenance: vec!["generated".into()],
        },
    };
    c.normalize();
    c
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn random_atom(rng: &mut Rng8, keys: &[String], int_keys: &[String]) -> String {
    let key = keys.choose(rng).unwrap();
    let vals = values_for(key);
    let is_int = int_keys.contains(key);
    match rng.gen_range(0..6) {
        0 | 1 => format!("{key}={}", quote(vals.choose(rng).unwrap())),
        2 => format!("{key}<>{}", quote(vals.choose(rng).unwrap())),
        3 => {
            let pat = *["^f", "o", "x$", "^.$", "[aeiou]{2}", "^$"].choose(rng).unwrap();
            format!("{key}~{}", quote(pat))
        }
        4 => {
            let k = rng.gen_range(1..=3);
            let set: Vec<String> = (0..k).map(|_| quote(vals.choose(rng).unwrap())).collect();
            format!("{key} IN ({})", set.join(","))
        }
        _ if is_int => {
            let op = *["<", "<=", ">", ">="].choose(rng).unwrap();
            format!("{key}{op}{}", rng.gen_range(-5..12))
        }
        _ => format!("{key}={}", quote(vals.choose(rng).unwrap())),
    }
}

fn random_constraint(rng: &mut Rng8, keys: &[String], int_keys: &[String], depth: u32) -> String {
    let atom = |rng: &mut Rng8| {
        let a = random_atom(rng, keys, int_keys);
        if rng.gen_bool(0.2) {
            format!("NOT {a}")
        } else {
            a
        }
    };
    match rng.gen_range(0..if depth > 0 { 4 } else { 2 }) {
        0 | 1 => atom(rng),
        2 => format!("{} AND {}", atom(rng), atom(rng)),
        _ => format!(
            "({}) OR {}",
            random_constraint(rng, keys, int_keys, depth - 1),
            atom(rng)
        ),
    }
}

/// A random query over the corpus's otypes and keys: at most `max_blocks`
/// blocks and nesting depth `max_depth`.
pub fn random_query(rng: &mut Rng8, c: &LogicalCorpus, max_blocks: usize, max_depth: usize) -> String {
    let otypes: Vec<String> = c.otypes().into_iter().map(String::from).collect();
    let keys: Vec<String> = c
        .features
        .iter()
        .filter(|f| matches!(f.target, Target::Node(_)))
        .map(|f| f.key.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let int_keys = c.meta.int_features.clone();
    let mut budget = rng.gen_range(1..=max_blocks);

    fn string(
        rng: &mut Rng8,
        budget: &mut usize,
        depth: usize,
        max_depth: usize,
        otypes: &[String],
        keys: &[String],
        int_keys: &[String],
    ) -> String {
        let mut out = String::new();
        let mut first = true;
        while *budget > 0 {
            if !first {
                if rng.gen_bool(0.4) {
                    break;
                }
                out.push_str(match rng.gen_range(0..3) {
                    0 => " ",
                    1 => " .. ",
                    _ => [" .. <= 0 ", " .. <= 1 ", " .. <= 3 "][rng.gen_range(0..3)],
                });
            }
            first = false;
            *budget -= 1;
            out.push('[');
            out.push_str(otypes.choose(rng).unwrap());
            if !keys.is_empty() && rng.gen_bool(0.5) {
                out.push(' ');
                out.push_str(&random_constraint(rng, keys, int_keys, 1));
            }
            if depth + 1 < max_depth && *budget > 0 && rng.gen_bool(0.5) {
                out.push(' ');
                out.push_str(&string(rng, budget, depth + 1, max_depth, otypes, keys, int_keys));
            }
            out.push(']');
        }
        out
    }
    string(rng, &mut budget, 0, max_depth, &otypes, &keys, &int_keys)
}

/// A corpus shaped like a large treebank: `words` slots with text and lex,
/// phrases of 2 words, clauses of 4, sentences of 8, verses of 10, chapters
/// of 500 and books of 50,000, plus phrase-to-clause edges.
pub fn scaled_corpus(words: u32) -> LogicalCorpus {
    let mut text = String::with_capacity(words as usize * 6);
    let mut slots = Vec::with_capacity(words as usize);
    let mut nodes = Vec::new();
    let mut features = Vec::new();
    let mut edges = Vec::new();
    let mut len = 0u32;
    for m in 1..=words {
        let w = WORDS[(m as usize * 7) % 8];
        if m > 1 {
            text.push(' ');
            len += 1;
        }
        let start = len;
        text.push_str(w);
        len += w.len() as u32;
        slots.push(Slot {
            index: m,
            region: Region::new(start, len),
        });
        nodes.push(Node {
            id: NodeId(m),
            otype: "word".into(),
            monads: MonadSet::singleton(m),
        });
        features.push(FeatureAssignment {
            target: Target::Node(NodeId(m)),
            key: "text".into(),
            value: w.into(),
        });
        features.push(FeatureAssignment {
            target: Target::Node(NodeId(m)),
            key: "lex".into(),
            value: format!("{w}{}", m % 97),
        });
    }
    let mut next = words + 1;
    let levels: [(&str, u32); 6] = [
        ("phrase", 2),
        ("clause", 4),
        ("sentence", 8),
        ("verse", 10),
        ("chapter", 500),
        ("book", 50_000),
    ];
    let mut phrase_base = 0;
    let mut clause_base = 0;
    for (otype, size) in levels {
        let base = next;
        let mut start = 1;
        while start <= words {
            let end = (start + size - 1).min(words);
            nodes.push(Node {
                id: NodeId(next),
                otype: otype.into(),
                monads: MonadSet::range(start, end),
            });
            if otype == "phrase" {
                features.push(FeatureAssignment {
                    target: Target::Node(NodeId(next)),
                    key: "typ".into(),
                    value: ["NP", "VP", "PP"][(next % 3) as usize].into(),
                });
            }
            next += 1;
            start = end + 1;
        }
        match otype {
            "phrase" => phrase_base = base,
            "clause" => clause_base = base,
            _ => {}
        }
    }
    for i in 0..(clause_base - phrase_base) {
        edges.push(Edge {
            id: EdgeId(i + 1),
            from: NodeId(phrase_base + i),
            to: NodeId(clause_base + i / 2),
            label: "parent".into(),
        });
    }
    let mut c = LogicalCorpus {
        text: PrimaryText::new(text),
        slots,
        nodes,
        edges,
        features,
        meta: CorpusMeta {
            otypes: ["book", "chapter", "verse", "sentence", "clause", "phrase", "word"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            slot_otype: "word".into(),
            int_features: Vec::new(),
            provenance: vec!["scaled".into()],
        },
    };
    c.normalize();
    c
}

pub const ORDER_OTYPES: &[&str] = &["verse", "clause", "phrase", "word", "gloss_unit"];

/// The ranking used by the order-law checks: a declared prefix plus one
/// undeclared otype.
pub fn order_ranking() -> fabric::model::OtypeRanking {
    let declared: Vec<String> = ORDER_OTYPES[..4].iter().map(|s| s.to_string()).collect();
    fabric::model::OtypeRanking::new(&declared, "word", ORDER_OTYPES.iter().copied())
}

/// A node over at most 8 slots with a small id, so ties on every key occur.
pub fn random_node(rng: &mut Rng8) -> Node {
    let monads = random_monads(rng, 8);
    Node {
        id: NodeId(rng.gen_range(1..6)),
        otype: ORDER_OTYPES.choose(rng).unwrap().to_string(),
        monads,
    }
}
