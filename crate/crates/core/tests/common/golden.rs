//! Renders TOY4 facts in the line formats of `tests/golden/toy4/*.txt`.

use std::cmp::Ordering;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use fabric::annotations::{paginate, snapshot, AnnotationStore, MarginFilter, QueryMeta};
use fabric::compiler::compile_to_bytes;
use fabric::featuredoc::{feature_frequency, render_docs};
use fabric::model::{canonical_compare, embeds, sequence_before, MonadSet, Node};
use fabric::mql::{self, parse, BlockString, EvalOptions, MatchTree};
use fabric::toy::toy4;
use fabric::{parse_graf, parse_tabular, Corpus, NodeId};

pub const FILES: &[&str] = &[
    "stats", "order", "traversal", "ingest", "parse", "queries", "explain", "frequency", "featuredocs",
    "annotations", "pagination",
];

pub fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/toy4")
}

pub fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/toy4")
}

fn ids(ns: &[NodeId]) -> String {
    ns.iter().map(NodeId::to_string).collect::<Vec<_>>().join(" ")
}

fn tree(t: &MatchTree) -> String {
    if t.children.is_empty() {
        t.node.to_string()
    } else {
        let kids: Vec<String> = t.children.iter().map(tree).collect();
        format!("{}({})", t.node, kids.join(" "))
    }
}

fn outline(bs: &BlockString, depth: usize, out: &mut String) {
    for b in &bs.blocks {
        let _ = write!(out, "{}{}", "  ".repeat(depth), b.otype);
        if let Some(c) = &b.constraint {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
        if let Some(k) = &b.children {
            outline(k, depth + 1, out);
        }
    }
}

fn toy_node(id: u32) -> Node {
    toy4().nodes.into_iter().find(|n| n.id == NodeId(id)).unwrap()
}

pub fn render(name: &str) -> String {
    let c = Corpus::from_logical(&toy4()).unwrap();
    let mut out = String::new();
    let o = &mut out;
    match name {
        "stats" => {
            let s = c.stats();
            let _ = writeln!(o, "words {}\nnodes {}\nfeatures {}\nedges {}", s.words, s.nodes, s.features, s.edges);
            let _ = writeln!(o, "slots {}", c.slot_count());
        }
        "order" => {
            let all: Vec<NodeId> = c.nodes(None).collect();
            let words: Vec<NodeId> = c.nodes(Some("word")).collect();
            let _ = writeln!(o, "all: {}\nword: {}", ids(&all), ids(&words));
            let first = |a: u32, b: u32| match canonical_compare(&toy_node(a), &toy_node(b), c.ranking()) {
                Ordering::Less => toy_node(a).otype,
                _ => toy_node(b).otype,
            };
            let _ = writeln!(o, "clause {{1-4}} vs phrase {{1-3}}: {} first", first(201, 101));
            let _ = writeln!(o, "word {{2}} vs clause {{1-4}}: {} first", first(2, 201));
            let _ = writeln!(o, "clause {{1-4}} embeds word {{3}}: {}", embeds(&toy_node(201), &toy_node(3)));
            let _ = writeln!(o, "phrase {{1-3}} embeds word {{4}}: {}", embeds(&toy_node(101), &toy_node(4)));
            let before = sequence_before(&toy_node(201).monads, &toy_node(101).monads);
            let _ = writeln!(o, "clause {{1-4}} before phrase {{1-3}}: {before}");
        }
        "traversal" => {
            let _ = writeln!(o, "feature n3 text: {}", c.feature(NodeId(3), "text").unwrap());
            let _ = writeln!(o, "feature n101 typ: {}", c.feature(NodeId(101), "typ").unwrap());
            let _ = writeln!(o, "up n3: {}", ids(&c.up(NodeId(3), None)));
            let _ = writeln!(o, "down n101 word: {}", ids(&c.down(NodeId(101), Some("word"))));
            let _ = writeln!(o, "text n101: {}", c.text_of(NodeId(101)));
            let mut gappy = toy4();
            gappy.nodes.push(Node {
                id: NodeId(401),
                otype: "phrase".into(),
                monads: MonadSet::from_monads([1, 3]).unwrap(),
            });
            gappy.normalize();
            let g = Corpus::from_logical(&gappy).unwrap();
            let _ = writeln!(o, "text {{1,3}}: {}", g.text_of(NodeId(401)));
        }
        "ingest" => {
            let g = parse_graf(data().join("graf/header.txt")).unwrap();
            let t = parse_tabular(data().join("tabular")).unwrap();
            let _ = writeln!(
                o,
                "graf: {} slots, {} nodes, {} features, {} edges",
                g.slots.len(),
                g.nodes.len(),
                g.features.len(),
                g.edges.len()
            );
            let _ = writeln!(o, "tabular equals graf: {}", t == g);
            let (_, summary) = compile_to_bytes(&g).unwrap();
            let _ = writeln!(o, "image: {} nodes, {} slots", summary.nodes, summary.slots);
            let mut dicts: Vec<_> = summary.dictionaries.iter().collect();
            dicts.sort_by(|a, b| a.key.cmp(&b.key));
            for d in dicts {
                let _ = writeln!(o, "dictionary {}: {} values", d.key, d.values);
            }
        }
        "parse" => {
            let q = parse(r#"[phrase typ="NP" [word lex="fox"]]"#).unwrap();
            let _ = writeln!(o, "{q}");
            outline(&q.root, 0, o);
        }
        "queries" => {
            for text in [
                r#"[clause [phrase typ="NP"] [phrase typ="VP"]]"#,
                r#"[word text="the"] .. [word text="jumps"]"#,
                r#"[word text="the"] [word text="jumps"]"#,
                r#"[word lex="fox"]"#,
            ] {
                let rs = mql::run(&c, text, &EvalOptions::default()).unwrap();
                let _ = writeln!(o, "{text}");
                if rs.matches.is_empty() {
                    let _ = writeln!(o, "  no matches");
                    continue;
                }
                for m in &rs.matches {
                    let blocks: Vec<String> = m.blocks.iter().map(tree).collect();
                    let _ = writeln!(o, "  {}", blocks.join(" "));
                }
                let _ = writeln!(o, "  passages: {}", ids(&rs.passages));
            }
        }
        "explain" => {
            for text in [r#"[word lex="fox"]"#, "[word]"] {
                let _ = write!(o, "{text}\n{}", mql::explain(&parse(text).unwrap(), &c));
            }
        }
        "frequency" => {
            for (otype, key) in [("phrase", "typ"), ("word", "lex")] {
                let t = feature_frequency(&c, otype, key).unwrap();
                let rows: Vec<String> = t.rows.iter().map(|(v, n)| format!("{v} {n}")).collect();
                let _ = writeln!(o, "{otype}.{key}: {} (total {})", rows.join(", "), t.total);
            }
        }
        "featuredocs" => {
            let tmp = tempfile::tempdir().unwrap();
            for f in render_docs(&c, tmp.path()).unwrap() {
                let _ = writeln!(o, "{}", f.file_name().unwrap().to_string_lossy());
            }
        }
        "annotations" => {
            let text = r#"[word lex="fox"]"#;
            let (entries, matches) = snapshot(&c, text, "verse").unwrap();
            for e in &entries {
                let _ = writeln!(o, "snapshot {text}: {} [{}]", e.passage, ids(&e.nodes));
            }
            let _ = writeln!(o, "matches {matches}, verses {}", entries.len());
            let mut store = AnnotationStore::new(c.fingerprint());
            store.save_query(&c, QueryMeta::new("fox", "ann"), text).unwrap();
            for m in store.margin(&c, NodeId(301), &MarginFilter::default()).unwrap() {
                let _ = writeln!(o, "margin n301: {} / {}: {}", m.query.author, m.query.name, ids(&m.nodes));
            }
        }
        "pagination" => {
            for total in [12_835, 25, 26, 0] {
                let nav = paginate(total, 1, 25).unwrap();
                if nav.total_pages == 0 {
                    let _ = writeln!(o, "{total} / 25: 0 pages");
                    continue;
                }
                let last = paginate(total, nav.total_pages, 25).unwrap();
                let _ = writeln!(
                    o,
                    "{total} / 25: {} pages, last page {} entries",
                    nav.total_pages,
                    last.range.len()
                );
            }
        }
        other => panic!("no golden file {other}"),
    }
    out
}

/// Names of golden files whose rendering differs from the checked-in text.
pub fn mismatches() -> Vec<(String, String, String)> {
    FILES
        .iter()
        .filter_map(|name| {
            let expected = std::fs::read_to_string(dir().join(format!("{name}.txt"))).unwrap();
            let got = render(name);
            (got != expected).then(|| (name.to_string(), expected, got))
        })
        .collect()
}
