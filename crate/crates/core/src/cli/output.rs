use std::collections::BTreeSet;
use std::io::Write;
use std::ops::ControlFlow;

use fabric::mql::{self, Cutoff, Match, Outcome};
use fabric::{Corpus, NodeId};
use serde_json::json;

use super::{CliError, Format};

/// Writes matches as they arrive. Every format carries the same rows:
/// match number, block path, node, otype and the passages of that node.
pub struct MatchWriter<'c, W: Write> {
    format: Format,
    corpus: &'c Corpus,
    passage_otype: &'c str,
    out: W,
    count: usize,
    passages: BTreeSet<u32>,
    failed: bool,
}

impl<'c, W: Write> MatchWriter<'c, W> {
    pub fn new(format: Format, corpus: &'c Corpus, passage_otype: &'c str, out: W) -> Self {
        MatchWriter {
            format,
            corpus,
            passage_otype,
            out,
            count: 0,
            passages: BTreeSet::new(),
            failed: false,
        }
    }

    /// Set when the output could not be written (e.g. a closed pipe).
    pub fn failed(&self) -> bool {
        self.failed
    }

    fn put(&mut self, s: &str) {
        if !self.failed && self.out.write_all(s.as_bytes()).is_err() {
            self.failed = true;
        }
    }

    pub fn begin(&mut self) -> Result<(), CliError> {
        match self.format {
            Format::Tsv => self.put("# match\tpath\tnode\totype\tpassage\n"),
            Format::Json => self.put("{\"matches\": ["),
            Format::Text => {}
        }
        Ok(())
    }

    fn passage_ref(&self, ps: &[NodeId]) -> String {
        if ps.is_empty() {
            "-".to_string()
        } else {
            ps.iter().map(NodeId::to_string).collect::<Vec<_>>().join(",")
        }
    }

    pub fn write_match(&mut self, m: &Match) -> ControlFlow<()> {
        self.count += 1;
        let n = self.count;
        let c = self.corpus;
        let rows: Vec<(String, NodeId, &str, Vec<NodeId>)> = m
            .nodes()
            .into_iter()
            .map(|(path, node)| {
                let ps = mql::passages(c, &[node], self.passage_otype);
                (path, node, c.otype(node).unwrap_or("?"), ps)
            })
            .collect();
        for o in m.outermost() {
            for p in mql::passages(c, &[o], self.passage_otype) {
                self.passages.insert(p.0);
            }
        }
        let mut s = String::new();
        match self.format {
            Format::Tsv => {
                for (path, node, otype, ps) in &rows {
                    s += &format!("{n}\t{path}\t{node}\t{otype}\t{}\n", self.passage_ref(ps));
                }
            }
            Format::Json => {
                let nodes: Vec<_> = rows
                    .iter()
                    .map(|(path, node, otype, ps)| {
                        json!({ "path": path, "node": node.0, "otype": otype, "passages": ps.iter().map(|p| p.0).collect::<Vec<_>>() })
                    })
                    .collect();
                if n > 1 {
                    s.push(',');
                }
                s += "\n  ";
                s += &json!({ "match": n, "nodes": nodes }).to_string();
            }
            Format::Text => {
                s += &format!("match {n}\n");
                for (path, node, otype, ps) in &rows {
                    let indent = "  ".repeat(path.matches('.').count());
                    s += &format!(
                        "  {indent}{path:<6} {node:<8} {otype:<10} {:<10} {}\n",
                        self.passage_ref(ps),
                        c.text_of(*node)
                    );
                }
            }
        }
        self.put(&s);
        if self.failed {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }

    pub fn finish(&mut self, outcome: &Outcome) -> Result<(), CliError> {
        let cutoff = outcome.cutoff.map(|c| match c {
            Cutoff::MaxMatches => "max_matches",
            Cutoff::Timeout => "timeout",
            Cutoff::Cancelled => "interrupted",
        });
        let s = match self.format {
            Format::Tsv => match cutoff {
                Some(why) => format!("# partial: {why} after {} matches\n", outcome.matches),
                None => String::new(),
            },
            Format::Json => {
                let passages: Vec<u32> = self.passages.iter().copied().collect();
                format!(
                    "{}],\n\"total\": {},\n\"cutoff\": {},\n\"passages\": {}}}\n",
                    if outcome.matches > 0 { "\n" } else { "" },
                    outcome.matches,
                    json!(cutoff),
                    json!(passages)
                )
            }
            Format::Text => {
                let plural = if outcome.matches == 1 { "" } else { "es" };
                let ps = if self.passages.len() == 1 { "" } else { "s" };
                let mut s = format!("{} match{plural} in {} passage{ps}", outcome.matches, self.passages.len());
                if let Some(why) = cutoff {
                    s += &format!(" (partial: {why})");
                }
                s + "\n"
            }
        };
        self.put(&s);
        let _ = self.out.flush();
        Ok(())
    }
}
