//! Tab-separated directory format.
//!
//! ```text
//! text.txt       raw UTF-8 primary text
//! slots.tsv      slot_index  start  end
//! nodes.tsv      node_id     otype  monadset
//! features.tsv   kind        target_id  key  value
//! edges.tsv      edge_id     from   to   label        (optional)
//! meta.txt       key=value lines: otypes, slot_otype, int_features, provenance (optional)
//! ```
//!
//! Every `.tsv` starts with a header line of column names; lines starting
//! with `#` are comments. Feature values escape tab, newline, carriage
//! return and backslash as `\t`, `\n`, `\r`, `\\`.

use std::fs;
use std::path::Path;

use super::validate::{IssueCode, Location, Origins, ValidationReport};
use super::{apply_meta_line, validate_with_origins, IngestError, LogicalCorpus};
use crate::model::{
    CorpusMeta, Edge, EdgeId, FeatureAssignment, MonadSet, MonadSetError, Node, NodeId,
    PrimaryText, Region, Slot, Target,
};

pub(crate) const SLOTS_HEADER: &[&str] = &["slot_index", "start", "end"];
pub(crate) const NODES_HEADER: &[&str] = &["node_id", "otype", "monadset"];
pub(crate) const FEATURES_HEADER: &[&str] = &["kind", "target_id", "key", "value"];
pub(crate) const EDGES_HEADER: &[&str] = &["edge_id", "from", "to", "label"];

struct Table {
    file: String,
    rows: Vec<(u32, Vec<String>)>,
}

fn read_table(dir: &Path, name: &str, header: &[&str]) -> Result<Table, IngestError> {
    let path = dir.join(name);
    let content = fs::read_to_string(&path).map_err(|e| IngestError::io(&path, e))?;
    let file = path.display().to_string();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (i, line) in content.lines().enumerate() {
        let lineno = i as u32 + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<String> = line.splitn(header.len(), '\t').map(str::to_string).collect();
        if !saw_header {
            let found: Vec<&str> = cols.iter().map(|c| c.trim()).collect();
            if found != header {
                return Err(IngestError::Syntax {
                    file,
                    line: lineno,
                    message: format!(
                        "expected header `{}`, found `{}`",
                        header.join("\\t"),
                        line
                    ),
                });
            }
            saw_header = true;
            continue;
        }
        if cols.len() != header.len() {
            return Err(IngestError::Syntax {
                file,
                line: lineno,
                message: format!("expected {} columns, found {}", header.len(), cols.len()),
            });
        }
        rows.push((lineno, cols));
    }
    if !saw_header {
        return Err(IngestError::Syntax {
            file,
            line: 0,
            message: "missing header line".into(),
        });
    }
    Ok(Table { file, rows })
}

pub(crate) fn escape_value(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    for c in v.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_value(v: &str) -> Result<String, String> {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

/// Reads a corpus from a tabular directory.
pub fn parse_tabular(dir: impl AsRef<Path>) -> Result<LogicalCorpus, IngestError> {
    let dir = dir.as_ref();
    let text_path = dir.join("text.txt");
    let text = fs::read_to_string(&text_path).map_err(|e| IngestError::io(&text_path, e))?;

    let mut meta = CorpusMeta::default();
    let meta_path = dir.join("meta.txt");
    if meta_path.exists() {
        let content = fs::read_to_string(&meta_path).map_err(|e| IngestError::io(&meta_path, e))?;
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ok = line
                .split_once('=')
                .is_some_and(|(k, v)| apply_meta_line(&mut meta, k.trim(), v.trim()));
            if !ok {
                return Err(IngestError::Syntax {
                    file: meta_path.display().to_string(),
                    line: i as u32 + 1,
                    message: format!("unrecognized metadata line `{line}`"),
                });
            }
        }
    }

    let mut report = ValidationReport::default();
    let mut origins = Origins::default();
    let syntax = |file: &str, line: u32, message: String| IngestError::Syntax {
        file: file.to_string(),
        line,
        message,
    };
    let num = |file: &str, line: u32, s: &str, what: &str| -> Result<u32, IngestError> {
        s.trim()
            .parse()
            .map_err(|_| syntax(file, line, format!("bad {what} `{s}`")))
    };

    let t = read_table(dir, "slots.tsv", SLOTS_HEADER)?;
    let mut slots = Vec::with_capacity(t.rows.len());
    for (line, cols) in &t.rows {
        let index = num(&t.file, *line, &cols[0], "slot index")?;
        let start = num(&t.file, *line, &cols[1], "start offset")?;
        let end = num(&t.file, *line, &cols[2], "end offset")?;
        origins.slots.insert(index, Location::new(t.file.clone(), *line));
        slots.push(Slot {
            index,
            region: Region::new(start, end),
        });
    }

    let t = read_table(dir, "nodes.tsv", NODES_HEADER)?;
    let mut nodes = Vec::with_capacity(t.rows.len());
    for (line, cols) in &t.rows {
        let loc = Location::new(t.file.clone(), *line);
        let id: NodeId = cols[0].trim().parse().map_err(|e| syntax(&t.file, *line, e))?;
        let monads = match cols[2].parse::<MonadSet>() {
            Ok(m) => m,
            Err(MonadSetError::Empty) => {
                report.error(IssueCode::EmptyMonads, loc, format!("node {id} has no monads"));
                continue;
            }
            Err(MonadSetError::Zero) => {
                report.error(IssueCode::MonadOutOfRange, loc, format!("node {id}: monad 0 does not exist"));
                continue;
            }
            Err(MonadSetError::MalformedRange(r)) => {
                report.error(
                    IssueCode::MalformedMonads,
                    loc,
                    format!("node {id}: malformed monad range `{r}`"),
                );
                continue;
            }
        };
        origins.nodes.insert(id, loc);
        nodes.push(Node {
            id,
            otype: cols[1].trim().to_string(),
            monads,
        });
    }

    let mut edges = Vec::new();
    if dir.join("edges.tsv").exists() {
        let t = read_table(dir, "edges.tsv", EDGES_HEADER)?;
        for (line, cols) in &t.rows {
            let id: EdgeId = cols[0].trim().parse().map_err(|e| syntax(&t.file, *line, e))?;
            let from: NodeId = cols[1].trim().parse().map_err(|e| syntax(&t.file, *line, e))?;
            let to: NodeId = cols[2].trim().parse().map_err(|e| syntax(&t.file, *line, e))?;
            origins.edges.insert(id, Location::new(t.file.clone(), *line));
            edges.push(Edge {
                id,
                from,
                to,
                label: cols[3].clone(),
            });
        }
    }

    let t = read_table(dir, "features.tsv", FEATURES_HEADER)?;
    let mut features = Vec::with_capacity(t.rows.len());
    for (line, cols) in &t.rows {
        let target = match cols[0].trim() {
            "N" => Target::Node(cols[1].trim().parse().map_err(|e| syntax(&t.file, *line, e))?),
            "E" => Target::Edge(cols[1].trim().parse().map_err(|e| syntax(&t.file, *line, e))?),
            other => {
                return Err(syntax(&t.file, *line, format!("feature kind must be N or E, found `{other}`")))
            }
        };
        let key = cols[2].trim().to_string();
        let value = unescape_value(&cols[3]).map_err(|e| syntax(&t.file, *line, e))?;
        origins
            .features
            .entry((target, key.clone()))
            .or_insert_with(|| Location::new(t.file.clone(), *line));
        features.push(FeatureAssignment { target, key, value });
    }

    let mut corpus = LogicalCorpus {
        text: PrimaryText::new(text),
        slots,
        nodes,
        edges,
        features,
        meta,
    };
    corpus.normalize();
    report.merge(validate_with_origins(&corpus, &origins));
    report.sort();
    if report.is_ok() {
        Ok(corpus)
    } else {
        Err(IngestError::Invalid(report))
    }
}
