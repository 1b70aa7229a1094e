//! GrAF-subset XML reader.
//!
//! A header file (`key=value` lines) names the primary text and the
//! annotation files. Annotation files contain `region`, `node` (with `link`
//! children or a `monads` attribute), `edge` and `a`/`f` elements.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::validate::{IssueCode, Location, Origins, ValidationReport};
use super::{apply_meta_line, validate_with_origins, IngestError, LogicalCorpus};
use crate::model::{
    CorpusMeta, Edge, EdgeId, FeatureAssignment, MonadSet, Node, NodeId, PrimaryText, Region,
    Slot, Target,
};

#[derive(Debug)]
struct RawRegion {
    id: String,
    region: Region,
    loc: Location,
}

#[derive(Debug)]
struct RawNode {
    id: String,
    otype: Option<String>,
    monads: Option<String>,
    links: Vec<String>,
    loc: Location,
}

#[derive(Debug)]
struct RawEdge {
    id: String,
    from: String,
    to: String,
    label: String,
    loc: Location,
}

#[derive(Debug)]
struct RawAnnotation {
    target: String,
    features: Vec<(String, String)>,
    loc: Location,
}

#[derive(Debug, Default)]
struct FileGraph {
    regions: Vec<RawRegion>,
    nodes: Vec<RawNode>,
    edges: Vec<RawEdge>,
    annotations: Vec<RawAnnotation>,
}

struct Header {
    text: PathBuf,
    annotations: Vec<PathBuf>,
    meta: CorpusMeta,
}

fn read_header(path: &Path) -> Result<Header, IngestError> {
    let content = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let file = path.display().to_string();
    let mut text = None;
    let mut annotations = Vec::new();
    let mut meta = CorpusMeta::default();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(IngestError::Syntax {
                file,
                line: i as u32 + 1,
                message: format!("expected key=value, found `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "text" => text = Some(base.join(value)),
            "annotations" => annotations.extend(
                value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|p| base.join(p)),
            ),
            _ => {
                if !apply_meta_line(&mut meta, key, value) {
                    return Err(IngestError::Syntax {
                        file,
                        line: i as u32 + 1,
                        message: format!("unknown header key `{key}`"),
                    });
                }
            }
        }
    }
    let text = text.ok_or_else(|| IngestError::Syntax {
        file: file.clone(),
        line: 0,
        message: "header has no `text=` entry".into(),
    })?;
    Ok(Header {
        text,
        annotations,
        meta,
    })
}

/// Tracks line numbers for monotonically increasing byte positions.
struct LineCounter<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
}

impl LineCounter<'_> {
    fn line_at(&mut self, pos: usize) -> u32 {
        let pos = pos.min(self.src.len());
        if pos > self.pos {
            self.line += self.src[self.pos..pos].iter().filter(|&&b| b == b'\n').count() as u32;
            self.pos = pos;
        }
        self.line
    }
}

fn attrs(e: &BytesStart<'_>, file: &str, line: u32) -> Result<HashMap<String, String>, IngestError> {
    let mut out = HashMap::new();
    for a in e.attributes() {
        let a = a.map_err(|err| IngestError::Syntax {
            file: file.to_string(),
            line,
            message: err.to_string(),
        })?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a
            .unescape_value()
            .map_err(|err| IngestError::Syntax {
                file: file.to_string(),
                line,
                message: err.to_string(),
            })?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn parse_annotation_file(path: &Path) -> Result<FileGraph, IngestError> {
    let content = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    let file = path.display().to_string();
    let mut reader = Reader::from_str(&content);
    reader.config_mut().trim_text(true);
    let mut lines = LineCounter {
        src: content.as_bytes(),
        pos: 0,
        line: 1,
    };
    let mut g = FileGraph::default();
    let mut seen_root = false;
    let mut open_node: Option<RawNode> = None;
    let mut open_annotation: Option<RawAnnotation> = None;
    let syntax = |line: u32, message: String| IngestError::Syntax {
        file: file.clone(),
        line,
        message,
    };

    loop {
        let start_pos = reader.buffer_position() as usize;
        let event = reader.read_event().map_err(|err| {
            let line = lines.line_at(reader.error_position() as usize);
            syntax(line, err.to_string())
        })?;
        // the event starts at the first non-whitespace byte after start_pos
        let ev_pos = content.as_bytes()[start_pos..]
            .iter()
            .position(|b| !b.is_ascii_whitespace())
            .map_or(start_pos, |p| start_pos + p);
        let line = lines.line_at(ev_pos);
        let (element, is_empty) = match &event {
            Event::Start(e) => (Some(e), false),
            Event::Empty(e) => (Some(e), true),
            Event::End(e) => {
                match e.name().as_ref() {
                    b"node" => {
                        if let Some(n) = open_node.take() {
                            g.nodes.push(n);
                        }
                    }
                    b"a" => {
                        if let Some(a) = open_annotation.take() {
                            g.annotations.push(a);
                        }
                    }
                    _ => {}
                }
                continue;
            }
            Event::Eof => break,
            _ => continue,
        };
        let e = element.expect("start or empty");
        let name = e.name();
        if !seen_root {
            if name.as_ref() != b"graph" {
                return Err(syntax(
                    line,
                    format!(
                        "root element must be <graph>, found <{}>",
                        String::from_utf8_lossy(name.as_ref())
                    ),
                ));
            }
            seen_root = true;
            continue;
        }
        let loc = Location::new(file.clone(), line);
        let a = attrs(e, &file, line)?;
        let req = |k: &str| -> Result<String, IngestError> {
            a.get(k).cloned().ok_or_else(|| {
                syntax(
                    line,
                    format!(
                        "<{}> lacks required attribute `{k}`",
                        String::from_utf8_lossy(name.as_ref())
                    ),
                )
            })
        };
        match name.as_ref() {
            b"region" => {
                let id = req("xml:id")?;
                let anchors = req("anchors")?;
                let nums: Vec<u32> = anchors
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|_| syntax(line, format!("bad anchors `{anchors}`")))?;
                let [start, end] = nums[..] else {
                    return Err(syntax(line, format!("region needs two anchors, got `{anchors}`")));
                };
                g.regions.push(RawRegion {
                    id,
                    region: Region::new(start, end),
                    loc,
                });
            }
            b"node" => {
                let n = RawNode {
                    id: req("xml:id")?,
                    otype: a.get("otype").cloned(),
                    monads: a.get("monads").cloned(),
                    links: Vec::new(),
                    loc,
                };
                if is_empty {
                    g.nodes.push(n);
                } else {
                    open_node = Some(n);
                }
            }
            b"link" => {
                let targets = req("targets")?;
                match open_node.as_mut() {
                    Some(n) => n.links.extend(targets.split_whitespace().map(str::to_string)),
                    None => return Err(syntax(line, "<link> outside <node>".into())),
                }
            }
            b"edge" => g.edges.push(RawEdge {
                id: req("xml:id")?,
                from: req("from")?,
                to: req("to")?,
                label: a.get("label").cloned().unwrap_or_default(),
                loc,
            }),
            b"a" => {
                let ann = RawAnnotation {
                    target: req("ref")?,
                    features: Vec::new(),
                    loc,
                };
                if is_empty {
                    g.annotations.push(ann);
                } else {
                    open_annotation = Some(ann);
                }
            }
            b"f" => {
                let key = req("name")?;
                let value = a.get("value").cloned().unwrap_or_default();
                match open_annotation.as_mut() {
                    Some(ann) => ann.features.push((key, value)),
                    None => return Err(syntax(line, "<f> outside <a>".into())),
                }
            }
            // <fs> wrappers and header elements carry nothing we need
            _ => {}
        }
    }
    if !seen_root {
        return Err(syntax(lines.line, "no <graph> root element".into()));
    }
    Ok(g)
}

/// Reads a GrAF-subset corpus from its header file.
pub fn parse_graf(header_path: impl AsRef<Path>) -> Result<LogicalCorpus, IngestError> {
    let header = read_header(header_path.as_ref())?;
    let text = fs::read_to_string(&header.text).map_err(|e| IngestError::io(&header.text, e))?;
    let text = PrimaryText::new(text);

    let graphs: Vec<Result<FileGraph, IngestError>> = std::thread::scope(|s| {
        let handles: Vec<_> = header
            .annotations
            .iter()
            .map(|p| s.spawn(move || parse_annotation_file(p)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("annotation parser panicked"))
            .collect()
    });
    let graphs = graphs.into_iter().collect::<Result<Vec<_>, _>>()?;
    assemble(text, graphs, header.meta)
}

enum IdKind {
    Region(usize),
    Node(NodeId),
    Edge(EdgeId),
}

fn assemble(
    text: PrimaryText,
    graphs: Vec<FileGraph>,
    meta: CorpusMeta,
) -> Result<LogicalCorpus, IngestError> {
    let mut report = ValidationReport::default();
    let mut origins = Origins::default();
    let mut ids: HashMap<String, IdKind> = HashMap::new();
    let mut regions: Vec<RawRegion> = Vec::new();
    let mut raw_nodes = Vec::new();
    let mut raw_edges = Vec::new();
    let mut annotations = Vec::new();
    for g in graphs {
        regions.extend(g.regions);
        raw_nodes.extend(g.nodes);
        raw_edges.extend(g.edges);
        annotations.extend(g.annotations);
    }

    let dup = |report: &mut ValidationReport, id: &str, loc: &Location| {
        report.error(IssueCode::DuplicateId, loc.clone(), format!("duplicate xml:id `{id}`"));
    };
    for (i, r) in regions.iter().enumerate() {
        if ids.contains_key(&r.id) {
            dup(&mut report, &r.id, &r.loc);
            continue;
        }
        ids.insert(r.id.clone(), IdKind::Region(i));
        if r.region.end > text.len() || r.region.start >= r.region.end {
            report.error(
                IssueCode::RegionOutOfBounds,
                r.loc.clone(),
                format!(
                    "region {} anchors {} {} outside text of length {}",
                    r.id,
                    r.region.start,
                    r.region.end,
                    text.len()
                ),
            );
        }
    }
    let bad_id = |raw: &str, loc: &Location, what: &str| IngestError::Syntax {
        file: loc.file.clone(),
        line: loc.line,
        message: format!("{what} id `{raw}`"),
    };
    let mut node_ids = Vec::with_capacity(raw_nodes.len());
    for n in &raw_nodes {
        let id: NodeId = n.id.parse().map_err(|e: String| bad_id(&n.id, &n.loc, &e))?;
        node_ids.push(id);
        if ids.contains_key(&n.id) {
            dup(&mut report, &n.id, &n.loc);
        } else {
            ids.insert(n.id.clone(), IdKind::Node(id));
        }
        origins.nodes.insert(id, n.loc.clone());
    }
    let mut edge_ids = Vec::with_capacity(raw_edges.len());
    for e in &raw_edges {
        let id: EdgeId = e.id.parse().map_err(|err: String| bad_id(&e.id, &e.loc, &err))?;
        edge_ids.push(id);
        if ids.contains_key(&e.id) {
            dup(&mut report, &e.id, &e.loc);
        } else {
            ids.insert(e.id.clone(), IdKind::Edge(id));
        }
        origins.edges.insert(id, e.loc.clone());
    }

    let mut used_region = vec![false; regions.len()];
    let mut resolve_links = |n: &RawNode, report: &mut ValidationReport| -> Vec<usize> {
        let mut out = Vec::new();
        for l in &n.links {
            match ids.get(l) {
                Some(IdKind::Region(i)) => {
                    used_region[*i] = true;
                    out.push(*i);
                }
                _ => report.error(
                    IssueCode::UnknownRegion,
                    n.loc.clone(),
                    format!("node {} links to unknown region `{l}`", n.id),
                ),
            }
        }
        out
    };

    // slot nodes: linked nodes of the slot otype, numbered by region order
    let mut slot_nodes: Vec<(Region, usize)> = Vec::new();
    let mut linked_others: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, n) in raw_nodes.iter().enumerate() {
        if n.links.is_empty() {
            continue;
        }
        let is_slot = n.otype.as_deref().is_none_or(|o| o == meta.slot_otype);
        let linked = resolve_links(n, &mut report);
        if is_slot {
            if n.links.len() != 1 {
                report.error(
                    IssueCode::SlotNodeArity,
                    n.loc.clone(),
                    format!("slot node {} must link exactly one region", n.id),
                );
            } else if let Some(&r) = linked.first() {
                slot_nodes.push((regions[r].region, i));
            }
        } else {
            linked_others.push((i, linked));
        }
    }
    slot_nodes.sort_by_key(|&(region, i)| (region.start, region.end, node_ids[i]));

    let mut slots = Vec::with_capacity(slot_nodes.len());
    let mut nodes = Vec::with_capacity(raw_nodes.len());
    let mut slot_of_node: HashMap<usize, u32> = HashMap::new();
    for (k, &(region, i)) in slot_nodes.iter().enumerate() {
        let index = k as u32 + 1;
        slots.push(Slot { index, region });
        origins.slots.insert(index, raw_nodes[i].loc.clone());
        slot_of_node.insert(i, index);
    }
    let slot_regions: Vec<Region> = slots.iter().map(|s| s.region).collect();

    let linked_others: HashMap<usize, Vec<usize>> = linked_others.into_iter().collect();
    for (i, n) in raw_nodes.iter().enumerate() {
        let otype = n.otype.clone().unwrap_or_else(|| meta.slot_otype.clone());
        let monads = if let Some(&index) = slot_of_node.get(&i) {
            Some(MonadSet::singleton(index))
        } else if let Some(linked) = linked_others.get(&i) {
            // every slot lying inside one of the linked regions
            let mut covered = Vec::new();
            for &r in linked {
                let outer = regions[r].region;
                let from = slot_regions.partition_point(|sr| sr.start < outer.start);
                covered.extend(
                    slot_regions[from..]
                        .iter()
                        .take_while(|sr| sr.start < outer.end)
                        .enumerate()
                        .filter(|(_, sr)| sr.end <= outer.end)
                        .map(|(k, _)| (from + k) as u32 + 1),
                );
            }
            MonadSet::from_monads(covered).ok()
        } else {
            match n.monads.as_deref().map(str::parse::<MonadSet>) {
                Some(Ok(m)) => Some(m),
                Some(Err(crate::model::MonadSetError::MalformedRange(r))) => {
                    report.error(
                        IssueCode::MalformedMonads,
                        n.loc.clone(),
                        format!("node {}: malformed monad range `{r}`", n.id),
                    );
                    continue;
                }
                Some(Err(crate::model::MonadSetError::Zero)) => {
                    report.error(
                        IssueCode::MonadOutOfRange,
                        n.loc.clone(),
                        format!("node {}: monad 0 does not exist", n.id),
                    );
                    continue;
                }
                Some(Err(crate::model::MonadSetError::Empty)) | None => None,
            }
        };
        match monads {
            Some(monads) => nodes.push(Node {
                id: node_ids[i],
                otype,
                monads,
            }),
            None => report.error(
                IssueCode::EmptyMonads,
                n.loc.clone(),
                format!("node {} has no monads", n.id),
            ),
        }
    }

    for (r, used) in regions.iter().zip(&used_region) {
        if !used {
            report.warning(
                IssueCode::UnusedRegion,
                r.loc.clone(),
                format!("region {} is not linked by any node", r.id),
            );
        }
    }

    let mut edges = Vec::with_capacity(raw_edges.len());
    for (e, id) in raw_edges.iter().zip(edge_ids) {
        let end = |raw: &str| match ids.get(raw) {
            Some(IdKind::Node(n)) => Ok(*n),
            // validation reports the dangling reference
            _ => raw.parse::<NodeId>().map_err(|err| bad_id(raw, &e.loc, &err)),
        };
        edges.push(Edge {
            id,
            from: end(&e.from)?,
            to: end(&e.to)?,
            label: e.label.clone(),
        });
    }

    let mut features = Vec::new();
    for a in annotations {
        let target = match ids.get(&a.target) {
            Some(IdKind::Node(n)) => Target::Node(*n),
            Some(IdKind::Edge(e)) => Target::Edge(*e),
            _ => {
                report.error(
                    IssueCode::DanglingTarget,
                    a.loc.clone(),
                    format!("annotation refers to unknown node or edge `{}`", a.target),
                );
                continue;
            }
        };
        for (key, value) in a.features {
            origins.features.entry((target, key.clone())).or_insert_with(|| a.loc.clone());
            features.push(FeatureAssignment { target, key, value });
        }
    }

    let mut corpus = LogicalCorpus {
        text,
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
