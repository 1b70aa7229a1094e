//! The loaded, read-only corpus and its traversal API.
//!
//! A [`Corpus`] is built from a compiled image in one linear pass. After
//! that every accessor is a lookup or a walk over precomputed arrays:
//! canonical order, per-otype node lists, the slot map, a containment index
//! and the feature stores.
//!
//! ```
//! use fabric::{toy, Corpus, NodeId};
//!
//! let corpus = Corpus::from_logical(&toy::toy4()).unwrap();
//! let words: Vec<_> = corpus.nodes(Some("word")).collect();
//! assert_eq!(words, [NodeId(1), NodeId(2), NodeId(3), NodeId(4)]);
//! assert_eq!(corpus.feature(NodeId(3), "text"), Some("fox"));
//! assert_eq!(corpus.text_of(NodeId(101)), "the quick fox");
//! ```

mod containment;

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::compiler::format::{Dec, Directory, ImageError, SectionId};
use crate::compiler::{compile_to_bytes, CompileError};
use crate::ingest::LogicalCorpus;
use crate::model::{
    CorpusMeta, CorpusStats, Edge, EdgeId, FeatureAssignment, Monads, Node, NodeId, OtypeRanking,
    PrimaryText, Region, Run, Slot, Target, TargetKind,
};
use containment::ContainmentIndex;

/// One feature key's values: targets ascending, values dictionary-coded.
#[derive(Debug)]
pub(crate) struct FeatureStore {
    pub dict: Vec<String>,
    pub targets: Vec<u32>,
    pub codes: Vec<u32>,
    postings: OnceLock<Vec<Vec<u32>>>,
}

impl FeatureStore {
    pub fn get(&self, raw: u32) -> Option<&str> {
        self.targets
            .binary_search(&raw)
            .ok()
            .map(|i| self.dict[self.codes[i] as usize].as_str())
    }

    pub fn code_of(&self, value: &str) -> Option<u32> {
        self.dict.iter().position(|v| v == value).map(|i| i as u32)
    }

    /// Targets carrying dictionary value `code`, ascending. Built on first use.
    pub fn posting(&self, code: u32) -> &[u32] {
        let lists = self.postings.get_or_init(|| {
            let mut lists = vec![Vec::new(); self.dict.len()];
            for (t, c) in self.targets.iter().zip(&self.codes) {
                lists[*c as usize].push(*t);
            }
            lists
        });
        &lists[code as usize]
    }
}

#[derive(Debug, Clone, Copy)]
struct EdgeRec {
    id: EdgeId,
    from: NodeId,
    to: NodeId,
    label: u32,
}

#[derive(Debug)]
pub struct Corpus {
    fingerprint: String,
    meta: CorpusMeta,
    ranking: OtypeRanking,
    text: PrimaryText,
    slots: Vec<Region>,

    otypes: Vec<String>,
    /// Node table, ascending by id. A node's position here is its "index".
    node_ids: Vec<NodeId>,
    node_otype: Vec<u32>,
    node_set: Vec<u32>,
    runs: Vec<Run>,
    set_offsets: Vec<u32>,

    /// Canonical position -> node index, and back.
    canonical: Vec<u32>,
    canon_pos: Vec<u32>,
    first_by_pos: Vec<u32>,
    last_by_pos: Vec<u32>,
    /// Per otype code, canonical positions.
    by_otype: Vec<Vec<u32>>,
    /// Monad -> node index of its slot node (index 0 unused).
    slot_node: Vec<u32>,
    containment: ContainmentIndex,

    edge_labels: Vec<String>,
    edges: Vec<EdgeRec>,
    features: HashMap<(TargetKind, String), FeatureStore>,
}

fn read_section<'a>(dir: &Directory, bytes: &'a [u8], id: SectionId) -> Result<Dec<'a>, ImageError> {
    Ok(Dec::new(dir.section(bytes, id)?, id))
}

impl Corpus {
    /// Loads a compiled image from disk.
    pub fn load(path: impl AsRef<Path>) -> Result<Corpus, ImageError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Corpus::from_bytes(&bytes)
    }

    /// Compiles a logical corpus in memory and loads the result.
    pub fn from_logical(c: &LogicalCorpus) -> Result<Corpus, CompileError> {
        let (bytes, _) = compile_to_bytes(c)?;
        Ok(Corpus::from_bytes(&bytes).expect("freshly compiled image loads"))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Corpus, ImageError> {
        let dir = Directory::parse(bytes)?;
        // check every checksum before decoding anything
        for s in SectionId::ALL {
            dir.section(bytes, s)?;
        }

        let mut d = read_section(&dir, bytes, SectionId::Meta)?;
        let meta = CorpusMeta {
            otypes: d.strs()?,
            slot_otype: d.str()?.to_string(),
            int_features: d.strs()?,
            provenance: d.strs()?,
        };
        d.finish()?;

        let raw_text = dir.section(bytes, SectionId::Text)?;
        let text = std::str::from_utf8(raw_text).map_err(|_| ImageError::Corrupt {
            place: crate::compiler::format::Place::Section(SectionId::Text),
            detail: "primary text is not UTF-8".into(),
        })?;
        let text = PrimaryText::new(text);

        let mut d = read_section(&dir, bytes, SectionId::Slots)?;
        let w = d.u32()? as usize;
        let starts = d.u32s(w)?;
        let ends = d.u32s(w)?;
        d.finish()?;
        let slots: Vec<Region> = starts
            .into_iter()
            .zip(ends)
            .map(|(s, e)| Region::new(s, e))
            .collect();
        if slots.iter().any(|r| r.end > text.len()) {
            return Err(d.corrupt("slot region beyond primary text"));
        }

        let mut d = read_section(&dir, bytes, SectionId::Otypes)?;
        let otypes = d.strs()?;
        d.finish()?;

        let mut d = read_section(&dir, bytes, SectionId::Nodes)?;
        let n = d.u32()? as usize;
        let node_ids: Vec<NodeId> = d.u32s(n)?.into_iter().map(NodeId).collect();
        let node_otype = d.u32s(n)?;
        let node_set = d.u32s(n)?;
        d.finish()?;
        if node_otype.iter().any(|&o| o as usize >= otypes.len()) {
            return Err(d.corrupt("otype code out of range"));
        }
        if node_ids.windows(2).any(|p| p[0] >= p[1]) {
            return Err(d.corrupt("node ids not strictly ascending"));
        }

        let mut d = read_section(&dir, bytes, SectionId::MonadPool)?;
        let sets = d.u32()? as usize;
        let _byte_offsets = d.u32s(sets + 1)?;
        let mut runs: Vec<Run> = Vec::with_capacity(sets);
        let mut set_offsets: Vec<u32> = Vec::with_capacity(sets + 1);
        for _ in 0..sets {
            set_offsets.push(runs.len() as u32);
            let k = d.varint()?;
            if k == 0 {
                return Err(d.corrupt("empty monad set"));
            }
            let mut prev_end = 0u32;
            for _ in 0..k {
                let start = prev_end
                    .checked_add(d.varint()?)
                    .ok_or_else(|| d.corrupt("monad overflow"))?;
                let end = start
                    .checked_add(d.varint()?)
                    .ok_or_else(|| d.corrupt("monad overflow"))?;
                if start == 0 || end as usize > w {
                    return Err(d.corrupt("monad out of range"));
                }
                runs.push(Run::new(start, end));
                prev_end = end;
            }
        }
        set_offsets.push(runs.len() as u32);
        d.finish()?;
        if node_set.iter().any(|&s| s as usize >= sets) {
            return Err(Dec::new(&[], SectionId::Nodes).corrupt("monad set index out of range"));
        }

        let mut d = read_section(&dir, bytes, SectionId::Canonical)?;
        let cn = d.u32()? as usize;
        let canonical = d.u32s(cn)?;
        d.finish()?;
        if cn != n {
            return Err(d.corrupt("canonical order length differs from node count"));
        }
        let mut canon_pos = vec![u32::MAX; n];
        for (pos, &idx) in canonical.iter().enumerate() {
            match canon_pos.get_mut(idx as usize) {
                Some(slot) if *slot == u32::MAX => *slot = pos as u32,
                _ => return Err(d.corrupt("canonical order is not a permutation")),
            }
        }

        let set_runs = |idx: u32| {
            let s = node_set[idx as usize] as usize;
            &runs[set_offsets[s] as usize..set_offsets[s + 1] as usize]
        };
        let first_by_pos: Vec<u32> = canonical.iter().map(|&i| set_runs(i)[0].start).collect();
        let last_by_pos: Vec<u32> = canonical
            .iter()
            .map(|&i| set_runs(i).last().unwrap().end)
            .collect();
        let mut by_otype = vec![Vec::new(); otypes.len()];
        for (pos, &idx) in canonical.iter().enumerate() {
            by_otype[node_otype[idx as usize] as usize].push(pos as u32);
        }
        let slot_code = otypes.iter().position(|o| *o == meta.slot_otype);
        let mut slot_node = vec![u32::MAX; w + 1];
        if let Some(code) = slot_code {
            for &pos in &by_otype[code] {
                let idx = canonical[pos as usize];
                slot_node[first_by_pos[pos as usize] as usize] = idx;
            }
        }
        let containment = ContainmentIndex::new(&last_by_pos);

        let mut d = read_section(&dir, bytes, SectionId::Edges)?;
        let label_count = d.u32()? as usize;
        let mut edge_labels = Vec::with_capacity(label_count);
        let mut edges = Vec::new();
        for l in 0..label_count {
            edge_labels.push(d.str()?.to_string());
            let k = d.u32()? as usize;
            let ids = d.u32s(k)?;
            let from = d.u32s(k)?;
            let to = d.u32s(k)?;
            for i in 0..k {
                edges.push(EdgeRec {
                    id: EdgeId(ids[i]),
                    from: NodeId(from[i]),
                    to: NodeId(to[i]),
                    label: l as u32,
                });
            }
        }
        d.finish()?;
        edges.sort_unstable_by_key(|e| e.id);

        let mut d = read_section(&dir, bytes, SectionId::Features)?;
        let store_count = d.u32()? as usize;
        let mut features = HashMap::with_capacity(store_count);
        for _ in 0..store_count {
            let kind = match d.u8()? {
                0 => TargetKind::Node,
                1 => TargetKind::Edge,
                k => return Err(d.corrupt(format!("unknown feature kind {k}"))),
            };
            let key = d.str()?.to_string();
            let dict = d.strs()?;
            let k = d.u32()? as usize;
            let targets = d.u32s(k)?;
            let codes = d.u32s(k)?;
            if codes.iter().any(|&c| c as usize >= dict.len()) {
                return Err(d.corrupt(format!("value code out of range in `{key}`")));
            }
            features.insert(
                (kind, key),
                FeatureStore {
                    dict,
                    targets,
                    codes,
                    postings: OnceLock::new(),
                },
            );
        }
        d.finish()?;

        let ranking = meta.ranking(otypes.iter().map(String::as_str));
        Ok(Corpus {
            fingerprint: dir.fingerprint().to_string(),
            meta,
            ranking,
            text,
            slots,
            otypes,
            node_ids,
            node_otype,
            node_set,
            runs,
            set_offsets,
            canonical,
            canon_pos,
            first_by_pos,
            last_by_pos,
            by_otype,
            slot_node,
            containment,
            edge_labels,
            edges,
            features,
        })
    }

    /// Identifies the image this corpus was loaded from.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn meta(&self) -> &CorpusMeta {
        &self.meta
    }

    pub fn ranking(&self) -> &OtypeRanking {
        &self.ranking
    }

    pub fn text(&self) -> &str {
        self.text.as_str()
    }

    pub fn slot_count(&self) -> u32 {
        self.slots.len() as u32
    }

    pub fn slot_region(&self, monad: u32) -> Option<Region> {
        monad.checked_sub(1).and_then(|i| self.slots.get(i as usize)).copied()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    /// Otypes present in the corpus, in rank order.
    pub fn otypes(&self) -> &[String] {
        &self.otypes
    }

    pub fn has_otype(&self, otype: &str) -> bool {
        self.otype_code(otype).is_some()
    }

    pub fn stats(&self) -> CorpusStats {
        let words = self
            .otype_code(&self.meta.slot_otype)
            .map_or(0, |c| self.by_otype[c as usize].len());
        CorpusStats {
            words: words as u64,
            nodes: self.node_ids.len() as u64,
            features: self.features.values().map(|s| s.targets.len() as u64).sum(),
            edges: self.edges.len() as u64,
        }
    }

    /// Walks nodes in canonical order, optionally restricted to one otype.
    pub fn nodes(&self, otype: Option<&str>) -> NodeWalk<'_> {
        match otype {
            None => NodeWalk {
                corpus: self,
                positions: Positions::All(0..self.canonical.len() as u32),
                unknown_otype: false,
            },
            Some(o) => match self.otype_code(o) {
                Some(code) => NodeWalk {
                    corpus: self,
                    positions: Positions::List(self.by_otype[code as usize].iter()),
                    unknown_otype: false,
                },
                None => NodeWalk {
                    corpus: self,
                    positions: Positions::List([].iter()),
                    unknown_otype: true,
                },
            },
        }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.index_of(node).is_some()
    }

    pub fn otype(&self, node: NodeId) -> Option<&str> {
        self.index_of(node)
            .map(|i| self.otypes[self.node_otype[i as usize] as usize].as_str())
    }

    pub fn monads(&self, node: NodeId) -> Option<Monads<'_>> {
        self.index_of(node).map(|i| self.monads_of_index(i))
    }

    /// The value of feature `key` on a node or edge, if assigned.
    pub fn feature(&self, target: impl Into<Target>, key: &str) -> Option<&str> {
        let target = target.into();
        self.features
            .get(&(target.kind(), key.to_string()))
            .and_then(|s| s.get(target.raw()))
    }

    /// Feature keys present for nodes or edges, sorted.
    pub fn feature_keys(&self, kind: TargetKind) -> Vec<&str> {
        let mut keys: Vec<&str> = self
            .features
            .keys()
            .filter(|(k, _)| *k == kind)
            .map(|(_, key)| key.as_str())
            .collect();
        keys.sort_unstable();
        keys
    }

    /// Nodes whose monads contain `node`'s monads, in canonical order.
    pub fn up(&self, node: NodeId, otype: Option<&str>) -> Vec<NodeId> {
        let Some(pos) = self.index_of(node).map(|i| self.canon_pos[i as usize]) else {
            return Vec::new();
        };
        let filter = match self.otype_filter(otype) {
            Some(f) => f,
            None => return Vec::new(),
        };
        self.embedders_of_pos(pos)
            .into_iter()
            .filter(|&p| filter.is_none_or(|c| self.otype_code_at(p) == c))
            .map(|p| self.id_at(p))
            .collect()
    }

    /// Nodes whose monads lie within `node`'s monads, in canonical order.
    pub fn down(&self, node: NodeId, otype: Option<&str>) -> Vec<NodeId> {
        let Some(pos) = self.index_of(node).map(|i| self.canon_pos[i as usize]) else {
            return Vec::new();
        };
        let filter = match self.otype_filter(otype) {
            Some(f) => f,
            None => return Vec::new(),
        };
        let outer = self.monads_at(pos);
        let lo = self.first_by_pos.partition_point(|&f| f < outer.first());
        let hi = self.first_by_pos.partition_point(|&f| f <= outer.last());
        (lo as u32..hi as u32)
            .filter(|&p| p != pos && self.last_by_pos[p as usize] <= outer.last())
            .filter(|&p| filter.is_none_or(|c| self.otype_code_at(p) == c))
            .filter(|&p| self.monads_at(p).is_subset_of(outer))
            .map(|p| self.id_at(p))
            .collect()
    }

    /// The text of a node: its slots in order, joined with nothing where
    /// their character regions touch and with a single space elsewhere.
    pub fn text_of(&self, node: NodeId) -> String {
        let Some(monads) = self.monads(node) else {
            return String::new();
        };
        let mut out = String::new();
        let mut prev: Option<Region> = None;
        for m in monads.iter() {
            let region = self.slots[m as usize - 1];
            if let Some(p) = prev {
                if p.end != region.start {
                    out.push(' ');
                }
            }
            out.push_str(self.text.slice(region).unwrap_or_default());
            prev = Some(region);
        }
        out
    }

    /// The slot node at monad `m`.
    pub fn slot_node(&self, m: u32) -> Option<NodeId> {
        self.slot_node
            .get(m as usize)
            .filter(|&&i| i != u32::MAX)
            .map(|&i| self.node_ids[i as usize])
    }

    pub fn edge(&self, id: EdgeId) -> Option<Edge> {
        self.edges
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| self.edge_at(i))
    }

    /// Edges leaving `node`, optionally with one label, ordered by id.
    pub fn edges_from(&self, node: NodeId, label: Option<&str>) -> Vec<Edge> {
        self.edges_where(|e| e.from == node, label)
    }

    /// Edges arriving at `node`, optionally with one label, ordered by id.
    pub fn edges_to(&self, node: NodeId, label: Option<&str>) -> Vec<Edge> {
        self.edges_where(|e| e.to == node, label)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn edges_where(&self, pred: impl Fn(&EdgeRec) -> bool, label: Option<&str>) -> Vec<Edge> {
        let code = match label {
            Some(l) => match self.edge_labels.iter().position(|x| x == l) {
                Some(c) => Some(c as u32),
                None => return Vec::new(),
            },
            None => None,
        };
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| pred(e) && code.is_none_or(|c| e.label == c))
            .map(|(i, _)| self.edge_at(i))
            .collect()
    }

    fn edge_at(&self, i: usize) -> Edge {
        let e = self.edges[i];
        Edge {
            id: e.id,
            from: e.from,
            to: e.to,
            label: self.edge_labels[e.label as usize].clone(),
        }
    }

    /// Rebuilds the logical corpus this image was compiled from.
    pub fn to_logical(&self) -> LogicalCorpus {
        let slots = self
            .slots
            .iter()
            .enumerate()
            .map(|(i, &region)| Slot {
                index: i as u32 + 1,
                region,
            })
            .collect();
        let nodes = (0..self.node_ids.len() as u32)
            .map(|i| Node {
                id: self.node_ids[i as usize],
                otype: self.otypes[self.node_otype[i as usize] as usize].clone(),
                monads: self.monads_of_index(i).to_owned(),
            })
            .collect();
        let edges = (0..self.edges.len()).map(|i| self.edge_at(i)).collect();
        let mut features = Vec::with_capacity(self.stats().features as usize);
        for ((kind, key), store) in &self.features {
            for (t, c) in store.targets.iter().zip(&store.codes) {
                features.push(FeatureAssignment {
                    target: match kind {
                        TargetKind::Node => Target::Node(NodeId(*t)),
                        TargetKind::Edge => Target::Edge(EdgeId(*t)),
                    },
                    key: key.clone(),
                    value: store.dict[*c as usize].clone(),
                });
            }
        }
        let mut c = LogicalCorpus {
            text: self.text.clone(),
            slots,
            nodes,
            edges,
            features,
            meta: self.meta.clone(),
        };
        c.normalize();
        c
    }

    // ---- crate-internal accessors by canonical position ----

    pub(crate) fn index_of(&self, node: NodeId) -> Option<u32> {
        self.node_ids.binary_search(&node).ok().map(|i| i as u32)
    }

    pub(crate) fn pos_of(&self, node: NodeId) -> Option<u32> {
        self.index_of(node).map(|i| self.canon_pos[i as usize])
    }

    pub(crate) fn id_at(&self, pos: u32) -> NodeId {
        self.node_ids[self.canonical[pos as usize] as usize]
    }

    pub(crate) fn monads_at(&self, pos: u32) -> Monads<'_> {
        self.monads_of_index(self.canonical[pos as usize])
    }

    pub(crate) fn first_at(&self, pos: u32) -> u32 {
        self.first_by_pos[pos as usize]
    }

    pub(crate) fn last_at(&self, pos: u32) -> u32 {
        self.last_by_pos[pos as usize]
    }

    pub(crate) fn otype_code(&self, otype: &str) -> Option<u32> {
        self.otypes.iter().position(|o| o == otype).map(|i| i as u32)
    }

    pub(crate) fn otype_code_at(&self, pos: u32) -> u32 {
        self.node_otype[self.canonical[pos as usize] as usize]
    }

    pub(crate) fn positions_of_otype(&self, code: u32) -> &[u32] {
        &self.by_otype[code as usize]
    }

    pub(crate) fn store(&self, kind: TargetKind, key: &str) -> Option<&FeatureStore> {
        self.features.get(&(kind, key.to_string()))
    }

    pub(crate) fn feature_at(&self, pos: u32, store: &FeatureStore) -> Option<u32> {
        let raw = self.id_at(pos).0;
        store.targets.binary_search(&raw).ok().map(|i| store.codes[i])
    }

    /// Positions of nodes embedding the node at `pos`, ascending.
    pub(crate) fn embedders_of_pos(&self, pos: u32) -> Vec<u32> {
        let inner = self.monads_at(pos);
        let end = self.first_by_pos.partition_point(|&f| f <= inner.first());
        let mut cands = Vec::new();
        self.containment.reaching(end, inner.last(), &mut cands);
        cands.retain(|&p| p != pos && inner.is_subset_of(self.monads_at(p)));
        cands
    }

    /// Positions of nodes whose monads intersect `monads`, ascending.
    pub(crate) fn intersecting(&self, monads: Monads<'_>) -> Vec<u32> {
        let end = self.first_by_pos.partition_point(|&f| f <= monads.last());
        let mut cands = Vec::new();
        self.containment.reaching(end, monads.first(), &mut cands);
        cands.retain(|&p| self.monads_at(p).intersects(monads));
        cands
    }

    fn monads_of_index(&self, idx: u32) -> Monads<'_> {
        let s = self.node_set[idx as usize] as usize;
        Monads::new(&self.runs[self.set_offsets[s] as usize..self.set_offsets[s + 1] as usize])
    }

    /// `None` means "unknown otype": the caller returns nothing.
    fn otype_filter(&self, otype: Option<&str>) -> Option<Option<u32>> {
        match otype {
            None => Some(None),
            Some(o) => self.otype_code(o).map(Some),
        }
    }
}

impl From<NodeId> for Target {
    fn from(n: NodeId) -> Self {
        Target::Node(n)
    }
}

impl From<EdgeId> for Target {
    fn from(e: EdgeId) -> Self {
        Target::Edge(e)
    }
}

enum Positions<'a> {
    All(std::ops::Range<u32>),
    List(std::slice::Iter<'a, u32>),
}

/// Iterator over node ids in canonical order. See [`Corpus::nodes`].
pub struct NodeWalk<'a> {
    corpus: &'a Corpus,
    positions: Positions<'a>,
    unknown_otype: bool,
}

impl NodeWalk<'_> {
    /// Set when the walk was asked for an otype the corpus does not have.
    pub fn unknown_otype(&self) -> bool {
        self.unknown_otype
    }
}

impl Iterator for NodeWalk<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let pos = match &mut self.positions {
            Positions::All(r) => r.next()?,
            Positions::List(it) => *it.next()?,
        };
        Some(self.corpus.id_at(pos))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match &self.positions {
            Positions::All(r) => r.size_hint(),
            Positions::List(it) => it.size_hint(),
        }
    }
}
