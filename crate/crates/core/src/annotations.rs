//! Saved queries as annotations.
//!
//! A saved query keeps its results as a snapshot: for every passage (verse by
//! default) the outermost matched nodes that intersect it. Margins and result
//! pages are read from the snapshot, so they need no evaluation.
//!
//! ```
//! use fabric::annotations::{AnnotationStore, MarginFilter, QueryMeta};
//! use fabric::{toy, Corpus, NodeId};
//!
//! let corpus = Corpus::from_logical(&toy::toy4()).unwrap();
//! let mut store = AnnotationStore::new(corpus.fingerprint());
//! let meta = QueryMeta::new("fox", "alice");
//! let saved = store.save_query(&corpus, meta, r#"[word lex="fox"]"#).unwrap();
//! assert_eq!(saved.total_verses, 1);
//!
//! let margin = store.margin(&corpus, NodeId(301), &MarginFilter::default()).unwrap();
//! assert_eq!(margin[0].query.name, "fox");
//! assert_eq!(margin[0].nodes, [NodeId(3)]);
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::model::NodeId;
use crate::mql::{self, EvalOptions, QueryError};

pub const STORE_FORMAT_VERSION: u32 = 1;

/// Passage otype used when none is given.
pub const DEFAULT_PASSAGE_OTYPE: &str = "verse";

/// One passage of a snapshot and the outermost matched nodes in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub passage: NodeId,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavedQuery {
    pub id: u64,
    pub name: String,
    pub author: String,
    pub query: String,
    pub description: String,
    pub is_public: bool,
    pub created: DateTime<Utc>,
    pub modified: DateTime<Utc>,
    pub corpus_fingerprint: String,
    pub passage_otype: String,
    pub snapshot: Vec<SnapshotEntry>,
    pub total_matches: u64,
    pub total_verses: u64,
    /// The snapshot was computed on a different corpus image.
    #[serde(default)]
    pub stale: bool,
}

/// Descriptive fields supplied when saving.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMeta {
    pub name: String,
    pub author: String,
    pub description: String,
    pub is_public: bool,
    pub passage_otype: String,
}

impl QueryMeta {
    /// Public, no description, default passage otype.
    pub fn new(name: impl Into<String>, author: impl Into<String>) -> Self {
        QueryMeta {
            name: name.into(),
            author: author.into(),
            description: String::new(),
            is_public: true,
            passage_otype: DEFAULT_PASSAGE_OTYPE.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("a query named `{name}` by `{author}` already exists")]
    Duplicate { author: String, name: String },
    #[error("the corpus has no passage otype `{0}`")]
    UnknownPassageOtype(String),
    #[error("{0} is not a passage node")]
    UnknownPassage(NodeId),
    #[error("no saved query with id {0}")]
    UnknownQuery(u64),
    #[error("page size must be at least 1")]
    InvalidPageSize,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("store file is not valid: {0}")]
    Format(String),
    #[error("store format version {found} is not supported (expected {STORE_FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("saved query {id} (`{name}`): {detail}")]
    Invalid { id: u64, name: String, detail: String },
}

/// Computes a snapshot: each match's outermost nodes, grouped under every
/// passage they intersect. Returns the entries and the match count.
pub fn snapshot(
    corpus: &Corpus,
    query: &str,
    passage_otype: &str,
) -> Result<(Vec<SnapshotEntry>, u64), AnnotationError> {
    if !corpus.has_otype(passage_otype) {
        return Err(AnnotationError::UnknownPassageOtype(passage_otype.to_string()));
    }
    let q = mql::parse(query).map_err(QueryError::from)?;
    let mut outer = BTreeSet::new();
    let outcome = mql::evaluate_with(corpus, &q, &EvalOptions::default(), |m| {
        outer.extend(m.outermost());
        std::ops::ControlFlow::Continue(())
    })?;
    let mut by_passage: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for node in outer {
        let pos = corpus.pos_of(node).expect("matched node exists");
        for p in mql::passages(corpus, &[node], passage_otype) {
            by_passage
                .entry(corpus.pos_of(p).expect("passage exists"))
                .or_default()
                .insert(pos);
        }
    }
    let entries = by_passage
        .into_iter()
        .map(|(p, nodes)| SnapshotEntry {
            passage: corpus.id_at(p),
            nodes: nodes.into_iter().map(|n| corpus.id_at(n)).collect(),
        })
        .collect();
    Ok((entries, outcome.matches as u64))
}

/// The on-disk layout of a store.
#[derive(Serialize, Deserialize)]
struct StoreFile {
    format_version: u32,
    corpus_fingerprint: String,
    queries: Vec<SavedQuery>,
}

/// A collection of saved queries with a passage index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationStore {
    pub corpus_fingerprint: String,
    queries: Vec<SavedQuery>,
    index: BTreeMap<NodeId, Vec<u64>>,
}

/// Restricts which saved queries a margin shows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginFilter {
    pub author: Option<String>,
    pub public_only: bool,
    pub passage_otype: String,
}

impl Default for MarginFilter {
    fn default() -> Self {
        MarginFilter {
            author: None,
            public_only: false,
            passage_otype: DEFAULT_PASSAGE_OTYPE.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginEntry<'s> {
    pub query: &'s SavedQuery,
    pub nodes: Vec<NodeId>,
}

/// Problems found while importing that did not prevent it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImportWarning {
    /// The query was saved against another image; its snapshot is now stale.
    Stale { id: u64, name: String },
}

impl AnnotationStore {
    pub fn new(corpus_fingerprint: impl Into<String>) -> Self {
        AnnotationStore {
            corpus_fingerprint: corpus_fingerprint.into(),
            queries: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    /// Saved queries in id order.
    pub fn queries(&self) -> &[SavedQuery] {
        &self.queries
    }

    pub fn get(&self, id: u64) -> Option<&SavedQuery> {
        self.queries.iter().find(|q| q.id == id)
    }

    /// Passage node -> ids of saved queries with hits in it.
    pub fn index(&self) -> &BTreeMap<NodeId, Vec<u64>> {
        &self.index
    }

    /// Recomputes the passage index from the snapshots.
    pub fn rebuild_index(&mut self) {
        let mut index: BTreeMap<NodeId, Vec<u64>> = BTreeMap::new();
        for q in &self.queries {
            for e in &q.snapshot {
                index.entry(e.passage).or_default().push(q.id);
            }
        }
        self.index = index;
    }

    /// Evaluates `query` on `corpus` and stores it with its snapshot.
    pub fn save_query(
        &mut self,
        corpus: &Corpus,
        meta: QueryMeta,
        query: &str,
    ) -> Result<&SavedQuery, AnnotationError> {
        if self
            .queries
            .iter()
            .any(|q| q.author == meta.author && q.name == meta.name)
        {
            return Err(AnnotationError::Duplicate {
                author: meta.author,
                name: meta.name,
            });
        }
        let (snapshot, total_matches) = snapshot(corpus, query, &meta.passage_otype)?;
        let now = Utc::now().trunc_subsecs(0);
        let id = self.queries.iter().map(|q| q.id).max().unwrap_or(0) + 1;
        let saved = SavedQuery {
            id,
            name: meta.name,
            author: meta.author,
            query: query.to_string(),
            description: meta.description,
            is_public: meta.is_public,
            created: now,
            modified: now,
            corpus_fingerprint: corpus.fingerprint().to_string(),
            passage_otype: meta.passage_otype,
            total_verses: snapshot.len() as u64,
            snapshot,
            total_matches,
            stale: false,
        };
        self.queries.push(saved);
        self.rebuild_index();
        Ok(self.queries.last().expect("just pushed"))
    }

    /// Recomputes a query's snapshot on `corpus`, clearing its stale flag.
    pub fn refresh_query(&mut self, corpus: &Corpus, id: u64) -> Result<&SavedQuery, AnnotationError> {
        let i = self
            .queries
            .iter()
            .position(|q| q.id == id)
            .ok_or(AnnotationError::UnknownQuery(id))?;
        let q = &self.queries[i];
        let (snap, total) = snapshot(corpus, &q.query, &q.passage_otype)?;
        let q = &mut self.queries[i];
        q.total_verses = snap.len() as u64;
        q.snapshot = snap;
        q.total_matches = total;
        q.corpus_fingerprint = corpus.fingerprint().to_string();
        q.modified = Utc::now().trunc_subsecs(0);
        q.stale = false;
        self.rebuild_index();
        Ok(&self.queries[i])
    }

    /// Saved queries with hits in `passage`, with the matched nodes there,
    /// ordered by author, then name.
    pub fn margin(
        &self,
        corpus: &Corpus,
        passage: NodeId,
        filter: &MarginFilter,
    ) -> Result<Vec<MarginEntry<'_>>, AnnotationError> {
        if corpus.otype(passage) != Some(filter.passage_otype.as_str()) {
            return Err(AnnotationError::UnknownPassage(passage));
        }
        let mut out: Vec<MarginEntry<'_>> = self
            .index
            .get(&passage)
            .into_iter()
            .flatten()
            .filter_map(|&id| self.get(id))
            .filter(|q| filter.author.as_ref().is_none_or(|a| &q.author == a))
            .filter(|q| q.is_public || !filter.public_only)
            .filter_map(|q| {
                let e = q.snapshot.iter().find(|e| e.passage == passage)?;
                Some(MarginEntry {
                    query: q,
                    nodes: e.nodes.clone(),
                })
            })
            .collect();
        out.sort_by(|a, b| {
            (&a.query.author, &a.query.name, a.query.id).cmp(&(&b.query.author, &b.query.name, b.query.id))
        });
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let file = StoreFile {
            format_version: STORE_FORMAT_VERSION,
            corpus_fingerprint: self.corpus_fingerprint.clone(),
            queries: self.queries.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("store serializes");
        s.push('\n');
        s
    }

    /// Parses a store without checking it against a corpus.
    pub fn from_json(text: &str) -> Result<Self, AnnotationError> {
        let file: StoreFile =
            serde_json::from_str(text).map_err(|e| AnnotationError::Format(e.to_string()))?;
        if file.format_version != STORE_FORMAT_VERSION {
            return Err(AnnotationError::UnsupportedVersion {
                found: file.format_version,
            });
        }
        let mut seen = BTreeSet::new();
        for q in &file.queries {
            if !seen.insert(q.id) {
                return Err(invalid(q, "duplicate id"));
            }
        }
        let mut store = AnnotationStore {
            corpus_fingerprint: file.corpus_fingerprint,
            queries: file.queries,
            index: BTreeMap::new(),
        };
        store.queries.sort_by_key(|q| q.id);
        store.rebuild_index();
        Ok(store)
    }
}

fn invalid(q: &SavedQuery, detail: impl Into<String>) -> AnnotationError {
    AnnotationError::Invalid {
        id: q.id,
        name: q.name.clone(),
        detail: detail.into(),
    }
}

/// Checks a snapshot computed on `corpus` for internal consistency.
fn check_snapshot(corpus: &Corpus, q: &SavedQuery) -> Result<(), AnnotationError> {
    if q.total_verses != q.snapshot.len() as u64 {
        return Err(invalid(q, "total_verses does not match the snapshot"));
    }
    let mut last_passage = None;
    for e in &q.snapshot {
        if corpus.otype(e.passage) != Some(q.passage_otype.as_str()) {
            return Err(invalid(q, format!("{} is not a {} node", e.passage, q.passage_otype)));
        }
        let pos = corpus.pos_of(e.passage).expect("checked above");
        if last_passage.is_some_and(|l| l >= pos) {
            return Err(invalid(q, "passages are not distinct and in canonical order"));
        }
        last_passage = Some(pos);
        let pm = corpus.monads(e.passage).expect("checked above");
        let mut last_node = None;
        if e.nodes.is_empty() {
            return Err(invalid(q, format!("passage {} lists no nodes", e.passage)));
        }
        for &n in &e.nodes {
            let Some(m) = corpus.monads(n) else {
                return Err(invalid(q, format!("unknown node {n}")));
            };
            if !m.intersects(pm) {
                return Err(invalid(q, format!("{n} does not intersect passage {}", e.passage)));
            }
            let np = corpus.pos_of(n).expect("node exists");
            if last_node.is_some_and(|l| l >= np) {
                return Err(invalid(q, format!("nodes in passage {} are not in canonical order", e.passage)));
            }
            last_node = Some(np);
        }
    }
    Ok(())
}

/// Writes the store as JSON, replacing `path` atomically.
pub fn export_store(store: &AnnotationStore, path: impl AsRef<Path>) -> Result<(), AnnotationError> {
    let path = path.as_ref();
    let io = |source| AnnotationError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(store.to_json().as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Reads a store and checks it against `corpus`. Queries saved on the same
/// image must have sound snapshots or the import fails; queries saved on
/// another image are kept but flagged stale.
pub fn import_store(
    path: impl AsRef<Path>,
    corpus: &Corpus,
) -> Result<(AnnotationStore, Vec<ImportWarning>), AnnotationError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| AnnotationError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut store = AnnotationStore::from_json(&text)?;
    let warnings = store.check_against(corpus)?;
    Ok((store, warnings))
}

impl AnnotationStore {
    /// Validates snapshots taken on `corpus` and marks the others stale.
    pub fn check_against(&mut self, corpus: &Corpus) -> Result<Vec<ImportWarning>, AnnotationError> {
        let mut warnings = Vec::new();
        let fp = corpus.fingerprint();
        for q in &mut self.queries {
            if q.corpus_fingerprint == fp && !q.stale {
                check_snapshot(corpus, q)?;
            } else {
                q.stale = true;
                warnings.push(ImportWarning::Stale {
                    id: q.id,
                    name: q.name.clone(),
                });
            }
        }
        Ok(warnings)
    }

    /// Counts saved queries per author, for listings.
    pub fn authors(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for q in &self.queries {
            *m.entry(q.author.as_str()).or_default() += 1;
        }
        m
    }
}

/// Navigation for one page of results. Pages are numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PageNav {
    /// The page actually shown; 0 when there are no pages.
    pub page: usize,
    pub total_pages: usize,
    pub first: Option<usize>,
    pub prev: Option<usize>,
    pub next: Option<usize>,
    pub last: Option<usize>,
    /// The requested page was out of range and was clamped.
    pub clamped: bool,
    /// Index range of the page's items.
    #[serde(skip)]
    pub range: std::ops::Range<usize>,
}

/// Splits `total` items into pages of `page_size` and locates `page`.
///
/// ```
/// use fabric::annotations::paginate;
///
/// let nav = paginate(12_835, 514, 25).unwrap();
/// assert_eq!(nav.total_pages, 514);
/// assert_eq!(nav.range.len(), 10);
/// assert_eq!((nav.prev, nav.next), (Some(513), None));
/// ```
pub fn paginate(total: usize, page: usize, page_size: usize) -> Result<PageNav, AnnotationError> {
    if page_size == 0 {
        return Err(AnnotationError::InvalidPageSize);
    }
    let total_pages = total.div_ceil(page_size);
    if total_pages == 0 {
        return Ok(PageNav {
            page: 0,
            total_pages: 0,
            first: None,
            prev: None,
            next: None,
            last: None,
            clamped: page != 1,
            range: 0..0,
        });
    }
    let shown = page.clamp(1, total_pages);
    let start = (shown - 1) * page_size;
    Ok(PageNav {
        page: shown,
        total_pages,
        first: Some(1),
        prev: (shown > 1).then(|| shown - 1),
        next: (shown < total_pages).then(|| shown + 1),
        last: Some(total_pages),
        clamped: shown != page,
        range: start..(start + page_size).min(total),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultPage<'s> {
    pub entries: &'s [SnapshotEntry],
    pub nav: PageNav,
}

/// One page of a saved query's passage list.
pub fn result_page(saved: &SavedQuery, page: usize, page_size: usize) -> Result<ResultPage<'_>, AnnotationError> {
    let nav = paginate(saved.snapshot.len(), page, page_size)?;
    Ok(ResultPage {
        entries: &saved.snapshot[nav.range.clone()],
        nav,
    })
}
