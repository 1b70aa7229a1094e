use std::collections::BTreeSet;
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::ast::{Atom, Block, BlockString, Expr, Gap, Op, Operand, Query};
use super::QueryError;
use crate::corpus::{Corpus, FeatureStore};
use crate::model::{NodeId, TargetKind};

/// Limits and settings for one evaluation.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Stop after this many matches. The result is flagged only if more exist.
    pub max_matches: Option<usize>,
    pub timeout: Option<Duration>,
    /// Set from another thread to abandon the evaluation.
    pub cancel: Option<Arc<AtomicBool>>,
    /// Otype used for [`ResultSet::passages`].
    pub passage_otype: String,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_matches: None,
            timeout: None,
            cancel: None,
            passage_otype: "verse".to_string(),
        }
    }
}

/// Why an evaluation stopped before enumerating every match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    MaxMatches,
    Timeout,
    Cancelled,
}

/// The node matched by one block, and one tree per block nested inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchTree {
    pub node: NodeId,
    pub children: Vec<MatchTree>,
}

/// One match: a tree per top-level block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Match {
    pub blocks: Vec<MatchTree>,
}

impl Match {
    /// Matched nodes in query pre-order, each with its block path (`"1"`,
    /// `"1.2"`, ...).
    pub fn nodes(&self) -> Vec<(String, NodeId)> {
        fn walk(trees: &[MatchTree], prefix: &str, out: &mut Vec<(String, NodeId)>) {
            for (i, t) in trees.iter().enumerate() {
                let path = if prefix.is_empty() {
                    (i + 1).to_string()
                } else {
                    format!("{prefix}.{}", i + 1)
                };
                out.push((path.clone(), t.node));
                walk(&t.children, &path, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.blocks, "", &mut out);
        out
    }

    /// The nodes matched by top-level blocks.
    pub fn outermost(&self) -> Vec<NodeId> {
        self.blocks.iter().map(|t| t.node).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResultSet {
    pub matches: Vec<Match>,
    /// Distinct passage nodes intersecting any outermost matched node,
    /// in canonical order.
    pub passages: Vec<NodeId>,
    pub cutoff: Option<Cutoff>,
}

impl ResultSet {
    pub fn total(&self) -> usize {
        self.matches.len()
    }
}

/// Summary of a streaming evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub matches: usize,
    pub cutoff: Option<Cutoff>,
}

/// Evaluates `q` and collects every match.
pub fn evaluate(corpus: &Corpus, q: &Query, opts: &EvalOptions) -> Result<ResultSet, QueryError> {
    let mut matches = Vec::new();
    let outcome = evaluate_with(corpus, q, opts, |m| {
        matches.push(m);
        ControlFlow::Continue(())
    })?;
    let outer: Vec<NodeId> = matches.iter().flat_map(Match::outermost).collect();
    Ok(ResultSet {
        passages: passages(corpus, &outer, &opts.passage_otype),
        matches,
        cutoff: outcome.cutoff,
    })
}

/// Evaluates `q`, handing each match to `sink` as soon as it is found, in
/// result order. The sink may break to stop early; that is reported as
/// [`Cutoff::Cancelled`].
pub fn evaluate_with(
    corpus: &Corpus,
    q: &Query,
    opts: &EvalOptions,
    mut sink: impl FnMut(Match) -> ControlFlow<()>,
) -> Result<Outcome, QueryError> {
    let prog = Program::compile(corpus, q)?;
    let mut run = Runner {
        c: corpus,
        prog: &prog,
        deadline: opts.timeout.map(|t| Instant::now() + t),
        cancel: opts.cancel.clone(),
        steps: 0,
    };
    let mut count = 0usize;
    let flow = run.string(&prog.root, None, 0, None, &mut Vec::new(), &mut |flat| {
        if opts.max_matches.is_some_and(|m| count >= m) {
            return ControlFlow::Break(Cutoff::MaxMatches);
        }
        count += 1;
        let blocks = prog.build(corpus, &prog.root, &mut flat.iter().copied());
        match sink(Match { blocks }) {
            ControlFlow::Continue(()) => ControlFlow::Continue(()),
            ControlFlow::Break(()) => ControlFlow::Break(Cutoff::Cancelled),
        }
    });
    Ok(Outcome {
        matches: count,
        cutoff: flow.break_value(),
    })
}

/// Distinct nodes of `otype` intersecting any of `nodes`, canonical order.
/// Empty when the corpus has no such otype.
pub fn passages(corpus: &Corpus, nodes: &[NodeId], otype: &str) -> Vec<NodeId> {
    let Some(code) = corpus.otype_code(otype) else {
        return Vec::new();
    };
    let mut found = BTreeSet::new();
    for &n in nodes {
        if let Some(m) = corpus.monads(n) {
            found.extend(
                corpus
                    .intersecting(m)
                    .into_iter()
                    .filter(|&p| corpus.otype_code_at(p) == code),
            );
        }
    }
    found.into_iter().map(|p| corpus.id_at(p)).collect()
}

// ---- compilation ----

pub(crate) struct AtomProg<'c> {
    store: Option<&'c FeatureStore>,
    accept: Vec<bool>,
    absent: bool,
}

pub(crate) enum Filter<'c> {
    Atom(AtomProg<'c>),
    And(Vec<Filter<'c>>),
    Or(Vec<Filter<'c>>),
}

impl Filter<'_> {
    fn test(&self, c: &Corpus, pos: u32) -> bool {
        match self {
            Filter::Atom(a) => match a.store.and_then(|s| c.feature_at(pos, s)) {
                Some(code) => a.accept[code as usize],
                None => a.absent,
            },
            Filter::And(fs) => fs.iter().all(|f| f.test(c, pos)),
            Filter::Or(fs) => fs.iter().any(|f| f.test(c, pos)),
        }
    }
}

/// Whether a present value satisfies the atom.
pub(crate) fn value_matches(atom: &Atom, value: &str) -> bool {
    match (&atom.operand, atom.op) {
        (Operand::Str(s), Op::Eq) => value == s,
        (Operand::Str(s), Op::Ne) => value != s,
        (Operand::Int(i), Op::Eq) => value.trim().parse::<i64>().ok() == Some(*i),
        (Operand::Int(i), Op::Ne) => value.trim().parse::<i64>().ok() != Some(*i),
        (Operand::Int(i), op) if op.is_comparison() => match value.trim().parse::<i64>() {
            Ok(v) => match op {
                Op::Lt => v < *i,
                Op::Le => v <= *i,
                Op::Gt => v > *i,
                _ => v >= *i,
            },
            Err(_) => false,
        },
        (Operand::Set(vs), Op::In) => vs.iter().any(|v| v == value),
        (Operand::Regex(p), Op::Match) => p.0.is_match(value),
        _ => false,
    }
}

/// Result of the atom for a node without the feature.
pub(crate) fn absent_matches(atom: &Atom) -> bool {
    atom.op == Op::Ne
}

/// Checks otypes and keys against the corpus.
pub(crate) fn check_query(c: &Corpus, q: &Query) -> Result<(), QueryError> {
    let keys = c.feature_keys(TargetKind::Node);
    for b in q.blocks_preorder() {
        if !c.has_otype(&b.otype) {
            return Err(QueryError::UnknownOtype {
                otype: b.otype.clone(),
                pos: b.pos,
            });
        }
        for a in b.constraint.iter().flat_map(Expr::atoms) {
            if !keys.contains(&a.key.as_str()) {
                return Err(QueryError::UnknownFeature {
                    key: a.key.clone(),
                    pos: a.pos,
                });
            }
            if a.op.is_comparison() && !c.meta().is_int_feature(&a.key) {
                return Err(QueryError::NotInteger {
                    key: a.key.clone(),
                    op: a.op.symbol(),
                    pos: a.pos,
                });
            }
        }
    }
    Ok(())
}

fn compile_atom<'c>(c: &'c Corpus, a: &Atom, negate: bool) -> AtomProg<'c> {
    let store = c.store(TargetKind::Node, &a.key);
    let accept = store
        .map(|s| s.dict.iter().map(|v| value_matches(a, v) != negate).collect())
        .unwrap_or_default();
    AtomProg {
        store,
        accept,
        absent: absent_matches(a) != negate,
    }
}

fn compile_expr<'c>(c: &'c Corpus, e: &Expr) -> Filter<'c> {
    match e {
        Expr::Atom(a) => Filter::Atom(compile_atom(c, a, false)),
        Expr::Not(a) => Filter::Atom(compile_atom(c, a, true)),
        Expr::And(es) => Filter::And(es.iter().map(|e| compile_expr(c, e)).collect()),
        Expr::Or(es) => Filter::Or(es.iter().map(|e| compile_expr(c, e)).collect()),
    }
}

/// Candidate positions for a block before structural checks, sorted by
/// canonical position, plus how they were obtained.
pub(crate) struct Candidates {
    pub positions: Vec<u32>,
    pub lookup: Option<(String, Vec<String>)>,
}

/// Picks the smallest candidate list: the otype's node list, or the posting
/// list of an `=`/`IN` atom that every match must satisfy.
pub(crate) fn candidates(c: &Corpus, b: &Block) -> Candidates {
    let Some(code) = c.otype_code(&b.otype) else {
        return Candidates {
            positions: Vec::new(),
            lookup: None,
        };
    };
    let mut best = Candidates {
        positions: c.positions_of_otype(code).to_vec(),
        lookup: None,
    };
    let required: Vec<&Atom> = match &b.constraint {
        Some(Expr::Atom(a)) => vec![a],
        Some(Expr::And(es)) => es
            .iter()
            .filter_map(|e| match e {
                Expr::Atom(a) => Some(a),
                _ => None,
            })
            .collect(),
        _ => Vec::new(),
    };
    for a in required {
        let values: Vec<String> = match (&a.operand, a.op) {
            (Operand::Str(s), Op::Eq) => vec![s.clone()],
            (Operand::Set(vs), Op::In) => vs.clone(),
            _ => continue,
        };
        let Some(store) = c.store(TargetKind::Node, &a.key) else {
            continue;
        };
        let mut positions: Vec<u32> = values
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter_map(|v| store.code_of(v))
            .flat_map(|code| store.posting(code).iter())
            .filter_map(|&raw| c.pos_of(NodeId(raw)))
            .filter(|&p| c.otype_code_at(p) == code)
            .collect();
        if positions.len() < best.positions.len() {
            positions.sort_unstable();
            best = Candidates {
                positions,
                lookup: Some((a.key.clone(), values)),
            };
        }
    }
    best
}

struct BlockProg<'c> {
    base: Vec<u32>,
    base_first: Vec<u32>,
    filter: Option<Filter<'c>>,
    children: Option<StrProg>,
}

struct StrProg {
    blocks: Vec<usize>,
    gaps: Vec<Gap>,
}

struct Program<'c> {
    blocks: Vec<BlockProg<'c>>,
    root: StrProg,
}

impl<'c> Program<'c> {
    fn compile(c: &'c Corpus, q: &Query) -> Result<Self, QueryError> {
        check_query(c, q)?;
        let mut blocks = Vec::new();
        let root = Self::compile_string(c, &q.root, &mut blocks);
        Ok(Program { blocks, root })
    }

    fn compile_string(c: &'c Corpus, bs: &BlockString, out: &mut Vec<BlockProg<'c>>) -> StrProg {
        let mut ids = Vec::new();
        for b in &bs.blocks {
            let id = out.len();
            ids.push(id);
            let base = candidates(c, b).positions;
            out.push(BlockProg {
                base_first: base.iter().map(|&p| c.first_at(p)).collect(),
                base,
                filter: b.constraint.as_ref().map(|e| compile_expr(c, e)),
                children: None,
            });
            if let Some(kids) = &b.children {
                let sp = Self::compile_string(c, kids, out);
                out[id].children = Some(sp);
            }
        }
        StrProg {
            blocks: ids,
            gaps: bs.gaps.clone(),
        }
    }

    /// Rebuilds trees from positions listed in pre-order.
    fn build(&self, c: &Corpus, s: &StrProg, flat: &mut impl Iterator<Item = u32>) -> Vec<MatchTree> {
        s.blocks
            .iter()
            .map(|&b| {
                let node = c.id_at(flat.next().expect("one position per block"));
                let children = match &self.blocks[b].children {
                    Some(k) => self.build(c, k, flat),
                    None => Vec::new(),
                };
                MatchTree { node, children }
            })
            .collect()
    }
}

// ---- search ----

struct Runner<'a, 'c> {
    c: &'c Corpus,
    prog: &'a Program<'c>,
    deadline: Option<Instant>,
    cancel: Option<Arc<AtomicBool>>,
    steps: u64,
}

type Sink<'s> = dyn FnMut(&[u32]) -> ControlFlow<Cutoff> + 's;

impl Runner<'_, '_> {
    fn tick(&mut self) -> ControlFlow<Cutoff> {
        self.steps += 1;
        if self.steps % 1024 == 1 {
            if self.cancel.as_ref().is_some_and(|f| f.load(Ordering::Relaxed)) {
                return ControlFlow::Break(Cutoff::Cancelled);
            }
            if self.deadline.is_some_and(|d| Instant::now() >= d) {
                return ControlFlow::Break(Cutoff::Timeout);
            }
        }
        ControlFlow::Continue(())
    }

    /// Matches blocks `i..` of `s`, given the parent node and the node
    /// matched by block `i - 1`. `acc` holds the positions chosen so far.
    fn string(
        &mut self,
        s: &StrProg,
        parent: Option<u32>,
        i: usize,
        prev: Option<u32>,
        acc: &mut Vec<u32>,
        sink: &mut Sink<'_>,
    ) -> ControlFlow<Cutoff> {
        if i == s.blocks.len() {
            return sink(acc);
        }
        let c = self.c;
        let prog = self.prog;
        let block = &prog.blocks[s.blocks[i]];

        let (mut lo, mut hi) = match parent {
            Some(p) => (c.first_at(p), c.last_at(p)),
            None => (1, u32::MAX),
        };
        if let Some(q) = prev {
            let after = c.last_at(q).saturating_add(1);
            lo = lo.max(after);
            match s.gaps[i - 1] {
                Gap::Adjacent => hi = hi.min(after),
                Gap::AtMost(k) => hi = hi.min(after.saturating_add(k)),
                Gap::Any => {}
            }
        }
        if lo > hi {
            return ControlFlow::Continue(());
        }
        let start = block.base_first.partition_point(|&f| f < lo);
        let end = block.base_first.partition_point(|&f| f <= hi);

        for &pos in &block.base[start..end] {
            self.tick()?;
            if let Some(p) = parent {
                if pos == p || !c.monads_at(pos).is_subset_of(c.monads_at(p)) {
                    continue;
                }
            }
            if let Some(f) = &block.filter {
                if !f.test(c, pos) {
                    continue;
                }
            }
            let mark = acc.len();
            match &block.children {
                None => {
                    acc.push(pos);
                    self.string(s, parent, i + 1, Some(pos), acc, sink)?;
                }
                Some(kids) => {
                    let mut found: Vec<Vec<u32>> = Vec::new();
                    self.string(kids, Some(pos), 0, None, &mut Vec::new(), &mut |m| {
                        found.push(m.to_vec());
                        ControlFlow::Continue(())
                    })?;
                    for k in found {
                        acc.truncate(mark);
                        acc.push(pos);
                        acc.extend(k);
                        self.string(s, parent, i + 1, Some(pos), acc, sink)?;
                    }
                }
            }
            acc.truncate(mark);
        }
        ControlFlow::Continue(())
    }
}
