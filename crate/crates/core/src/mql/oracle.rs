//! Exhaustive reference evaluator. Deliberately naive: it works from the
//! logical corpus, tries every node for every block and checks each
//! relation with the data-model predicates. Used to test [`super::evaluate`].

use std::collections::{BTreeSet, HashMap};

use super::ast::{Atom, Block, BlockString, Expr, Gap, Op, Operand, Query};
use super::eval::{check_query, Match, MatchTree, ResultSet};
use super::QueryError;
use crate::corpus::Corpus;
use crate::model::{adjacent, canonical_compare, embeds, sequence_before, Node, NodeId, Target};

/// A block's parent block and its left sibling with the gap between them.
type Place = (Option<usize>, Option<(usize, Gap)>);

/// Default limit on nodes × blocks for [`brute_force_evaluate`].
pub const ORACLE_GUARD: u64 = 10_000;

pub fn brute_force_evaluate(c: &Corpus, q: &Query) -> Result<ResultSet, QueryError> {
    brute_force_evaluate_with_guard(c, q, ORACLE_GUARD, "verse")
}

/// Like [`brute_force_evaluate`] with an explicit guard and passage otype.
pub fn brute_force_evaluate_with_guard(
    c: &Corpus,
    q: &Query,
    guard: u64,
    passage_otype: &str,
) -> Result<ResultSet, QueryError> {
    let blocks = q.blocks_preorder();
    let tuples = c.node_count() as u64 * blocks.len() as u64;
    if tuples > guard {
        return Err(QueryError::GuardExceeded { tuples, limit: guard });
    }
    check_query(c, q)?;

    let logical = c.to_logical();
    let ranking = c.ranking();
    let mut nodes: Vec<&Node> = logical.nodes.iter().collect();
    nodes.sort_by(|a, b| canonical_compare(a, b, ranking));
    let rank: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let features: HashMap<(NodeId, &str), &str> = logical
        .features
        .iter()
        .filter_map(|f| match f.target {
            Target::Node(n) => Some(((n, f.key.as_str()), f.value.as_str())),
            Target::Edge(_) => None,
        })
        .collect();

    // For each block in pre-order: its parent block and its left sibling
    // with the gap between them.
    let mut shape: Vec<Place> = Vec::new();
    fn layout(bs: &BlockString, parent: Option<usize>, shape: &mut Vec<Place>) {
        let mut left: Option<usize> = None;
        for (i, b) in bs.blocks.iter().enumerate() {
            let me = shape.len();
            shape.push((parent, left.map(|l| (l, bs.gaps[i - 1]))));
            if let Some(k) = &b.children {
                layout(k, Some(me), shape);
            }
            left = Some(me);
        }
    }
    layout(&q.root, None, &mut shape);

    let holds = |b: &Block, n: &Node| -> bool {
        n.otype == b.otype
            && b
                .constraint
                .as_ref()
                .is_none_or(|e| expr_holds(e, |k| features.get(&(n.id, k)).copied()))
    };

    let mut found: Vec<Vec<&Node>> = Vec::new();
    let mut chosen: Vec<&Node> = Vec::new();
    fn assign<'n>(
        i: usize,
        blocks: &[&Block],
        shape: &[Place],
        nodes: &[&'n Node],
        holds: &dyn Fn(&Block, &Node) -> bool,
        chosen: &mut Vec<&'n Node>,
        found: &mut Vec<Vec<&'n Node>>,
    ) {
        if i == blocks.len() {
            found.push(chosen.clone());
            return;
        }
        for &n in nodes {
            if !holds(blocks[i], n) {
                continue;
            }
            let (parent, left) = shape[i];
            if parent.is_some_and(|p| !embeds(chosen[p], n)) {
                continue;
            }
            if let Some((l, gap)) = left {
                let (a, b) = (&chosen[l].monads, &n.monads);
                let ok = match gap {
                    Gap::Adjacent => adjacent(a, b),
                    Gap::Any => sequence_before(a, b),
                    Gap::AtMost(k) => {
                        sequence_before(a, b) && (b.first() - a.last() - 1) as u64 <= k as u64
                    }
                };
                if !ok {
                    continue;
                }
            }
            chosen.push(n);
            assign(i + 1, blocks, shape, nodes, holds, chosen, found);
            chosen.pop();
        }
    }
    assign(0, &blocks, &shape, &nodes, &holds, &mut chosen, &mut found);

    found.sort_by_key(|t| t.iter().map(|n| rank[&n.id]).collect::<Vec<_>>());

    let mut passages = BTreeSet::new();
    let top = q.root.blocks.len();
    let mut matches = Vec::new();
    for t in &found {
        let mut it = t.iter().map(|n| n.id);
        let m = Match {
            blocks: rebuild(&q.root, &mut it),
        };
        let outer: Vec<NodeId> = m.outermost();
        debug_assert_eq!(outer.len(), top);
        for o in outer {
            let om = &nodes[rank[&o]].monads;
            for p in nodes.iter().filter(|p| p.otype == passage_otype) {
                if p.monads.intersects(om) {
                    passages.insert(rank[&p.id]);
                }
            }
        }
        matches.push(m);
    }
    Ok(ResultSet {
        matches,
        passages: passages.into_iter().map(|r| nodes[r].id).collect(),
        cutoff: None,
    })
}

fn rebuild(bs: &BlockString, it: &mut impl Iterator<Item = NodeId>) -> Vec<MatchTree> {
    bs.blocks
        .iter()
        .map(|b| {
            let node = it.next().expect("tuple covers every block");
            let children = b.children.as_ref().map(|k| rebuild(k, it)).unwrap_or_default();
            MatchTree { node, children }
        })
        .collect()
}

fn expr_holds<'v>(e: &Expr, get: impl Fn(&str) -> Option<&'v str> + Copy) -> bool {
    match e {
        Expr::Atom(a) => atom_holds(a, get(&a.key)),
        Expr::Not(a) => !atom_holds(a, get(&a.key)),
        Expr::And(es) => es.iter().all(|e| expr_holds(e, get)),
        Expr::Or(es) => es.iter().any(|e| expr_holds(e, get)),
    }
}

fn atom_holds(a: &Atom, value: Option<&str>) -> bool {
    let Some(v) = value else {
        // a missing feature differs from everything and equals nothing
        return a.op == Op::Ne;
    };
    let int = || v.trim().parse::<i64>().ok();
    match (a.op, &a.operand) {
        (Op::Eq, Operand::Str(s)) => v == s,
        (Op::Ne, Operand::Str(s)) => v != s,
        (Op::Eq, Operand::Int(i)) => int() == Some(*i),
        (Op::Ne, Operand::Int(i)) => int() != Some(*i),
        (Op::Lt, Operand::Int(i)) => int().is_some_and(|x| x < *i),
        (Op::Le, Operand::Int(i)) => int().is_some_and(|x| x <= *i),
        (Op::Gt, Operand::Int(i)) => int().is_some_and(|x| x > *i),
        (Op::Ge, Operand::Int(i)) => int().is_some_and(|x| x >= *i),
        (Op::In, Operand::Set(vs)) => vs.iter().any(|s| s == v),
        (Op::Match, Operand::Regex(p)) => p.0.is_match(v),
        _ => false,
    }
}
