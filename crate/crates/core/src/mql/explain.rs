use std::fmt;

use super::ast::{Block, BlockString, Expr, Gap, Query};
use super::eval::candidates;
use crate::corpus::Corpus;

/// Where a block's candidate nodes come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    /// Every node of the block's otype.
    OtypeScan { otype: String },
    /// The posting lists of `key` for the given values, restricted to the otype.
    Dictionary { key: String, values: Vec<String> },
    /// The corpus has no such otype; evaluation will fail.
    UnknownOtype { otype: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPlan {
    /// Block number in pre-order, from 1.
    pub index: usize,
    pub depth: usize,
    pub otype: String,
    pub source: Source,
    pub candidates: usize,
    /// Pre-order number of the enclosing block, joined before this one.
    pub within: Option<usize>,
    /// Gap to the block before it in the same string.
    pub after: Option<(usize, Gap)>,
    pub filtered: bool,
}

/// A human-readable evaluation plan. See [`explain`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub blocks: Vec<BlockPlan>,
}

/// Describes how [`super::evaluate`] will search for `q`: the candidate
/// source per block and the join order (parents before nested blocks, left
/// to right within a string).
///
/// ```
/// use fabric::{mql, toy, Corpus};
///
/// let corpus = Corpus::from_logical(&toy::toy4()).unwrap();
/// let plan = mql::explain(&mql::parse(r#"[word lex="fox"]"#).unwrap(), &corpus);
/// assert_eq!(plan.blocks[0].candidates, 1);
/// assert!(plan.to_string().contains(r#"dictionary lookup lex -> "fox""#));
/// ```
pub fn explain(q: &Query, c: &Corpus) -> Plan {
    fn walk(c: &Corpus, bs: &BlockString, depth: usize, within: Option<usize>, out: &mut Vec<BlockPlan>) {
        let mut left = None;
        for (i, b) in bs.blocks.iter().enumerate() {
            let index = out.len() + 1;
            out.push(plan_block(c, b, index, depth, within, left.map(|l| (l, bs.gaps[i - 1]))));
            if let Some(k) = &b.children {
                walk(c, k, depth + 1, Some(index), out);
            }
            left = Some(index);
        }
    }
    let mut blocks = Vec::new();
    walk(c, &q.root, 0, None, &mut blocks);
    Plan { blocks }
}

fn plan_block(
    c: &Corpus,
    b: &Block,
    index: usize,
    depth: usize,
    within: Option<usize>,
    after: Option<(usize, Gap)>,
) -> BlockPlan {
    let cands = candidates(c, b);
    let source = if !c.has_otype(&b.otype) {
        Source::UnknownOtype {
            otype: b.otype.clone(),
        }
    } else if let Some((key, values)) = cands.lookup {
        Source::Dictionary { key, values }
    } else {
        Source::OtypeScan {
            otype: b.otype.clone(),
        }
    };
    let lookup_only = matches!(source, Source::Dictionary { .. })
        && matches!(b.constraint, Some(Expr::Atom(_)));
    BlockPlan {
        index,
        depth,
        otype: b.otype.clone(),
        source,
        candidates: cands.positions.len(),
        within,
        after,
        filtered: b.constraint.is_some() && !lookup_only,
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            let indent = "  ".repeat(b.depth);
            write!(f, "{indent}{}. [{}] ", b.index, b.otype)?;
            match &b.source {
                Source::OtypeScan { otype } => write!(f, "otype scan {otype}")?,
                Source::Dictionary { key, values } => {
                    let vs: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
                    write!(f, "dictionary lookup {key} -> {}", vs.join(" | "))?
                }
                Source::UnknownOtype { otype } => write!(f, "unknown otype {otype}")?,
            }
            let s = if b.candidates == 1 { "" } else { "s" };
            write!(f, ", {} candidate{s}", b.candidates)?;
            if b.filtered {
                f.write_str(", then constraint filter")?;
            }
            if let Some(p) = b.within {
                write!(f, "; embedded in block {p} (joined after its parent)")?;
            }
            if let Some((l, gap)) = b.after {
                match gap {
                    Gap::Adjacent => write!(f, "; adjacent to block {l}")?,
                    Gap::Any => write!(f, "; after block {l}")?,
                    Gap::AtMost(k) => write!(f, "; after block {l}, gap <= {k}")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mql::parse;
    use crate::toy::toy4;

    fn plan(q: &str) -> Plan {
        explain(&parse(q).unwrap(), &Corpus::from_logical(&toy4()).unwrap())
    }

    #[test]
    fn dictionary_lookup() {
        let p = plan(r#"[word lex="fox"]"#);
        assert_eq!(
            p.blocks[0].source,
            Source::Dictionary { key: "lex".into(), values: vec!["fox".into()] }
        );
        assert_eq!(p.blocks[0].candidates, 1);
        assert_eq!(p.to_string(), "1. [word] dictionary lookup lex -> \"fox\", 1 candidate\n");
    }

    #[test]
    fn otype_scan() {
        let p = plan("[word]");
        assert_eq!(p.blocks[0].source, Source::OtypeScan { otype: "word".into() });
        assert_eq!(p.blocks[0].candidates, 4);
        assert!(p.to_string().contains("otype scan word, 4 candidates"));
    }

    #[test]
    fn nested_is_parent_first() {
        let p = plan(r#"[clause [phrase typ="NP"] [phrase]] .. [word]"#);
        let order: Vec<(&str, Option<usize>)> =
            p.blocks.iter().map(|b| (b.otype.as_str(), b.within)).collect();
        assert_eq!(order, [("clause", None), ("phrase", Some(1)), ("phrase", Some(1)), ("word", None)]);
        assert_eq!(p.blocks[2].after, Some((2, Gap::Adjacent)));
        assert_eq!(p.blocks[3].after, Some((1, Gap::Any)));
        assert_eq!(p.blocks[1].candidates, 1);
        let text = p.to_string();
        assert!(text.contains("  2. [phrase]"), "{text}");
        assert!(text.contains("embedded in block 1 (joined after its parent)"));
    }

    #[test]
    fn unknown_otype_is_described_not_rejected() {
        let p = plan("[paragraph]");
        assert_eq!(p.blocks[0].candidates, 0);
        assert!(p.to_string().contains("unknown otype paragraph"));
    }
}
