//! The topographic query language.
//!
//! A query is a string of bracketed blocks. Nesting a block inside another
//! asks for a node embedded in the outer node; writing blocks one after the
//! other asks for nodes in textual sequence. Results come back as
//! [`MatchTree`]s with the same shape as the query.
//!
//! ```
//! use fabric::{mql, toy, Corpus, NodeId};
//!
//! let corpus = Corpus::from_logical(&toy::toy4()).unwrap();
//! let q = mql::parse(r#"[clause [phrase typ="NP"] [phrase typ="VP"]]"#).unwrap();
//! let rs = mql::evaluate(&corpus, &q, &mql::EvalOptions::default()).unwrap();
//! assert_eq!(rs.matches.len(), 1);
//! let m = &rs.matches[0].blocks[0];
//! assert_eq!(m.node, NodeId(201));
//! assert_eq!(m.children[0].node, NodeId(101));
//! assert_eq!(m.children[1].node, NodeId(102));
//! assert_eq!(rs.passages, [NodeId(301)]);
//! ```

mod ast;
mod eval;
mod explain;
mod lexer;
mod oracle;
mod parser;

use std::fmt;

use thiserror::Error;

pub use ast::{Atom, Block, BlockString, Expr, Gap, Op, Operand, Pattern, Pos, Query};
pub use eval::{evaluate, evaluate_with, passages, Cutoff, EvalOptions, Match, MatchTree, Outcome, ResultSet};
pub use explain::{explain, BlockPlan, Plan, Source};
pub use oracle::{brute_force_evaluate, brute_force_evaluate_with_guard, ORACLE_GUARD};
pub use parser::parse;

/// A syntax error with its position and the tokens that would have been
/// accepted there.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub offset: usize,
    pub line: u32,
    pub column: u32,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub(crate) fn new(pos: Pos, message: impl Into<String>, expected: Vec<String>) -> Self {
        ParseError {
            offset: pos.offset,
            line: pos.line,
            column: pos.column,
            message: message.into(),
            expected,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {}, column {}: unknown object type `{otype}`", .pos.line, .pos.column)]
    UnknownOtype { otype: String, pos: Pos },
    #[error("line {}, column {}: unknown feature `{key}`", .pos.line, .pos.column)]
    UnknownFeature { key: String, pos: Pos },
    #[error("line {}, column {}: `{op}` needs an integer feature, `{key}` is not one", .pos.line, .pos.column)]
    NotInteger { key: String, op: &'static str, pos: Pos },
    #[error("query too large for exhaustive evaluation: {tuples} candidate tuples, limit {limit}")]
    GuardExceeded { tuples: u64, limit: u64 },
}

/// Parses and evaluates in one step.
pub fn run(corpus: &crate::Corpus, text: &str, opts: &EvalOptions) -> Result<ResultSet, QueryError> {
    let q = parse(text)?;
    evaluate(corpus, &q, opts)
}
