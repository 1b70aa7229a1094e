use std::fmt;

use regex::Regex;

/// Byte offset plus 1-based line and column of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub offset: usize,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub root: BlockString,
}

/// Blocks in sequence; `gaps[i]` sits between `blocks[i]` and `blocks[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockString {
    pub blocks: Vec<Block>,
    pub gaps: Vec<Gap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gap {
    /// Juxtaposition: the next block starts right after this one ends.
    Adjacent,
    /// `..`: the next block starts anywhere after this one ends.
    Any,
    /// `.. <= k`: at most `k` monads in between.
    AtMost(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub otype: String,
    pub constraint: Option<Expr>,
    pub children: Option<BlockString>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Atom(Atom),
    Not(Atom),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub key: String,
    pub op: Op,
    pub operand: Operand,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Eq,
    Ne,
    Match,
    In,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    pub fn is_comparison(&self) -> bool {
        matches!(self, Op::Lt | Op::Le | Op::Gt | Op::Ge)
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Ne => "<>",
            Op::Match => "~",
            Op::In => "IN",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Str(String),
    Int(i64),
    Set(Vec<String>),
    Regex(Pattern),
}

/// A compiled regular expression. Unanchored unless the pattern uses `^`/`$`.
#[derive(Debug, Clone)]
pub struct Pattern(pub Regex);

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.0.as_str() == other.0.as_str()
    }
}

impl Query {
    /// Blocks in pre-order (a block before its nested blocks, nested blocks
    /// before the following siblings).
    pub fn blocks_preorder(&self) -> Vec<&Block> {
        fn walk<'a>(bs: &'a BlockString, out: &mut Vec<&'a Block>) {
            for b in &bs.blocks {
                out.push(b);
                if let Some(c) = &b.children {
                    walk(c, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn depth(&self) -> usize {
        fn d(bs: &BlockString) -> usize {
            1 + bs
                .blocks
                .iter()
                .filter_map(|b| b.children.as_ref().map(d))
                .max()
                .unwrap_or(0)
        }
        d(&self.root)
    }
}

impl Expr {
    pub fn atoms(&self) -> Vec<&Atom> {
        match self {
            Expr::Atom(a) | Expr::Not(a) => vec![a],
            Expr::And(es) | Expr::Or(es) => es.iter().flat_map(Expr::atoms).collect(),
        }
    }
}

fn write_str_lit(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl fmt::Display for BlockString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                match self.gaps[i - 1] {
                    Gap::Adjacent => f.write_str(" ")?,
                    Gap::Any => f.write_str(" .. ")?,
                    Gap::AtMost(k) => write!(f, " .. <= {k} ")?,
                }
            }
            b.fmt(f)?;
        }
        Ok(())
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.otype)?;
        if let Some(c) = &self.constraint {
            write!(f, " {c}")?;
        }
        if let Some(c) = &self.children {
            write!(f, " {c}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let group = |f: &mut fmt::Formatter<'_>, e: &Expr| match e {
            Expr::Atom(_) | Expr::Not(_) => e.fmt(f),
            _ => write!(f, "({e})"),
        };
        match self {
            Expr::Atom(a) => a.fmt(f),
            Expr::Not(a) => write!(f, "NOT {a}"),
            Expr::And(es) | Expr::Or(es) => {
                let sep = if matches!(self, Expr::And(_)) { " AND " } else { " OR " };
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    group(f, e)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.op == Op::In {
            write!(f, "{} IN ", self.key)?;
        } else {
            write!(f, "{}{}", self.key, self.op.symbol())?;
        }
        match &self.operand {
            Operand::Str(s) => write_str_lit(f, s),
            Operand::Int(i) => write!(f, "{i}"),
            Operand::Regex(p) => write_str_lit(f, p.0.as_str()),
            Operand::Set(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write_str_lit(f, v)?;
                }
                f.write_str(")")
            }
        }
    }
}
