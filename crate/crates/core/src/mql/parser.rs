use regex::Regex;

use super::ast::{Atom, Block, BlockString, Expr, Gap, Op, Operand, Pattern, Pos, Query};
use super::lexer::{tokenize, Tok};
use super::ParseError;

const KEYWORDS: &[&str] = &["AND", "OR", "NOT", "IN"];

/// Parses a query string into its syntax tree.
///
/// ```
/// use fabric::mql::{parse, Gap};
///
/// let q = parse(r#"[clause [phrase typ="NP"] .. <= 2 [phrase]]"#).unwrap();
/// let inner = q.root.blocks[0].children.as_ref().unwrap();
/// assert_eq!(inner.blocks.len(), 2);
/// assert_eq!(inner.gaps, [Gap::AtMost(2)]);
/// ```
pub fn parse(text: &str) -> Result<Query, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, i: 0 };
    let root = p.blockstring()?;
    p.expect(&Tok::Eof, &["\"[\"", "\"..\"", "end of query"])?;
    Ok(Query { root })
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::new(
            self.pos(),
            format!("unexpected {}", self.peek()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn expect(&mut self, tok: &Tok, expected: &[&str]) -> Result<Pos, ParseError> {
        if self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn blockstring(&mut self) -> Result<BlockString, ParseError> {
        let mut blocks = vec![self.block()?];
        let mut gaps = Vec::new();
        loop {
            match self.peek() {
                Tok::LBracket => gaps.push(Gap::Adjacent),
                Tok::DotDot => {
                    self.bump();
                    if *self.peek() == Tok::Le {
                        self.bump();
                        match self.bump() {
                            (Tok::Int(k), _) if k >= 0 && k <= u32::MAX as i64 => {
                                gaps.push(Gap::AtMost(k as u32))
                            }
                            (_, pos) => {
                                return Err(ParseError::new(
                                    pos,
                                    "gap bound must be a non-negative integer",
                                    vec!["integer".into()],
                                ))
                            }
                        }
                    } else {
                        gaps.push(Gap::Any);
                    }
                    if *self.peek() != Tok::LBracket {
                        return Err(self.unexpected(&["\"[\"", "\"<=\""]));
                    }
                }
                _ => break,
            }
            blocks.push(self.block()?);
        }
        Ok(BlockString { blocks, gaps })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        let pos = self.expect(&Tok::LBracket, &["\"[\""])?;
        let otype = match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return Err(self.unexpected(&["object type"])),
        };
        self.bump();
        let constraint = match self.peek() {
            Tok::Ident(_) | Tok::LParen => Some(self.constraints()?),
            _ => None,
        };
        let children = match self.peek() {
            Tok::LBracket => Some(self.blockstring()?),
            _ => None,
        };
        let after_children: &[&str] = if children.is_some() {
            &["\"]\""]
        } else if constraint.is_some() {
            &["\"]\"", "\"[\"", "\"AND\"", "\"OR\""]
        } else {
            &["\"]\"", "\"[\"", "feature name", "\"NOT\"", "\"(\""]
        };
        self.expect(&Tok::RBracket, after_children)?;
        Ok(Block {
            otype,
            constraint,
            children,
            pos,
        })
    }

    fn constraints(&mut self) -> Result<Expr, ParseError> {
        let mut parts = vec![self.disjunct()?];
        while self.is_keyword("OR") {
            self.bump();
            parts.push(self.disjunct()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::Or(parts)
        })
    }

    fn disjunct(&mut self) -> Result<Expr, ParseError> {
        let mut parts = vec![self.conjunct()?];
        while self.is_keyword("AND") {
            self.bump();
            parts.push(self.conjunct()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::And(parts)
        })
    }

    fn conjunct(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let e = self.constraints()?;
            self.expect(&Tok::RParen, &["\")\"", "\"AND\"", "\"OR\""])?;
            return Ok(e);
        }
        if self.is_keyword("NOT") {
            self.bump();
            return Ok(Expr::Not(self.atom()?));
        }
        Ok(Expr::Atom(self.atom()?))
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let pos = self.pos();
        let key = match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return Err(self.unexpected(&["feature name"])),
        };
        self.bump();
        let op = match self.peek() {
            Tok::Eq => Op::Eq,
            Tok::Ne => Op::Ne,
            Tok::Tilde => Op::Match,
            Tok::Lt => Op::Lt,
            Tok::Le => Op::Le,
            Tok::Gt => Op::Gt,
            Tok::Ge => Op::Ge,
            Tok::Ident(s) if s == "IN" => Op::In,
            _ => {
                return Err(self.unexpected(&[
                    "\"=\"", "\"<>\"", "\"~\"", "\"IN\"", "\"<\"", "\"<=\"", "\">\"", "\">=\"",
                ]))
            }
        };
        self.bump();
        let operand_pos = self.pos();
        let operand = match (op, self.bump().0) {
            (Op::In, Tok::LParen) => {
                let mut vals = Vec::new();
                loop {
                    match self.bump() {
                        (Tok::Str(s), _) => vals.push(s),
                        (_, pos) => return Err(ParseError::new(pos, "expected a string in IN set", vec!["string".into()])),
                    }
                    match self.bump() {
                        (Tok::Comma, _) => continue,
                        (Tok::RParen, _) => break,
                        (_, pos) => {
                            return Err(ParseError::new(pos, "expected `,` or `)` in IN set", vec!["\",\"".into(), "\")\"".into()]))
                        }
                    }
                }
                Operand::Set(vals)
            }
            (Op::In, _) => {
                return Err(ParseError::new(operand_pos, "IN takes a parenthesized list of strings", vec!["\"(\"".into()]))
            }
            (Op::Match, Tok::Str(s)) => match Regex::new(&s) {
                Ok(re) => Operand::Regex(Pattern(re)),
                Err(e) => return Err(ParseError::new(operand_pos, format!("bad regex: {e}"), vec![])),
            },
            (Op::Match, _) => {
                return Err(ParseError::new(operand_pos, "`~` takes a string pattern", vec!["string".into()]))
            }
            (_, Tok::Int(i)) => Operand::Int(i),
            (op, Tok::Str(s)) if !op.is_comparison() => Operand::Str(s),
            (op, _) if op.is_comparison() => {
                return Err(ParseError::new(
                    operand_pos,
                    format!("`{}` takes an integer operand", op.symbol()),
                    vec!["integer".into()],
                ))
            }
            _ => {
                return Err(ParseError::new(operand_pos, "expected a string or integer", vec!["string".into(), "integer".into()]))
            }
        };
        Ok(Atom {
            key,
            op,
            operand,
            pos,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_block_with_constraint() {
        let q = parse(r#"[phrase typ="NP" [word lex="fox"]]"#).unwrap();
        assert_eq!(q.root.blocks.len(), 1);
        let phrase = &q.root.blocks[0];
        assert_eq!(phrase.otype, "phrase");
        match phrase.constraint.as_ref().unwrap() {
            Expr::Atom(a) => {
                assert_eq!((a.key.as_str(), a.op), ("typ", Op::Eq));
                assert_eq!(a.operand, Operand::Str("NP".into()));
            }
            other => panic!("unexpected {other:?}"),
        }
        let kids = phrase.children.as_ref().unwrap();
        assert_eq!(kids.blocks.len(), 1);
        assert_eq!(kids.blocks[0].otype, "word");
        assert!(kids.gaps.is_empty());
    }

    #[test]
    fn minimal_query() {
        let q = parse("[word]").unwrap();
        assert_eq!(q.root.blocks.len(), 1);
        assert!(q.root.blocks[0].constraint.is_none());
        assert!(q.root.blocks[0].children.is_none());
    }

    #[test]
    fn unbalanced_bracket_reports_position() {
        let e = parse("[word][word").unwrap_err();
        assert_eq!((e.line, e.column), (1, 12));
        assert_eq!(e.offset, 11);
        assert!(e.expected.iter().any(|x| x == "\"]\""), "{e:?}");
    }

    #[test]
    fn gaps_and_precedence() {
        let q = parse(r#"[word a="1" OR b="2" AND NOT c="3"] .. [word] .. <= 0 [word] [word]"#).unwrap();
        assert_eq!(q.root.gaps, [Gap::Any, Gap::AtMost(0), Gap::Adjacent]);
        match q.root.blocks[0].constraint.as_ref().unwrap() {
            Expr::Or(parts) => {
                assert!(matches!(parts[0], Expr::Atom(_)));
                assert!(matches!(&parts[1], Expr::And(a) if matches!(a[1], Expr::Not(_))));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn operands() {
        let q = parse(r#"[word n>=3 AND g IN ("m","f") AND lex~"^qu" AND (x=-2 OR y<>"a\"b")]"#).unwrap();
        let atoms = q.root.blocks[0].constraint.as_ref().unwrap().atoms();
        assert_eq!(atoms[0].operand, Operand::Int(3));
        assert_eq!(atoms[1].operand, Operand::Set(vec!["m".into(), "f".into()]));
        assert!(matches!(atoms[2].operand, Operand::Regex(_)));
        assert_eq!(atoms[3].operand, Operand::Int(-2));
        assert_eq!(atoms[4].operand, Operand::Str("a\"b".into()));
    }

    #[test]
    fn errors() {
        assert!(parse(r#"[word lex~"("]"#).unwrap_err().message.contains("regex"));
        assert!(parse(r#"[word n<"a"]"#).is_err());
        assert!(parse(r#"[word g IN "a"]"#).is_err());
        assert!(parse("[word] ..").is_err());
        assert!(parse("[]").is_err());
        assert!(parse("[word]]").is_err());
        assert!(parse("word").is_err());
        let e = parse("[word\n  lex=]").unwrap_err();
        assert_eq!((e.line, e.column), (2, 7));
    }

    #[test]
    fn comments_and_whitespace() {
        let q = parse("// leading comment\n[ word // trailing\n lex = \"a\" ]").unwrap();
        assert_eq!(q.root.blocks[0].otype, "word");
    }

    #[test]
    fn display_reparses_to_same_text() {
        for src in [
            r#"[clause [phrase typ="NP"] [phrase typ="VP"]]"#,
            r#"[word text="the"] .. [word text="jumps"]"#,
            r#"[word (a="x" OR NOT b~"^y$") AND c IN ("p","q")] .. <= 3 [phrase n>=-1]"#,
        ] {
            let q = parse(src).unwrap();
            let printed = q.to_string();
            assert_eq!(parse(&printed).unwrap().to_string(), printed);
        }
    }
}
