use std::fmt;

use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    DotDot,
    Eq,
    Ne,
    Tilde,
    Lt,
    Le,
    Gt,
    Ge,
    Ident(String),
    Str(String),
    Int(i64),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LBracket => f.write_str("\"[\""),
            Tok::RBracket => f.write_str("\"]\""),
            Tok::LParen => f.write_str("\"(\""),
            Tok::RParen => f.write_str("\")\""),
            Tok::Comma => f.write_str("\",\""),
            Tok::DotDot => f.write_str("\"..\""),
            Tok::Eq => f.write_str("\"=\""),
            Tok::Ne => f.write_str("\"<>\""),
            Tok::Tilde => f.write_str("\"~\""),
            Tok::Lt => f.write_str("\"<\""),
            Tok::Le => f.write_str("\"<=\""),
            Tok::Gt => f.write_str("\">\""),
            Tok::Ge => f.write_str("\">=\""),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Eof => f.write_str("end of query"),
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let (mut line, mut col) = (1u32, 1u32);

    // advance over chars[i..j], keeping line/column current
    let advance = |i: &mut usize, j: usize, line: &mut u32, col: &mut u32| {
        for &(_, c) in &chars[*i..j] {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i = j;
    };

    while i < chars.len() {
        let (offset, c) = chars[i];
        let pos = Pos {
            offset,
            line,
            column: col,
        };
        let peek = chars.get(i + 1).map(|x| x.1);
        if c.is_whitespace() {
            let j = i + 1;
            advance(&mut i, j, &mut line, &mut col);
            continue;
        }
        if c == '/' && peek == Some('/') {
            let mut j = i;
            while j < chars.len() && chars[j].1 != '\n' {
                j += 1;
            }
            advance(&mut i, j, &mut line, &mut col);
            continue;
        }
        let (tok, len) = match c {
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ',' => (Tok::Comma, 1),
            '=' => (Tok::Eq, 1),
            '~' => (Tok::Tilde, 1),
            '.' if peek == Some('.') => (Tok::DotDot, 2),
            '<' if peek == Some('>') => (Tok::Ne, 2),
            '<' if peek == Some('=') => (Tok::Le, 2),
            '<' => (Tok::Lt, 1),
            '>' if peek == Some('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    let Some(&(_, d)) = chars.get(j) else {
                        return Err(ParseError::new(pos, "unterminated string literal", vec![]));
                    };
                    match d {
                        '"' => break,
                        '\\' => {
                            let e = chars.get(j + 1).map(|x| x.1);
                            s.push(match e {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('r') => '\r',
                                _ => {
                                    return Err(ParseError::new(
                                        pos,
                                        format!("bad escape `\\{}` in string", e.unwrap_or(' ')),
                                        vec![],
                                    ))
                                }
                            });
                            j += 2;
                        }
                        d => {
                            s.push(d);
                            j += 1;
                        }
                    }
                }
                (Tok::Str(s), j + 1 - i)
            }
            c if c.is_ascii_digit() || (c == '-' && peek.is_some_and(|p| p.is_ascii_digit())) => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].1.is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i..j].iter().map(|x| x.1).collect();
                let v = text
                    .parse::<i64>()
                    .map_err(|_| ParseError::new(pos, format!("integer `{text}` out of range"), vec![]))?;
                (Tok::Int(v), j - i)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                    j += 1;
                }
                (Tok::Ident(chars[i..j].iter().map(|x| x.1).collect()), j - i)
            }
            c => {
                return Err(ParseError::new(pos, format!("unexpected character `{c}`"), vec![]));
            }
        };
        out.push((tok, pos));
        let j = i + len;
        advance(&mut i, j, &mut line, &mut col);
    }
    out.push((
        Tok::Eof,
        Pos {
            offset: src.len(),
            line,
            column: col,
        },
    ));
    Ok(out)
}
