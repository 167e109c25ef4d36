//! Row predicates: equality, in-list, and inclusive range, joined by AND.

use std::fmt;

use crate::error::{Error, Result};
use crate::value::{ColumnType, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Eq(String, Value),
    InList(String, Vec<Value>),
    /// Inclusive on both ends.
    Range(String, Value, Value),
    And(Vec<Predicate>),
}

impl Predicate {
    pub fn eq(col: impl Into<String>, v: impl Into<Value>) -> Self {
        Predicate::Eq(col.into(), v.into())
    }

    pub fn in_list(col: impl Into<String>, vs: Vec<Value>) -> Self {
        Predicate::InList(col.into(), vs)
    }

    pub fn range(col: impl Into<String>, lo: impl Into<Value>, hi: impl Into<Value>) -> Self {
        Predicate::Range(col.into(), lo.into(), hi.into())
    }

    /// Matches every live row.
    pub fn all() -> Self {
        Predicate::And(Vec::new())
    }

    /// Flattens nested conjunctions into a list of leaf predicates.
    pub fn leaves(&self) -> Vec<&Predicate> {
        match self {
            Predicate::And(ps) => ps.iter().flat_map(|p| p.leaves()).collect(),
            leaf => vec![leaf],
        }
    }

    /// Whether `row` (values in schema order) satisfies the predicate. Used by
    /// row-oriented reference checks.
    pub fn matches_row(&self, schema: &[(String, ColumnType)], row: &[Value]) -> bool {
        let get = |c: &str| schema.iter().position(|(n, _)| n == c).map(|i| &row[i]);
        match self {
            Predicate::Eq(c, v) => get(c).is_some_and(|x| x == v),
            Predicate::InList(c, vs) => get(c).is_some_and(|x| vs.contains(x)),
            Predicate::Range(c, lo, hi) => get(c).is_some_and(|x| lo <= x && x <= hi),
            Predicate::And(ps) => ps.iter().all(|p| p.matches_row(schema, row)),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn lit(v: &Value) -> String {
            match v {
                Value::Str(s) => format!("'{}'", s.replace('\'', "''")),
                other => other.to_string(),
            }
        }
        match self {
            Predicate::Eq(c, v) => write!(f, "{c} = {}", lit(v)),
            Predicate::InList(c, vs) => {
                let items: Vec<String> = vs.iter().map(lit).collect();
                write!(f, "{c} IN ({})", items.join(", "))
            }
            Predicate::Range(c, lo, hi) => write!(f, "{c} BETWEEN {} AND {}", lit(lo), lit(hi)),
            Predicate::And(ps) => {
                let parts: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                f.write_str(&parts.join(" AND "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Quoted(String),
    Eq,
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '=' => {
                chars.next();
                out.push(Token::Eq);
            }
            '(' => {
                chars.next();
                out.push(Token::LParen);
            }
            ')' => {
                chars.next();
                out.push(Token::RParen);
            }
            ',' => {
                chars.next();
                out.push(Token::Comma);
            }
            '\'' | '"' => {
                let quote = c;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some(ch) if ch == quote => {
                            if chars.peek() == Some(&quote) {
                                chars.next();
                                s.push(quote);
                            } else {
                                break;
                            }
                        }
                        Some(ch) => s.push(ch),
                        None => {
                            return Err(Error::Malformed(format!(
                                "unterminated string in predicate {text:?}"
                            )))
                        }
                    }
                }
                out.push(Token::Quoted(s));
            }
            _ => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || "=(),'\"".contains(ch) {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                out.push(Token::Ident(s));
            }
        }
    }
    Ok(out)
}

/// Parses `col = v`, `col IN (v, ...)` and `col BETWEEN a AND b` clauses
/// joined by `AND`. Literals are typed by the named column.
pub fn parse_predicate(text: &str, schema: &[(String, ColumnType)]) -> Result<Predicate> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        schema,
        text,
    };
    let mut clauses = Vec::new();
    if p.tokens.is_empty() {
        return Ok(Predicate::all());
    }
    loop {
        clauses.push(p.clause()?);
        match p.next() {
            None => break,
            Some(Token::Ident(k)) if k.eq_ignore_ascii_case("AND") => {}
            Some(t) => return Err(p.error(&format!("expected AND, found {t:?}"))),
        }
    }
    Ok(if clauses.len() == 1 {
        clauses.pop().unwrap()
    } else {
        Predicate::And(clauses)
    })
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    schema: &'a [(String, ColumnType)],
    text: &'a str,
}

impl Parser<'_> {
    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error(&self, msg: &str) -> Error {
        Error::Malformed(format!("{msg} in predicate {:?}", self.text))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.next() {
            Some(Token::Ident(k)) if k.eq_ignore_ascii_case(kw) => Ok(()),
            _ => Err(self.error(&format!("expected {kw}"))),
        }
    }

    fn literal(&mut self, ty: ColumnType) -> Result<Value> {
        match self.next() {
            Some(Token::Ident(s)) | Some(Token::Quoted(s)) => Value::parse(&s, ty),
            _ => Err(self.error("expected a literal")),
        }
    }

    fn clause(&mut self) -> Result<Predicate> {
        let col = match self.next() {
            Some(Token::Ident(c)) | Some(Token::Quoted(c)) => c,
            _ => return Err(self.error("expected a column name")),
        };
        let ty = self
            .schema
            .iter()
            .find(|(n, _)| *n == col)
            .map(|(_, t)| *t)
            .ok_or_else(|| Error::UnknownColumn(col.clone()))?;
        match self.next() {
            Some(Token::Eq) => Ok(Predicate::Eq(col, self.literal(ty)?)),
            Some(Token::Ident(k)) if k.eq_ignore_ascii_case("IN") => {
                if self.next() != Some(Token::LParen) {
                    return Err(self.error("expected ("));
                }
                let mut vs = vec![self.literal(ty)?];
                loop {
                    match self.next() {
                        Some(Token::Comma) => vs.push(self.literal(ty)?),
                        Some(Token::RParen) => break,
                        _ => return Err(self.error("expected , or )")),
                    }
                }
                Ok(Predicate::InList(col, vs))
            }
            Some(Token::Ident(k)) if k.eq_ignore_ascii_case("BETWEEN") => {
                let lo = self.literal(ty)?;
                self.keyword("AND")?;
                let hi = self.literal(ty)?;
                Ok(Predicate::Range(col, lo, hi))
            }
            _ => Err(self.error("expected =, IN or BETWEEN")),
        }
    }
}
