//! Prefix text form of query expressions.
//!
//! ```text
//! expr   := (atom PATH) | (placeholder LABEL FROM TO)
//!         | (concat expr expr) | (intersect expr expr)
//!         | (union expr expr) | (difference expr expr)
//!         | (select expr CMP "literal") | (count expr)
//!         | (tree (atom PATH) node)
//! PATH   := HEAD | [HEAD] (FACT DIR)+        DIR := fwd | rev
//! node   := (node TYPE branch*)
//! branch := (branch FACT DIR node)
//! CMP    := = | != | < | <= | > | >=
//! ```
//!
//! The printer omits the head of non-empty paths (the first step fixes it),
//! so parsing needs the schema.

use std::fmt;

use thiserror::Error;

use super::{Comparison, ExprError, QueryExpr};
use crate::pathfinder::SchemaPath;
use crate::schema::{is_identifier, Direction, FactTypeId, ObjectTypeId, SchemaGraph, Step};
use crate::spider::{Branch, QueryTree, SpiderTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct TextError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
    Str(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, TextError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut column) = (1, 1);
    let bump = |c: char, line: &mut usize, column: &mut usize| {
        if c == '\n' {
            *line += 1;
            *column = 1;
        } else {
            *column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        match c {
            c if c.is_whitespace() => {
                chars.next();
                bump(c, &mut line, &mut column);
            }
            ';' => {
                // comment to end of line
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    bump(c, &mut line, &mut column);
                }
            }
            '(' | ')' => {
                chars.next();
                bump(c, &mut line, &mut column);
                out.push(Spanned {
                    tok: if c == '(' { Tok::Open } else { Tok::Close },
                    line: l,
                    column: col,
                });
            }
            '"' => {
                chars.next();
                bump(c, &mut line, &mut column);
                let mut s = String::new();
                loop {
                    let Some(c) = chars.next() else {
                        return Err(TextError {
                            line: l,
                            column: col,
                            message: "unterminated string".into(),
                        });
                    };
                    bump(c, &mut line, &mut column);
                    match c {
                        '"' => break,
                        '\\' => {
                            if let Some(e) = chars.next() {
                                bump(e, &mut line, &mut column);
                                s.push(e);
                            }
                        }
                        c => s.push(c),
                    }
                }
                out.push(Spanned {
                    tok: Tok::Str(s),
                    line: l,
                    column: col,
                });
            }
            _ => {
                let mut w = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    w.push(c);
                    chars.next();
                    bump(c, &mut line, &mut column);
                }
                out.push(Spanned {
                    tok: Tok::Word(w),
                    line: l,
                    column: col,
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    g: &'a SchemaGraph,
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> TextError {
        let (line, column) = self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.column));
        TextError {
            line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn open(&mut self) -> Result<(), TextError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error("expected `(`")),
        }
    }

    fn close(&mut self) -> Result<(), TextError> {
        match self.peek() {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error("expected `)`")),
        }
    }

    fn word(&mut self, what: &str) -> Result<String, TextError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn word_or_str(&mut self, what: &str) -> Result<String, TextError> {
        match self.peek() {
            Some(Tok::Word(w)) | Some(Tok::Str(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn object_type(&mut self) -> Result<ObjectTypeId, TextError> {
        let name = self.word("object type")?;
        self.g.resolve(&name).map_err(|e| {
            self.pos -= 1;
            self.error(e.to_string())
        })
    }

    fn expr(&mut self) -> Result<QueryExpr, TextError> {
        self.open()?;
        let head = self.word("connective")?;
        let e = match head.as_str() {
            "atom" => QueryExpr::Atom(self.path_body()?),
            "placeholder" => {
                let label = self.word_or_str("placeholder label")?;
                let from = self.object_type()?;
                let to = self.object_type()?;
                QueryExpr::Placeholder { label, from, to }
            }
            "concat" | "intersect" | "union" | "difference" => {
                let l = Box::new(self.expr()?);
                let r = Box::new(self.expr()?);
                match head.as_str() {
                    "concat" => QueryExpr::Concat(l, r),
                    "intersect" => QueryExpr::Intersect(l, r),
                    "union" => QueryExpr::Union(l, r),
                    _ => QueryExpr::Difference(l, r),
                }
            }
            "select" => {
                let inner = Box::new(self.expr()?);
                let sym = self.word("comparison")?;
                let cmp = Comparison::parse(&sym).ok_or_else(|| {
                    self.pos -= 1;
                    self.error(format!("unknown comparison `{sym}`"))
                })?;
                let literal = self.word_or_str("literal")?;
                QueryExpr::Select { inner, cmp, literal }
            }
            "count" => QueryExpr::Count(Box::new(self.expr()?)),
            "tree" => {
                self.open()?;
                let kw = self.word("`atom`")?;
                if kw != "atom" {
                    self.pos -= 1;
                    return Err(self.error("tree stem must be an `(atom ...)`"));
                }
                let stem = self.path_body()?;
                self.close()?;
                let crown = self.node()?;
                QueryExpr::Tree(QueryTree { stem, crown })
            }
            other => {
                self.pos -= 1;
                return Err(self.error(format!("unknown connective `{other}`")));
            }
        };
        self.close()?;
        Ok(e)
    }

    fn node(&mut self) -> Result<SpiderTree, TextError> {
        self.open()?;
        if self.word("`node`")? != "node" {
            self.pos -= 1;
            return Err(self.error("expected `node`"));
        }
        let root = self.object_type()?;
        let mut branches = Vec::new();
        while self.peek() == Some(&Tok::Open) {
            self.open()?;
            if self.word("`branch`")? != "branch" {
                self.pos -= 1;
                return Err(self.error("expected `branch`"));
            }
            let step = self.step()?;
            let child = self.node()?;
            self.close()?;
            branches.push(Branch { step, child });
        }
        self.close()?;
        Ok(SpiderTree { root, branches })
    }

    fn step(&mut self) -> Result<Step, TextError> {
        let fact = self.word("fact type id")?;
        if self.g.fact_type(&FactTypeId::new(fact.as_str())).is_none() {
            self.pos -= 1;
            return Err(self.error(format!("unknown fact type `{fact}`")));
        }
        let dir = self.word("direction")?;
        let direction = Direction::parse(&dir).ok_or_else(|| {
            self.pos -= 1;
            self.error(format!("expected `fwd` or `rev`, found `{dir}`"))
        })?;
        Ok(Step {
            fact_type: FactTypeId(fact),
            direction,
        })
    }

    /// Path tokens up to the closing parenthesis.
    fn path_body(&mut self) -> Result<SchemaPath, TextError> {
        let mut words = 0;
        while let Some(Tok::Word(_)) = self.toks.get(self.pos + words).map(|t| &t.tok) {
            words += 1;
        }
        if words == 0 {
            return Err(self.error("expected a path"));
        }
        let explicit_head = if words % 2 == 1 {
            Some(self.object_type()?)
        } else {
            None
        };
        let mut steps = Vec::new();
        for _ in 0..words / 2 {
            steps.push(self.step()?);
        }
        let head = match explicit_head {
            Some(h) => h,
            None => {
                let (from, _) = self.g.step_ends(&steps[0]).expect("fact type checked");
                from.clone()
            }
        };
        Ok(SchemaPath { head, steps })
    }
}

fn parser<'a>(g: &'a SchemaGraph, text: &str) -> Result<Parser<'a>, TextError> {
    let toks = lex(text)?;
    let lines: Vec<&str> = text.lines().collect();
    let end = (lines.len().max(1), lines.last().map_or(0, |l| l.chars().count()) + 1);
    Ok(Parser { g, toks, pos: 0, end })
}

/// Parses one expression in prefix form.
pub fn parse_query(g: &SchemaGraph, text: &str) -> Result<QueryExpr, ExprError> {
    let mut p = parser(g, text)?;
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.error("unexpected trailing input").into());
    }
    Ok(e)
}

/// Parses bare path tokens (`President FT3 fwd` or `FT3 fwd FT4 fwd`); an
/// `(atom ...)` form is accepted too.
pub fn parse_path(g: &SchemaGraph, text: &str) -> Result<SchemaPath, ExprError> {
    let trimmed = text.trim();
    if trimmed.starts_with('(') {
        return match parse_query(g, trimmed)? {
            QueryExpr::Atom(p) => Ok(p),
            _ => Err(TextError {
                line: 1,
                column: 1,
                message: "expected an `(atom ...)` path".into(),
            }
            .into()),
        };
    }
    let mut p = parser(g, trimmed)?;
    let path = p.path_body()?;
    if p.pos != p.toks.len() {
        return Err(p.error("unexpected trailing input").into());
    }
    Ok(path)
}

fn label(s: &str) -> String {
    if is_identifier(s) {
        s.to_owned()
    } else {
        quoted(s)
    }
}

fn quoted(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Bare path tokens; the head is written only for 0-step paths.
pub fn path_to_text(p: &SchemaPath) -> String {
    if p.steps.is_empty() {
        return p.head.0.clone();
    }
    p.steps
        .iter()
        .map(|s| format!("{} {}", s.fact_type, s.direction))
        .collect::<Vec<_>>()
        .join(" ")
}

struct Printer<'a>(&'a QueryExpr);

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            QueryExpr::Atom(p) => write!(f, "(atom {})", path_to_text(p)),
            QueryExpr::Placeholder { label: l, from, to } => {
                write!(f, "(placeholder {} {} {})", label(l), from, to)
            }
            QueryExpr::Concat(a, b) => write!(f, "(concat {} {})", Printer(a), Printer(b)),
            QueryExpr::Intersect(a, b) => write!(f, "(intersect {} {})", Printer(a), Printer(b)),
            QueryExpr::Union(a, b) => write!(f, "(union {} {})", Printer(a), Printer(b)),
            QueryExpr::Difference(a, b) => write!(f, "(difference {} {})", Printer(a), Printer(b)),
            QueryExpr::Select { inner, cmp, literal } => {
                write!(f, "(select {} {} {})", Printer(inner), cmp, quoted(literal))
            }
            QueryExpr::Count(inner) => write!(f, "(count {})", Printer(inner)),
            QueryExpr::Tree(qt) => {
                write!(f, "(tree (atom {}) ", path_to_text(&qt.stem))?;
                write_node(f, &qt.crown)?;
                f.write_str(")")
            }
        }
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, t: &SpiderTree) -> fmt::Result {
    write!(f, "(node {}", t.root)?;
    for b in &t.branches {
        write!(f, " (branch {} {} ", b.step.fact_type, b.step.direction)?;
        write_node(f, &b.child)?;
        f.write_str(")")?;
    }
    f.write_str(")")
}

/// Canonical single-line text of an expression.
pub fn to_text(e: &QueryExpr) -> String {
    Printer(e).to_string()
}
