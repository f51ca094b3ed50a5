//! Syntax-directed query construction.
//!
//! Path particles from the other mechanisms become [`QueryExpr::Atom`]s and
//! are combined with typed connectives. Every composite node carries a
//! head/tail typing derived bottom-up; [`combine`] refuses to build
//! ill-typed nodes and [`validate_expr`] reports every problem in a tree
//! loaded from elsewhere.
//!
//! `Count` and `Tree` produce a scalar and a table respectively, so they are
//! only allowed at the root of an expression.

mod text;

pub use text::{parse_path, parse_query, path_to_text, to_text, TextError};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pathfinder::{PathError, SchemaPath};
use crate::schema::{verbalize_path, ObjectTypeId, SchemaGraph, Violation};
use crate::spider::{tree_paths, QueryTree};

/// Tail type of a `Count` expression.
pub const NUMBER: &str = "Number";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparison {
    pub const ALL: [Comparison; 6] = [
        Comparison::Eq,
        Comparison::Ne,
        Comparison::Lt,
        Comparison::Le,
        Comparison::Gt,
        Comparison::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Eq => "=",
            Comparison::Ne => "!=",
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "=" | "==" => Some(Comparison::Eq),
            "!=" | "<>" | "≠" => Some(Comparison::Ne),
            "<" => Some(Comparison::Lt),
            "<=" | "≤" => Some(Comparison::Le),
            ">" => Some(Comparison::Gt),
            ">=" | "≥" => Some(Comparison::Ge),
            _ => None,
        }
    }

    fn words(self) -> &'static str {
        match self {
            Comparison::Eq => "equal to",
            Comparison::Ne => "not equal to",
            Comparison::Lt => "less than",
            Comparison::Le => "at most",
            Comparison::Gt => "greater than",
            Comparison::Ge => "at least",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Comparison::Eq => ord == Equal,
            Comparison::Ne => ord != Equal,
            Comparison::Lt => ord == Less,
            Comparison::Le => ord != Greater,
            Comparison::Gt => ord == Greater,
            Comparison::Ge => ord != Less,
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryExpr {
    Atom(SchemaPath),
    Placeholder {
        label: String,
        from: ObjectTypeId,
        to: ObjectTypeId,
    },
    Concat(Box<QueryExpr>, Box<QueryExpr>),
    Intersect(Box<QueryExpr>, Box<QueryExpr>),
    Union(Box<QueryExpr>, Box<QueryExpr>),
    Difference(Box<QueryExpr>, Box<QueryExpr>),
    Select {
        inner: Box<QueryExpr>,
        cmp: Comparison,
        literal: String,
    },
    Count(Box<QueryExpr>),
    Tree(QueryTree),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connective {
    Concat,
    Intersect,
    Union,
    Difference,
    Select { cmp: Comparison, literal: String },
    Count,
}

impl Connective {
    fn arity(&self) -> usize {
        match self {
            Connective::Select { .. } | Connective::Count => 1,
            _ => 2,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Connective::Concat => "concat",
            Connective::Intersect => "intersect",
            Connective::Union => "union",
            Connective::Difference => "difference",
            Connective::Select { .. } => "select",
            Connective::Count => "count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeadTail {
    pub head: ObjectTypeId,
    pub tail: ObjectTypeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("{0}")]
    Typing(String),
    #[error("{connective} takes {expected} argument(s), got {found}")]
    Arity {
        connective: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("no placeholder labelled `{0}`")]
    UnknownLabel(String),
    #[error("replacement for `{label}` types as {found}, placeholder expects {expected}")]
    SpliceMismatch {
        label: String,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Syntax(#[from] TextError),
}

impl QueryExpr {
    pub fn atom_path(p: SchemaPath) -> Self {
        QueryExpr::Atom(p)
    }

    pub fn placeholder(label: &str, from: &str, to: &str) -> Self {
        QueryExpr::Placeholder {
            label: label.to_owned(),
            from: ObjectTypeId::new(from),
            to: ObjectTypeId::new(to),
        }
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&QueryExpr> {
        match self {
            QueryExpr::Atom(_) | QueryExpr::Placeholder { .. } | QueryExpr::Tree(_) => Vec::new(),
            QueryExpr::Concat(l, r)
            | QueryExpr::Intersect(l, r)
            | QueryExpr::Union(l, r)
            | QueryExpr::Difference(l, r) => vec![l, r],
            QueryExpr::Select { inner, .. } | QueryExpr::Count(inner) => vec![inner],
        }
    }

    pub fn has_placeholders(&self) -> bool {
        matches!(self, QueryExpr::Placeholder { .. }) || self.children().iter().any(|c| c.has_placeholders())
    }
}

impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_text(self))
    }
}

/// Wraps a valid path as a particle.
pub fn atom(g: &SchemaGraph, p: SchemaPath) -> Result<QueryExpr, ExprError> {
    p.tail(g)?;
    Ok(QueryExpr::Atom(p))
}

/// Builds a composite node, refusing ill-typed combinations.
pub fn combine(g: &SchemaGraph, op: Connective, args: Vec<QueryExpr>) -> Result<QueryExpr, ExprError> {
    if args.len() != op.arity() {
        return Err(ExprError::Arity {
            connective: op.name(),
            expected: op.arity(),
            found: args.len(),
        });
    }
    let mut args = args.into_iter().map(Box::new);
    let mut next = || args.next().expect("arity checked");
    let expr = match op {
        Connective::Concat => QueryExpr::Concat(next(), next()),
        Connective::Intersect => QueryExpr::Intersect(next(), next()),
        Connective::Union => QueryExpr::Union(next(), next()),
        Connective::Difference => QueryExpr::Difference(next(), next()),
        Connective::Select { cmp, literal } => QueryExpr::Select {
            inner: next(),
            cmp,
            literal,
        },
        Connective::Count => QueryExpr::Count(next()),
    };
    head_tail(g, &expr)?;
    Ok(expr)
}

/// Derived typing of a valid expression.
pub fn head_tail(g: &SchemaGraph, e: &QueryExpr) -> Result<HeadTail, ExprError> {
    let mut violations = Vec::new();
    let ht = check(g, e, true, &mut violations);
    match (violations.into_iter().next(), ht) {
        (None, Some(ht)) => Ok(ht),
        (Some(v), _) => Err(ExprError::Typing(v.0)),
        (None, None) => Err(ExprError::Typing("expression does not type".into())),
    }
}

pub fn validate_expr(g: &SchemaGraph, e: &QueryExpr) -> Vec<Violation> {
    let mut out = Vec::new();
    check(g, e, true, &mut out);
    out
}

fn check(g: &SchemaGraph, e: &QueryExpr, root: bool, out: &mut Vec<Violation>) -> Option<HeadTail> {
    match e {
        QueryExpr::Atom(p) => match p.tail(g) {
            Ok(tail) => Some(HeadTail {
                head: p.head.clone(),
                tail,
            }),
            Err(err) => {
                out.push(Violation(format!("atom: {err}")));
                None
            }
        },
        QueryExpr::Placeholder { label, from, to } => {
            let mut ok = true;
            for id in [from, to] {
                if !g.contains(id) {
                    out.push(Violation(format!("placeholder [{label}]: unknown object type `{id}`")));
                    ok = false;
                }
            }
            ok.then(|| HeadTail {
                head: from.clone(),
                tail: to.clone(),
            })
        }
        QueryExpr::Concat(l, r) => {
            let (l, r) = (check(g, l, false, out), check(g, r, false, out));
            let (l, r) = (l?, r?);
            if l.tail != r.head {
                out.push(Violation(format!(
                    "concat: left ends at {} but right starts at {}",
                    l.tail, r.head
                )));
                return None;
            }
            Some(HeadTail {
                head: l.head,
                tail: r.tail,
            })
        }
        QueryExpr::Intersect(l, r) | QueryExpr::Union(l, r) | QueryExpr::Difference(l, r) => {
            let name = match e {
                QueryExpr::Intersect(..) => "intersect",
                QueryExpr::Union(..) => "union",
                _ => "difference",
            };
            let (l, r) = (check(g, l, false, out), check(g, r, false, out));
            let (l, r) = (l?, r?);
            if l != r {
                out.push(Violation(format!(
                    "{name}: left types as {} to {} but right as {} to {}",
                    l.head, l.tail, r.head, r.tail
                )));
                return None;
            }
            Some(l)
        }
        QueryExpr::Select { inner, .. } => {
            let ht = check(g, inner, false, out)?;
            let selectable = g
                .object_type(&ht.tail)
                .is_some_and(|o| o.is_value() || o.reference_scheme().is_some_and(|s| !s.trim().is_empty()));
            if !selectable {
                out.push(Violation(format!(
                    "select: {} has no values to compare against",
                    ht.tail
                )));
                return None;
            }
            Some(ht)
        }
        QueryExpr::Count(inner) => {
            let ht = check(g, inner, false, out);
            if !root {
                out.push(Violation(
                    "count yields a number and can only be the whole query".into(),
                ));
                return None;
            }
            Some(HeadTail {
                head: ht?.head,
                tail: ObjectTypeId::new(NUMBER),
            })
        }
        QueryExpr::Tree(qt) => {
            let mut ok = true;
            let stem_tail = match qt.stem.tail(g) {
                Ok(t) => Some(t),
                Err(err) => {
                    out.push(Violation(format!("tree stem: {err}")));
                    ok = false;
                    None
                }
            };
            if let Err(msg) = qt.crown.check(g) {
                out.push(Violation(format!("tree crown: {msg}")));
                ok = false;
            }
            if let Some(tail) = &stem_tail {
                if tail != &qt.crown.root {
                    out.push(Violation(format!(
                        "tree: stem ends at {} but crown is rooted at {}",
                        tail, qt.crown.root
                    )));
                    ok = false;
                }
            }
            if !root {
                out.push(Violation("a double tree can only be the whole query".into()));
                ok = false;
            }
            ok.then(|| HeadTail {
                head: qt.stem.head.clone(),
                tail: qt.crown.root.clone(),
            })
        }
    }
}

/// Replaces every placeholder labelled `label` by `replacement`.
pub fn splice(g: &SchemaGraph, e: &QueryExpr, label: &str, replacement: &QueryExpr) -> Result<QueryExpr, ExprError> {
    let slot = find_placeholder(e, label).ok_or_else(|| ExprError::UnknownLabel(label.to_owned()))?;
    let found = head_tail(g, replacement)?;
    if found != slot {
        return Err(ExprError::SpliceMismatch {
            label: label.to_owned(),
            expected: format!("{} to {}", slot.head, slot.tail),
            found: format!("{} to {}", found.head, found.tail),
        });
    }
    let out = replace(e, label, replacement);
    head_tail(g, &out)?;
    Ok(out)
}

fn find_placeholder(e: &QueryExpr, label: &str) -> Option<HeadTail> {
    if let QueryExpr::Placeholder { label: l, from, to } = e {
        if l == label {
            return Some(HeadTail {
                head: from.clone(),
                tail: to.clone(),
            });
        }
    }
    e.children().into_iter().find_map(|c| find_placeholder(c, label))
}

fn replace(e: &QueryExpr, label: &str, with: &QueryExpr) -> QueryExpr {
    let r = |x: &QueryExpr| Box::new(replace(x, label, with));
    match e {
        QueryExpr::Placeholder { label: l, .. } if l == label => with.clone(),
        QueryExpr::Atom(_) | QueryExpr::Placeholder { .. } | QueryExpr::Tree(_) => e.clone(),
        QueryExpr::Concat(a, b) => QueryExpr::Concat(r(a), r(b)),
        QueryExpr::Intersect(a, b) => QueryExpr::Intersect(r(a), r(b)),
        QueryExpr::Union(a, b) => QueryExpr::Union(r(a), r(b)),
        QueryExpr::Difference(a, b) => QueryExpr::Difference(r(a), r(b)),
        QueryExpr::Select { inner, cmp, literal } => QueryExpr::Select {
            inner: r(inner),
            cmp: *cmp,
            literal: literal.clone(),
        },
        QueryExpr::Count(inner) => QueryExpr::Count(r(inner)),
    }
}

/// Deterministic near-natural-language rendering.
pub fn verbalize_expr(g: &SchemaGraph, e: &QueryExpr) -> Result<String, ExprError> {
    head_tail(g, e)?;
    Ok(verbalize(g, e, true))
}

/// `with_head = false` drops the leading head phrase; used for the right
/// side of a concatenation, where the connector already names the junction.
fn verbalize(g: &SchemaGraph, e: &QueryExpr, with_head: bool) -> String {
    match e {
        QueryExpr::Atom(p) => {
            if with_head {
                verbalize_path(g, p).expect("validated")
            } else {
                p.steps
                    .iter()
                    .map(|s| g.step_text(s).expect("validated"))
                    .collect::<String>()
                    .trim_start()
                    .to_owned()
            }
        }
        QueryExpr::Placeholder { label, .. } => format!("[{label}]"),
        QueryExpr::Concat(l, r) => join(verbalize(g, l, with_head), verbalize(g, r, false)),
        QueryExpr::Intersect(l, r) => infix(g, l, "AND ALSO", r, with_head),
        QueryExpr::Union(l, r) => infix(g, l, "OR", r, with_head),
        QueryExpr::Difference(l, r) => infix(g, l, "BUT NOT", r, with_head),
        QueryExpr::Select { inner, cmp, literal } => {
            format!("{} {} {}", verbalize(g, inner, with_head), cmp.words(), literal)
        }
        QueryExpr::Count(inner) => format!("number of {}", verbalize(g, inner, true)),
        QueryExpr::Tree(qt) => {
            let stem = verbalize_path(g, &qt.stem).expect("validated");
            let leaves: Vec<String> = tree_paths(&qt.crown)
                .iter()
                .filter(|p| !p.is_empty())
                .map(|p| verbalize(g, &QueryExpr::Atom(p.clone()), false))
                .collect();
            let stem = if with_head { stem } else { lower_first(&stem) };
            if leaves.is_empty() {
                stem
            } else {
                format!("{stem} with {}", leaves.join("; "))
            }
        }
    }
}

fn infix(g: &SchemaGraph, l: &QueryExpr, word: &str, r: &QueryExpr, with_head: bool) -> String {
    format!("{} {word} {}", verbalize(g, l, with_head), verbalize(g, r, true))
}

fn join(left: String, right: String) -> String {
    match (left.is_empty(), right.is_empty()) {
        (_, true) => left,
        (true, false) => right,
        (false, false) => format!("{left} {right}"),
    }
}

fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Column label for a tree leaf path: the verbalization minus its head.
pub fn branch_label(g: &SchemaGraph, p: &SchemaPath) -> String {
    if p.is_empty() {
        return crate::schema::name_phrase(p.head.as_str());
    }
    verbalize(g, &QueryExpr::Atom(p.clone()), false)
}
