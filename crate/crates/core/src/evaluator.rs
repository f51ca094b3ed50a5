//! Evaluation of paths, expressions and double trees against a population.
//!
//! Everything uses set semantics: a path denotes the set of distinct
//! (head value, tail value) pairs it connects.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pathfinder::{PathError, SchemaPath};
use crate::querybuilder::{branch_label, head_tail, Comparison, ExprError, QueryExpr};
use crate::schema::{name_phrase, Direction, FactTypeId, ObjectTypeId, SchemaGraph};
use crate::spider::{tree_paths, QueryTree};

/// An instance value: integers for numeric types, text otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

pub type Pair = (Value, Value);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("line {line}: unknown fact type `{id}`")]
    UnknownFactType { id: String, line: usize },
    #[error("line {line}: expected 2 values, found {found}")]
    Arity { line: usize, found: usize },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: value `{value}` is not an integer, as {object_type} requires")]
    NotNumeric {
        line: usize,
        value: String,
        object_type: String,
    },
    #[error("unresolved placeholder [{0}]")]
    UnresolvedPlaceholder(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

/// The information base: fact instances per fact type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Population {
    facts: BTreeMap<FactTypeId, BTreeSet<Pair>>,
}

impl Population {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a fact; values must already conform to the role players.
    pub fn insert(&mut self, fact_type: FactTypeId, pair: Pair) -> bool {
        self.facts.entry(fact_type).or_default().insert(pair)
    }

    pub fn facts(&self, fact_type: &FactTypeId) -> Option<&BTreeSet<Pair>> {
        self.facts.get(fact_type)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FactTypeId, &BTreeSet<Pair>)> {
        self.facts.iter()
    }

    pub fn fact_count(&self) -> usize {
        self.facts.values().map(BTreeSet::len).sum()
    }

    pub fn fact_type_count(&self) -> usize {
        self.facts.values().filter(|s| !s.is_empty()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.fact_count() == 0
    }

    /// Every value playing `ot` somewhere in the population.
    pub fn active_domain(&self, g: &SchemaGraph, ot: &ObjectTypeId) -> BTreeSet<Value> {
        let mut out = BTreeSet::new();
        for (id, pairs) in &self.facts {
            let Some(ft) = g.fact_type(id) else { continue };
            for (a, b) in pairs {
                if &ft.roles[0].player == ot {
                    out.insert(a.clone());
                }
                if &ft.roles[1].player == ot {
                    out.insert(b.clone());
                }
            }
        }
        out
    }
}

/// Converts raw text to a value of the given object type.
pub fn typed_value(g: &SchemaGraph, ot: &ObjectTypeId, raw: &str) -> Option<Value> {
    match g.object_type(ot) {
        Some(o) if o.is_numeric() => raw.parse::<i64>().ok().map(Value::Int),
        _ => Some(Value::Text(raw.to_owned())),
    }
}

fn split_values(rest: &str, line: usize) -> Result<Vec<String>, EvalError> {
    let mut out = Vec::new();
    let mut chars = rest.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let mut value = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    None => {
                        return Err(EvalError::Malformed {
                            line,
                            message: "unterminated quoted value".into(),
                        })
                    }
                    Some('"') if chars.peek() == Some(&'"') => {
                        chars.next();
                        value.push('"');
                    }
                    Some('"') => break,
                    Some(c) => value.push(c),
                }
            }
            while chars.peek().is_some_and(|c| c.is_whitespace()) {
                chars.next();
            }
            match chars.peek() {
                None | Some(',') => {}
                Some(_) => {
                    return Err(EvalError::Malformed {
                        line,
                        message: "text after closing quote".into(),
                    })
                }
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c == ',' {
                    break;
                }
                value.push(c);
                chars.next();
            }
            value = value.trim().to_owned();
        }
        out.push(value);
        match chars.next() {
            Some(',') => continue,
            _ => break,
        }
    }
    Ok(out)
}

/// Parses the `.cqp` format: `<FactTypeId>: <valueA> , <valueB>` per line,
/// `#` comments, values quoted when they contain commas.
pub fn parse_population(source: &str, g: &SchemaGraph) -> Result<Population, EvalError> {
    let mut pop = Population::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, rest) = trimmed.split_once(':').ok_or_else(|| EvalError::Malformed {
            line,
            message: "expected `<FactTypeId>: <value> , <value>`".into(),
        })?;
        let id = FactTypeId::new(id.trim());
        let ft = g
            .fact_type(&id)
            .ok_or_else(|| EvalError::UnknownFactType { id: id.0.clone(), line })?;
        let values = split_values(rest, line)?;
        if values.len() != 2 {
            return Err(EvalError::Arity {
                line,
                found: values.len(),
            });
        }
        let mut typed = Vec::with_capacity(2);
        for (raw_value, role) in values.iter().zip(&ft.roles) {
            if raw_value.is_empty() {
                return Err(EvalError::Malformed {
                    line,
                    message: "empty value".into(),
                });
            }
            let v = typed_value(g, &role.player, raw_value).ok_or_else(|| EvalError::NotNumeric {
                line,
                value: raw_value.clone(),
                object_type: role.player.0.clone(),
            })?;
            typed.push(v);
        }
        let b = typed.pop().expect("two values");
        let a = typed.pop().expect("two values");
        pop.insert(id, (a, b));
    }
    Ok(pop)
}

fn needs_quotes(s: &str) -> bool {
    s.contains([',', '"']) || s != s.trim() || s.starts_with('#')
}

/// Writes a population back in `.cqp` form, ordered by fact type and pair.
pub fn serialize_population(pop: &Population) -> String {
    let fmt_value = |v: &Value| {
        let s = v.to_string();
        if needs_quotes(&s) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s
        }
    };
    let mut out = String::new();
    for (id, pairs) in &pop.facts {
        for (a, b) in pairs {
            out.push_str(&format!("{id}: {} , {}\n", fmt_value(a), fmt_value(b)));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryRelation {
    pub head_type: ObjectTypeId,
    pub tail_type: ObjectTypeId,
    pub pairs: BTreeSet<Pair>,
}

impl BinaryRelation {
    pub fn identity(ot: &ObjectTypeId, values: impl IntoIterator<Item = Value>) -> Self {
        BinaryRelation {
            head_type: ot.clone(),
            tail_type: ot.clone(),
            pairs: values.into_iter().map(|v| (v.clone(), v)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        BinaryRelation {
            head_type: self.tail_type.clone(),
            tail_type: self.head_type.clone(),
            pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }

    /// Relational composition `self ; other`.
    pub fn compose(&self, other: &BinaryRelation) -> Self {
        let mut index: HashMap<&Value, Vec<&Value>> = HashMap::new();
        for (b, c) in &other.pairs {
            index.entry(b).or_default().push(c);
        }
        let mut pairs = BTreeSet::new();
        for (a, b) in &self.pairs {
            for c in index.get(b).into_iter().flatten() {
                pairs.insert((a.clone(), (*c).clone()));
            }
        }
        BinaryRelation {
            head_type: self.head_type.clone(),
            tail_type: other.tail_type.clone(),
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn step_relation(g: &SchemaGraph, pop: &Population, fact_type: &FactTypeId, direction: Direction) -> BinaryRelation {
    let ft = g.fact_type(fact_type).expect("path validated");
    let forward = BinaryRelation {
        head_type: ft.roles[0].player.clone(),
        tail_type: ft.roles[1].player.clone(),
        pairs: pop.facts(fact_type).cloned().unwrap_or_default(),
    };
    match direction {
        Direction::Forward => forward,
        Direction::Reverse => forward.transpose(),
    }
}

/// Composition of the step relations; a 0-step path is the identity over
/// the active domain of its head.
pub fn eval_path(g: &SchemaGraph, pop: &Population, p: &SchemaPath) -> Result<BinaryRelation, EvalError> {
    p.tail(g)?;
    let mut steps = p.steps.iter();
    let Some(first) = steps.next() else {
        return Ok(BinaryRelation::identity(&p.head, pop.active_domain(g, &p.head)));
    };
    let start = step_relation(g, pop, &first.fact_type, first.direction);
    Ok(steps.fold(start, |acc, s| {
        acc.compose(&step_relation(g, pop, &s.fact_type, s.direction))
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<Value>>>,
}

impl ResultTable {
    /// Tab-separated rendering with a header line; absent cells are empty.
    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.as_ref().map(Value::to_string).unwrap_or_default())
                .collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EvalResult {
    Relation(BinaryRelation),
    Count { count: usize },
    Table(ResultTable),
}

pub fn eval_expr(g: &SchemaGraph, pop: &Population, e: &QueryExpr) -> Result<EvalResult, EvalError> {
    if let Some(label) = first_placeholder(e) {
        return Err(EvalError::UnresolvedPlaceholder(label));
    }
    head_tail(g, e)?;
    Ok(match e {
        QueryExpr::Count(inner) => EvalResult::Count {
            count: relation(g, pop, inner).len(),
        },
        QueryExpr::Tree(qt) => EvalResult::Table(eval_query_tree(g, pop, qt)?),
        other => EvalResult::Relation(relation(g, pop, other)),
    })
}

fn first_placeholder(e: &QueryExpr) -> Option<String> {
    if let QueryExpr::Placeholder { label, .. } = e {
        return Some(label.clone());
    }
    e.children().into_iter().find_map(first_placeholder)
}

/// Relation of a validated, placeholder-free, non-root-only expression.
fn relation(g: &SchemaGraph, pop: &Population, e: &QueryExpr) -> BinaryRelation {
    match e {
        QueryExpr::Atom(p) => eval_path(g, pop, p).expect("validated"),
        QueryExpr::Concat(l, r) => relation(g, pop, l).compose(&relation(g, pop, r)),
        QueryExpr::Intersect(l, r) | QueryExpr::Union(l, r) | QueryExpr::Difference(l, r) => {
            let (mut left, right) = (relation(g, pop, l), relation(g, pop, r));
            left.pairs = match e {
                QueryExpr::Intersect(..) => left.pairs.intersection(&right.pairs).cloned().collect(),
                QueryExpr::Union(..) => left.pairs.union(&right.pairs).cloned().collect(),
                _ => left.pairs.difference(&right.pairs).cloned().collect(),
            };
            left
        }
        QueryExpr::Select { inner, cmp, literal } => {
            let mut rel = relation(g, pop, inner);
            rel.pairs.retain(|(_, tail)| compare(tail, literal, *cmp));
            rel
        }
        QueryExpr::Placeholder { .. } | QueryExpr::Count(_) | QueryExpr::Tree(_) => {
            unreachable!("rejected by validation")
        }
    }
}

/// Numeric comparison when both sides are numbers, otherwise lexicographic.
pub fn compare(value: &Value, literal: &str, cmp: Comparison) -> bool {
    let literal = literal.trim();
    let ord = match (value, literal.parse::<f64>()) {
        (Value::Int(i), Ok(lit)) => (*i as f64).partial_cmp(&lit),
        (Value::Text(s), Ok(lit)) => match s.trim().parse::<f64>() {
            Ok(v) => v.partial_cmp(&lit),
            Err(_) => Some(s.as_str().cmp(literal)),
        },
        (v, Err(_)) => Some(v.to_string().as_str().cmp(literal)),
    };
    ord.is_some_and(|o: Ordering| cmp.holds(o))
}

/// Flat tabulation of a double tree: one row per root instance reached by
/// the stem and per combination of leaf values.
pub fn eval_query_tree(g: &SchemaGraph, pop: &Population, qt: &QueryTree) -> Result<ResultTable, EvalError> {
    let tail = qt.stem.tail(g)?;
    qt.crown.check(g).map_err(EvalError::InvalidTree)?;
    if tail != qt.crown.root {
        return Err(EvalError::InvalidTree(format!(
            "stem ends at {tail} but crown is rooted at {}",
            qt.crown.root
        )));
    }
    let roots: BTreeSet<Value> = eval_path(g, pop, &qt.stem)?.pairs.into_iter().map(|(_, t)| t).collect();
    let leaves: Vec<SchemaPath> = if qt.crown.is_leaf() {
        Vec::new()
    } else {
        tree_paths(&qt.crown)
    };

    let mut columns = vec![name_phrase(qt.crown.root.as_str())];
    let mut lookups: Vec<BTreeMap<Value, Vec<Value>>> = Vec::with_capacity(leaves.len());
    for leaf in &leaves {
        columns.push(branch_label(g, leaf));
        let mut map: BTreeMap<Value, Vec<Value>> = BTreeMap::new();
        for (a, b) in eval_path(g, pop, leaf)?.pairs {
            map.entry(a).or_default().push(b);
        }
        lookups.push(map);
    }

    let mut rows = Vec::new();
    for root in roots {
        let mut partial: Vec<Vec<Option<Value>>> = vec![vec![Some(root.clone())]];
        for map in &lookups {
            let cells: Vec<Option<Value>> = match map.get(&root) {
                Some(vals) => vals.iter().cloned().map(Some).collect(),
                None => vec![None],
            };
            partial = partial
                .into_iter()
                .flat_map(|row| {
                    cells.iter().map(move |c| {
                        let mut r = row.clone();
                        r.push(c.clone());
                        r
                    })
                })
                .collect();
        }
        rows.extend(partial);
    }
    Ok(ResultTable { columns, rows })
}
