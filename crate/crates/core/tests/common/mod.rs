//! Seeded generators and independent oracles shared by integration tests.
//!
//! The oracles work from the raw generator output (object kinds and fact
//! endpoints as plain indices), never from `SchemaGraph` adjacency, so they
//! check the library rather than restate it.

#![allow(dead_code)]

pub mod session;

use std::collections::BTreeSet;

use cqf_core::evaluator::{parse_population, Population, Value};
use cqf_core::pathfinder::SchemaPath;
use cqf_core::querybuilder::{combine, head_tail, Comparison, Connective, QueryExpr};
use cqf_core::schema::{parse_schema, Direction, SchemaGraph, Step};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Integer value type.
    Value,
    /// Entity identified by text.
    TextEntity,
    /// Entity identified by a number.
    NumberEntity,
}

#[derive(Debug, Clone)]
pub struct RawFact {
    pub id: String,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone)]
pub struct RawSchema {
    pub names: Vec<String>,
    pub kinds: Vec<Kind>,
    pub facts: Vec<RawFact>,
    pub source: String,
}

impl RawSchema {
    pub fn graph(&self) -> SchemaGraph {
        parse_schema(&self.source).expect("generated schemas parse")
    }

    pub fn index(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).expect("known name")
    }

    /// (fact id, forward?, destination) for each traversal out of `node`.
    pub fn exits(&self, node: usize) -> Vec<(String, bool, usize)> {
        let mut out = Vec::new();
        for f in &self.facts {
            if f.a == node {
                out.push((f.id.clone(), true, f.b));
            }
            if f.b == node {
                out.push((f.id.clone(), false, f.a));
            }
        }
        out
    }
}

const CONNECTORS: &[&str] = &["has", "is of", "links", "owns", "uses", "x"];

/// A schema with 1..=10 object types and 0..=14 fact types. Connectors come
/// from a tiny vocabulary so verbalization ties are common.
pub fn random_schema(rng: &mut ChaCha8Rng) -> RawSchema {
    let n = rng.gen_range(1..=10);
    let m = rng.gen_range(0..=14);
    random_schema_sized(rng, n, m)
}

pub fn random_schema_sized(rng: &mut ChaCha8Rng, n: usize, m: usize) -> RawSchema {
    let names: Vec<String> = (0..n).map(|i| format!("Ot{i}")).collect();
    let kinds: Vec<Kind> = (0..n)
        .map(|_| *[Kind::Value, Kind::TextEntity, Kind::NumberEntity].choose(rng).unwrap())
        .collect();
    let facts: Vec<RawFact> = (0..m)
        .map(|i| RawFact {
            id: format!("F{}", i + 1),
            a: rng.gen_range(0..n),
            b: rng.gen_range(0..n),
        })
        .collect();
    let mut source = String::new();
    for (name, kind) in names.iter().zip(&kinds) {
        let decl = match kind {
            Kind::Value => "value",
            Kind::TextEntity => "id:name",
            Kind::NumberEntity => "id:nr",
        };
        source.push_str(&format!("object {name} {decl}\n"));
    }
    for f in &facts {
        let c1 = CONNECTORS.choose(rng).unwrap();
        let c2 = CONNECTORS.choose(rng).unwrap();
        source.push_str(&format!(
            "fact {}: {} \"{c1}\" / \"{c2}\" {}\n",
            f.id, names[f.a], names[f.b]
        ));
    }
    RawSchema {
        names,
        kinds,
        facts,
        source,
    }
}

/// The bundled election schema in raw form.
pub fn el1_raw() -> RawSchema {
    let names: Vec<String> = [
        "Politician",
        "President",
        "Administration",
        "Election",
        "Year",
        "NrOfVotes",
        "Party",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let kinds = vec![
        Kind::TextEntity,
        Kind::TextEntity,
        Kind::TextEntity,
        Kind::NumberEntity,
        Kind::Value,
        Kind::Value,
        Kind::TextEntity,
    ];
    let f = |id: &str, a: usize, b: usize| RawFact { id: id.into(), a, b };
    RawSchema {
        names,
        kinds,
        facts: vec![
            f("FT1", 0, 2),
            f("FT2", 2, 4),
            f("FT3", 1, 3),
            f("FT4", 3, 5),
            f("FT5", 1, 0),
            f("FT6", 0, 6),
            f("FT7", 3, 4),
        ],
        source: cqf_core::fixtures::EL1.to_owned(),
    }
}

pub type RawPath = Vec<(String, bool)>;

pub fn to_steps(p: &RawPath) -> Vec<Step> {
    p.iter()
        .map(|(id, fwd)| Step::new(id, if *fwd { Direction::Forward } else { Direction::Reverse }))
        .collect()
}

pub fn from_steps(steps: &[Step]) -> RawPath {
    steps
        .iter()
        .map(|s| (s.fact_type.0.clone(), s.direction == Direction::Forward))
        .collect()
}

/// Every simple path (no repeated object type, no repeated fact type) from
/// `from` to `to`, by exhaustive depth-first search.
pub fn oracle_paths(raw: &RawSchema, from: usize, to: usize) -> BTreeSet<RawPath> {
    fn dfs(
        raw: &RawSchema,
        at: usize,
        to: usize,
        visited: &mut Vec<usize>,
        used: &mut Vec<String>,
        path: &mut RawPath,
        out: &mut BTreeSet<RawPath>,
    ) {
        if at == to {
            out.insert(path.clone());
            return;
        }
        for (id, fwd, next) in raw.exits(at) {
            if visited.contains(&next) || used.contains(&id) {
                continue;
            }
            visited.push(next);
            used.push(id.clone());
            path.push((id, fwd));
            dfs(raw, next, to, visited, used, path, out);
            path.pop();
            used.pop();
            visited.pop();
        }
    }
    let mut out = BTreeSet::new();
    dfs(
        raw,
        from,
        to,
        &mut vec![from],
        &mut Vec::new(),
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// All simple paths of at most `max_len` steps starting anywhere.
pub fn oracle_paths_up_to(raw: &RawSchema, max_len: usize) -> Vec<(usize, RawPath)> {
    let mut out = Vec::new();
    for head in 0..raw.names.len() {
        let mut stack = vec![(head, vec![head], RawPath::new())];
        while let Some((at, visited, path)) = stack.pop() {
            out.push((head, path.clone()));
            if path.len() == max_len {
                continue;
            }
            for (id, fwd, next) in raw.exits(at) {
                if visited.contains(&next) {
                    continue;
                }
                let mut v = visited.clone();
                v.push(next);
                let mut p = path.clone();
                p.push((id, fwd));
                stack.push((next, v, p));
            }
        }
    }
    out
}

/// A simple path grown by a random walk of up to `max_len` steps.
pub fn random_simple_path(raw: &RawSchema, rng: &mut ChaCha8Rng, max_len: usize) -> SchemaPath {
    let head = rng.gen_range(0..raw.names.len());
    let mut visited = vec![head];
    let mut at = head;
    let mut steps = RawPath::new();
    let len = rng.gen_range(0..=max_len);
    while steps.len() < len {
        let exits: Vec<_> = raw
            .exits(at)
            .into_iter()
            .filter(|(_, _, n)| !visited.contains(n))
            .collect();
        let Some((id, fwd, next)) = exits.choose(rng).cloned() else {
            break;
        };
        steps.push((id, fwd));
        visited.push(next);
        at = next;
    }
    SchemaPath::new(raw.names[head].clone(), to_steps(&steps))
}

#[derive(Debug, Clone)]
pub struct RawPopulation {
    /// (fact id, first role value, second role value), typed by the players.
    pub facts: Vec<(String, Value, Value)>,
    pub source: String,
}

fn random_value(kind: Kind, rng: &mut ChaCha8Rng) -> Value {
    match kind {
        Kind::Value | Kind::NumberEntity => Value::Int(rng.gen_range(0..6)),
        Kind::TextEntity => Value::Text(format!("v{}", rng.gen_range(0..6))),
    }
}

/// Up to `max_facts` facts over small value pools so joins connect.
pub fn random_population(raw: &RawSchema, rng: &mut ChaCha8Rng, max_facts: usize) -> RawPopulation {
    let mut facts = Vec::new();
    let mut source = String::new();
    if !raw.facts.is_empty() {
        let n = rng.gen_range(0..=max_facts);
        for _ in 0..n {
            let f = raw.facts.choose(rng).unwrap();
            let a = random_value(raw.kinds[f.a], rng);
            let b = random_value(raw.kinds[f.b], rng);
            source.push_str(&format!("{}: {a} , {b}\n", f.id));
            facts.push((f.id.clone(), a, b));
        }
    }
    RawPopulation { facts, source }
}

impl RawPopulation {
    pub fn parse(&self, g: &SchemaGraph) -> Population {
        parse_population(&self.source, g).expect("generated populations parse")
    }
}

/// The bundled election population in raw form over [`el1_raw`].
pub fn p1_raw() -> RawPopulation {
    let t = |s: &str| Value::Text(s.into());
    RawPopulation {
        facts: vec![
            ("FT1".into(), t("Lincoln"), t("adm20")),
            ("FT3".into(), t("Lincoln"), Value::Int(1860)),
            ("FT3".into(), t("Lincoln"), Value::Int(1864)),
            ("FT3".into(), t("Grant"), Value::Int(1868)),
            ("FT4".into(), Value::Int(1860), Value::Int(1866452)),
            ("FT4".into(), Value::Int(1864), Value::Int(2218388)),
        ],
        source: cqf_core::fixtures::P1.to_owned(),
    }
}

/// Evaluates a path by nested-loop joins over the raw fact list. A 0-step
/// path is the identity over every value played by the head type.
pub fn oracle_eval(raw: &RawSchema, pop: &RawPopulation, head: usize, path: &RawPath) -> BTreeSet<(Value, Value)> {
    let player = |id: &str| raw.facts.iter().find(|f| f.id == id).expect("known fact");
    if path.is_empty() {
        let mut out = BTreeSet::new();
        for (id, a, b) in &pop.facts {
            let f = player(id);
            if f.a == head {
                out.insert((a.clone(), a.clone()));
            }
            if f.b == head {
                out.insert((b.clone(), b.clone()));
            }
        }
        return out;
    }
    let oriented = |id: &str, fwd: bool| -> Vec<(Value, Value)> {
        pop.facts
            .iter()
            .filter(|(fid, _, _)| fid == id)
            .map(|(_, a, b)| {
                if fwd {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                }
            })
            .collect()
    };
    let mut rows = oriented(&path[0].0, path[0].1);
    for (id, fwd) in &path[1..] {
        let facts = oriented(id, *fwd);
        let mut next = Vec::new();
        for (start, end) in &rows {
            for (x, y) in &facts {
                if end == x {
                    next.push((start.clone(), y.clone()));
                }
            }
        }
        rows = next;
    }
    rows.into_iter().collect()
}

pub fn random_path_from(raw: &RawSchema, r: &mut ChaCha8Rng, head: usize, max_len: usize) -> SchemaPath {
    loop {
        let p = random_simple_path(raw, r, max_len);
        if raw.index(p.head.as_str()) == head {
            return p;
        }
        if r.gen_bool(0.3) {
            return SchemaPath::new(raw.names[head].clone(), Vec::new());
        }
    }
}

/// A well-typed expression of at most `depth` connectives, built only
/// through `combine`. `Count` appears only when `root` is set.
pub fn random_expr(
    raw: &RawSchema,
    g: &SchemaGraph,
    r: &mut ChaCha8Rng,
    depth: usize,
    root: bool,
) -> Result<QueryExpr, String> {
    let leaf = |r: &mut ChaCha8Rng| QueryExpr::Atom(random_simple_path(raw, r, 3));
    if depth == 0 {
        return Ok(leaf(r));
    }
    let build = |op: Connective, args: Vec<QueryExpr>| {
        let text: Vec<String> = args.iter().map(|a| a.to_string()).collect();
        combine(g, op, args).map_err(|e| format!("combine refused a well-typed construction {text:?}: {e}"))
    };
    let choice = r.gen_range(0..if root { 7 } else { 6 });
    match choice {
        0 => Ok(leaf(r)),
        1 => {
            let left = random_expr(raw, g, r, depth - 1, false)?;
            let tail = head_tail(g, &left).unwrap().tail;
            let right = QueryExpr::Atom(random_path_from(raw, r, raw.index(tail.as_str()), 3));
            build(Connective::Concat, vec![left, right])
        }
        2..=4 => {
            let left = random_expr(raw, g, r, depth - 1, false)?;
            let ht = head_tail(g, &left).unwrap();
            let alternatives: Vec<RawPath> =
                oracle_paths(raw, raw.index(ht.head.as_str()), raw.index(ht.tail.as_str()))
                    .into_iter()
                    .collect();
            let right = match alternatives.choose(r) {
                Some(p) if r.gen_bool(0.7) => QueryExpr::Atom(SchemaPath::new(ht.head.0.clone(), to_steps(p))),
                _ => left.clone(),
            };
            let op = [Connective::Intersect, Connective::Union, Connective::Difference][choice - 2].clone();
            build(op, vec![left, right])
        }
        5 => {
            let inner = random_expr(raw, g, r, depth - 1, false)?;
            let cmp = *Comparison::ALL.choose(r).unwrap();
            build(
                Connective::Select {
                    cmp,
                    literal: r.gen_range(0..6).to_string(),
                },
                vec![inner],
            )
        }
        _ => {
            let inner = random_expr(raw, g, r, depth - 1, false)?;
            build(Connective::Count, vec![inner])
        }
    }
}
