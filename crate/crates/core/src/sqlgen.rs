//! Lowering of conceptual queries to portable SQL.
//!
//! Each fact type maps to a two-column table named after its id. A path
//! becomes a chain of aliased joins; concatenations extend the chain, so a
//! maximal concatenation chain with `n` table units needs `n - 1` joins.
//! Sub-results that cannot join inline (set operations, the identity of a
//! lone 0-step atom) become derived tables exposing `head` and `tail`
//! columns.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::querybuilder::{head_tail, ExprError, QueryExpr};
use crate::schema::{Direction, FactTypeId, ObjectTypeId, SchemaGraph, Step};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("identifier collision: `{first}` and `{second}` both map to `{ident}`")]
    Collision {
        first: String,
        second: String,
        ident: String,
    },
    #[error("`{0}` is not a valid SQL identifier")]
    InvalidIdentifier(String),
    #[error("unresolved placeholder [{0}]")]
    UnresolvedPlaceholder(String),
    #[error("double trees are evaluated natively and have no SQL form")]
    TreeUnsupported,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableMap {
    pub table: String,
    /// Columns for roles[0] and roles[1].
    pub columns: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelationalMap {
    tables: BTreeMap<FactTypeId, TableMap>,
    order: Vec<FactTypeId>,
}

impl RelationalMap {
    pub fn get(&self, id: &FactTypeId) -> Option<&TableMap> {
        self.tables.get(id)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Tables in fact type declaration order.
    pub fn iter(&self) -> impl Iterator<Item = (&FactTypeId, &TableMap)> {
        self.order.iter().map(|id| (id, &self.tables[id]))
    }

    /// Every table and column name in the map.
    pub fn identifiers(&self) -> HashSet<&str> {
        self.tables
            .values()
            .flat_map(|t| [t.table.as_str(), t.columns[0].as_str(), t.columns[1].as_str()])
            .collect()
    }
}

fn sql_identifier(raw: &str) -> Result<String, SqlError> {
    let lower = raw.to_lowercase();
    let mut chars = lower.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if ok {
        Ok(lower)
    } else {
        Err(SqlError::InvalidIdentifier(raw.to_owned()))
    }
}

pub fn relational_map(g: &SchemaGraph) -> Result<RelationalMap, SqlError> {
    let mut map = RelationalMap::default();
    let mut owners: BTreeMap<String, String> = BTreeMap::new();
    for ft in g.fact_types() {
        let table = sql_identifier(ft.id.as_str())?;
        if let Some(first) = owners.insert(table.clone(), ft.id.0.clone()) {
            return Err(SqlError::Collision {
                first,
                second: ft.id.0.clone(),
                ident: table,
            });
        }
        let col = |i: usize, default: &str| -> Result<String, SqlError> {
            match &ft.roles[i].role_name {
                Some(name) => sql_identifier(name),
                None => Ok(default.to_owned()),
            }
        };
        let columns = [col(0, "a")?, col(1, "b")?];
        if columns[0] == columns[1] {
            return Err(SqlError::Collision {
                first: format!("{}.roles[0]", ft.id),
                second: format!("{}.roles[1]", ft.id),
                ident: columns[0].clone(),
            });
        }
        map.order.push(ft.id.clone());
        map.tables.insert(ft.id.clone(), TableMap { table, columns });
    }
    Ok(map)
}

fn column_type(g: &SchemaGraph, ot: &ObjectTypeId) -> &'static str {
    match g.object_type(ot) {
        Some(o) if o.is_numeric() => "INTEGER",
        _ => "TEXT",
    }
}

/// One `CREATE TABLE` per fact type, in declaration order.
pub fn emit_ddl(g: &SchemaGraph) -> Result<String, SqlError> {
    let map = relational_map(g)?;
    let mut out = String::new();
    for (id, t) in map.iter() {
        let ft = g.fact_type(id).expect("map built from schema");
        out.push_str(&format!(
            "CREATE TABLE {} ({} {}, {} {});\n",
            t.table,
            t.columns[0],
            column_type(g, &ft.roles[0].player),
            t.columns[1],
            column_type(g, &ft.roles[1].player),
        ));
    }
    Ok(out)
}

/// A SELECT under construction: joined table units plus filters.
#[derive(Debug, Clone)]
struct Core {
    /// (table reference, join condition); the first unit has no condition.
    from: Vec<(String, Option<String>)>,
    head: String,
    tail: String,
    wheres: Vec<String>,
    /// A lone identity unit, dropped when joined to anything else.
    identity: bool,
}

impl Core {
    fn join(mut self, mut other: Core) -> Core {
        if other.identity && !self.from.is_empty() {
            self.identity = false;
            return self;
        }
        if self.identity {
            other.identity = false;
            return other;
        }
        other.from[0].1 = Some(format!("{} = {}", self.tail, other.head));
        self.from.extend(other.from);
        self.wheres.extend(other.wheres);
        self.tail = other.tail;
        self
    }

    fn render(&self, nested: bool) -> String {
        let mut s = if nested {
            format!("SELECT DISTINCT {} AS head, {} AS tail FROM ", self.head, self.tail)
        } else {
            format!("SELECT DISTINCT {}, {} FROM ", self.head, self.tail)
        };
        for (i, (table, on)) in self.from.iter().enumerate() {
            if i > 0 {
                s.push_str(" JOIN ");
            }
            s.push_str(table);
            if let Some(cond) = on {
                s.push_str(" ON ");
                s.push_str(cond);
            }
        }
        if !self.wheres.is_empty() {
            s.push_str(" WHERE ");
            s.push_str(&self.wheres.join(" AND "));
        }
        s
    }
}

struct Lowering<'a> {
    g: &'a SchemaGraph,
    map: RelationalMap,
    next_alias: usize,
}

impl Lowering<'_> {
    fn alias(&mut self) -> String {
        self.next_alias += 1;
        format!("t{}", self.next_alias)
    }

    fn step_core(&mut self, step: &Step) -> Core {
        let t = self.map.get(&step.fact_type).expect("validated").clone();
        let alias = self.alias();
        let (from, to) = match step.direction {
            Direction::Forward => (&t.columns[0], &t.columns[1]),
            Direction::Reverse => (&t.columns[1], &t.columns[0]),
        };
        Core {
            from: vec![(format!("{} {alias}", t.table), None)],
            head: format!("{alias}.{from}"),
            tail: format!("{alias}.{to}"),
            wheres: Vec::new(),
            identity: false,
        }
    }

    fn identity_core(&mut self, ot: &ObjectTypeId) -> Core {
        let arms: Vec<String> = self
            .g
            .fact_types()
            .iter()
            .flat_map(|ft| {
                let t = self.map.get(&ft.id).expect("map covers schema");
                (0..2)
                    .filter(|&i| &ft.roles[i].player == ot)
                    .map(|i| format!("SELECT {} AS head FROM {}", t.columns[i], t.table))
                    .collect::<Vec<_>>()
            })
            .collect();
        let body = if arms.is_empty() {
            "SELECT NULL AS head WHERE 1 = 0".to_owned()
        } else {
            arms.join(" UNION ")
        };
        let alias = self.alias();
        Core {
            from: vec![(format!("({body}) {alias}"), None)],
            head: format!("{alias}.head"),
            tail: format!("{alias}.head"),
            wheres: Vec::new(),
            identity: true,
        }
    }

    fn derived(&mut self, body: String) -> Core {
        let alias = self.alias();
        Core {
            from: vec![(format!("({body}) {alias}"), None)],
            head: format!("{alias}.head"),
            tail: format!("{alias}.tail"),
            wheres: Vec::new(),
            identity: false,
        }
    }

    fn core(&mut self, e: &QueryExpr) -> Core {
        match e {
            QueryExpr::Atom(p) => {
                if p.steps.is_empty() {
                    return self.identity_core(&p.head);
                }
                let mut steps = p.steps.iter();
                let first = self.step_core(steps.next().expect("non-empty"));
                steps.fold(first, |acc, s| {
                    let next = self.step_core(s);
                    acc.join(next)
                })
            }
            QueryExpr::Concat(l, r) => {
                let left = self.core(l);
                let right = self.core(r);
                left.join(right)
            }
            QueryExpr::Select { inner, cmp, literal } => {
                let tail_type = head_tail(self.g, inner).expect("validated").tail;
                let mut c = self.core(inner);
                let numeric = column_type(self.g, &tail_type) == "INTEGER" && literal.trim().parse::<i64>().is_ok();
                let lit = if numeric {
                    literal.trim().to_owned()
                } else {
                    format!("'{}'", literal.replace('\'', "''"))
                };
                c.wheres.push(format!("{} {} {}", c.tail, cmp.symbol(), lit));
                // a filtered identity must survive joins
                c.identity = false;
                c
            }
            QueryExpr::Intersect(..) | QueryExpr::Union(..) | QueryExpr::Difference(..) => {
                let body = self.compound(e, true);
                self.derived(body)
            }
            QueryExpr::Placeholder { .. } | QueryExpr::Count(_) | QueryExpr::Tree(_) => {
                unreachable!("rejected before lowering")
            }
        }
    }

    fn compound(&mut self, e: &QueryExpr, nested: bool) -> String {
        let (l, r, op) = match e {
            QueryExpr::Intersect(l, r) => (l, r, "INTERSECT"),
            QueryExpr::Union(l, r) => (l, r, "UNION"),
            QueryExpr::Difference(l, r) => (l, r, "EXCEPT"),
            other => return self.core(other).render(nested),
        };
        let left = self.core(l).render(nested);
        let right = self.core(r).render(nested);
        format!("{left} {op} {right}")
    }
}

fn first_placeholder(e: &QueryExpr) -> Option<&str> {
    if let QueryExpr::Placeholder { label, .. } = e {
        return Some(label);
    }
    e.children().into_iter().find_map(first_placeholder)
}

/// SQL text for a validated, placeholder-free expression.
pub fn emit_sql(g: &SchemaGraph, e: &QueryExpr) -> Result<String, SqlError> {
    if let Some(label) = first_placeholder(e) {
        return Err(SqlError::UnresolvedPlaceholder(label.to_owned()));
    }
    if matches!(e, QueryExpr::Tree(_)) {
        return Err(SqlError::TreeUnsupported);
    }
    head_tail(g, e)?;
    let mut lower = Lowering {
        g,
        map: relational_map(g)?,
        next_alias: 0,
    };
    let body = match e {
        QueryExpr::Count(inner) => {
            let sub = lower.compound(inner, true);
            let alias = lower.alias();
            format!("SELECT COUNT(*) FROM ({sub}) {alias}")
        }
        other => lower.compound(other, false),
    };
    Ok(format!("{body};"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pathfinder::SchemaPath;
    use crate::schema::parse_schema;

    fn el1() -> SchemaGraph {
        parse_schema(fixtures::EL1).unwrap()
    }

    fn atom(head: &str, steps: &[Step]) -> QueryExpr {
        QueryExpr::Atom(SchemaPath::new(head, steps.to_vec()))
    }

    #[test]
    fn maps_el1() {
        let g = el1();
        let map = relational_map(&g).unwrap();
        assert_eq!(map.len(), 7);
        assert!(map.iter().all(|(_, t)| t.columns == ["a", "b"]));
        assert_eq!(map.get(&"FT3".into()).unwrap().table, "ft3");
    }

    #[test]
    fn empty_schema_maps_to_nothing() {
        let g = SchemaGraph::new(Vec::new(), Vec::new());
        assert!(relational_map(&g).unwrap().is_empty());
        assert_eq!(emit_ddl(&g).unwrap(), "");
    }

    #[test]
    fn case_collisions_are_reported() {
        let g = parse_schema(
            "object A value\nobject B value\n\
             fact FT1: A \"x\" / \"y\" B\nfact ft1: B \"p\" / \"q\" A\n",
        )
        .unwrap();
        assert!(matches!(relational_map(&g), Err(SqlError::Collision { .. })));
    }

    #[test]
    fn role_names_become_columns() {
        let g = parse_schema("object P id:name\nobject Q id:name\nfact F: P[owner] \"x\" / \"y\" Q[owned]\n").unwrap();
        assert_eq!(emit_ddl(&g).unwrap(), "CREATE TABLE f (owner TEXT, owned TEXT);\n");
        let same = parse_schema("object P id:name\nfact F: P[p] \"x\" / \"y\" P[p]\n").unwrap();
        assert!(matches!(relational_map(&same), Err(SqlError::Collision { .. })));
    }

    #[test]
    fn ddl_for_el1() {
        let ddl = emit_ddl(&el1()).unwrap();
        assert!(ddl.contains("CREATE TABLE ft3 (a TEXT, b INTEGER);"), "{ddl}");
        assert_eq!(ddl.lines().count(), 7);
        let single = parse_schema("object A value\nfact F: A \"x\" / \"y\" A\n").unwrap();
        assert_eq!(emit_ddl(&single).unwrap(), "CREATE TABLE f (a INTEGER, b INTEGER);\n");
    }

    #[test]
    fn single_atom() {
        let g = el1();
        assert_eq!(
            emit_sql(&g, &atom("President", &[Step::fwd("FT3")])).unwrap(),
            "SELECT DISTINCT t1.a, t1.b FROM ft3 t1;"
        );
    }

    #[test]
    fn concatenated_atoms_join_once() {
        let g = el1();
        let e = QueryExpr::Concat(
            Box::new(atom("President", &[Step::fwd("FT3")])),
            Box::new(atom("Election", &[Step::fwd("FT4")])),
        );
        assert_eq!(
            emit_sql(&g, &e).unwrap(),
            "SELECT DISTINCT t1.a, t2.b FROM ft3 t1 JOIN ft4 t2 ON t1.b = t2.a;"
        );
    }

    #[test]
    fn count_wraps_a_distinct_subselect() {
        let g = el1();
        let e = QueryExpr::Count(Box::new(atom("President", &[Step::fwd("FT3")])));
        assert_eq!(
            emit_sql(&g, &e).unwrap(),
            "SELECT COUNT(*) FROM (SELECT DISTINCT t1.a AS head, t1.b AS tail FROM ft3 t1) t2;"
        );
    }

    #[test]
    fn unsupported_inputs() {
        let g = el1();
        let ph = QueryExpr::placeholder("PPQ", "President", "NrOfVotes");
        assert_eq!(
            emit_sql(&g, &ph).unwrap_err(),
            SqlError::UnresolvedPlaceholder("PPQ".into())
        );
        let tree = crate::querybuilder::parse_query(&g, "(tree (atom Party) (node Party))").unwrap();
        assert_eq!(emit_sql(&g, &tree).unwrap_err(), SqlError::TreeUnsupported);
    }
}
