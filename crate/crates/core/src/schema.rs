//! Conceptual schemas: object types, binary fact types and the derived
//! adjacency every search, spider and navigation walk uses.
//!
//! Schemas are read from the line-oriented `.cqs` format:
//!
//! ```text
//! # comment
//! object Politician id:name
//! object Year value
//! fact FT1: Politician "is president of" / "is headed by" Administration
//! ```
//!
//! A value type may carry an explicit format (`value:integer` or
//! `value:text`); a bare `value` is an integer domain. A player may carry a
//! role name in brackets (`Politician[president]`), used for SQL column
//! names.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pathfinder::SchemaPath;

/// Identifier of an object type. It is the declared name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectTypeId(pub String);

impl ObjectTypeId {
    pub fn new(name: impl Into<String>) -> Self {
        ObjectTypeId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectTypeId {
    fn from(s: &str) -> Self {
        ObjectTypeId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactTypeId(pub String);

impl FactTypeId {
    pub fn new(id: impl Into<String>) -> Self {
        FactTypeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FactTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FactTypeId {
    fn from(s: &str) -> Self {
        FactTypeId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueFormat {
    Integer,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObjectKind {
    Entity { reference_scheme: String },
    Value { format: ValueFormat },
}

/// Reference schemes whose denoting values are integers.
const NUMERIC_SCHEMES: &[&str] = &["year", "nr", "number", "integer", "int", "count", "amount"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectType {
    pub id: ObjectTypeId,
    pub kind: ObjectKind,
}

impl ObjectType {
    pub fn entity(name: &str, reference_scheme: &str) -> Self {
        ObjectType {
            id: ObjectTypeId::new(name),
            kind: ObjectKind::Entity {
                reference_scheme: reference_scheme.to_owned(),
            },
        }
    }

    pub fn value(name: &str) -> Self {
        ObjectType {
            id: ObjectTypeId::new(name),
            kind: ObjectKind::Value {
                format: ValueFormat::Integer,
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.id.0
    }

    pub fn reference_scheme(&self) -> Option<&str> {
        match &self.kind {
            ObjectKind::Entity { reference_scheme } => Some(reference_scheme),
            ObjectKind::Value { .. } => None,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self.kind, ObjectKind::Value { .. })
    }

    /// Whether instances of this type are denoted by integers.
    pub fn is_numeric(&self) -> bool {
        match &self.kind {
            ObjectKind::Value { format } => *format == ValueFormat::Integer,
            ObjectKind::Entity { reference_scheme } => {
                NUMERIC_SCHEMES.contains(&reference_scheme.to_ascii_lowercase().as_str())
            }
        }
    }

    /// Lowercased words of the name: `NrOfVotes` reads as `nr of votes`.
    pub fn phrase(&self) -> String {
        name_phrase(self.name())
    }
}

/// Splits a CamelCase or snake_case name into lowercase words.
pub fn name_phrase(name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let mut out = String::with_capacity(name.len() + 4);
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' || c.is_whitespace() {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
            continue;
        }
        if c.is_uppercase() && i > 0 && !out.is_empty() && !out.ends_with(' ') {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                out.push(' ');
            }
        }
        out.extend(c.to_lowercase());
    }
    out
}

pub(crate) fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub player: ObjectTypeId,
    /// Phrase read when traversing from this role toward the other one.
    pub connector: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role_name: Option<String>,
}

impl Role {
    pub fn new(player: &str, connector: &str) -> Self {
        Role {
            player: ObjectTypeId::new(player),
            connector: connector.to_owned(),
            role_name: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactType {
    pub id: FactTypeId,
    pub roles: [Role; 2],
}

impl FactType {
    pub fn new(id: &str, first: Role, second: Role) -> Self {
        FactType {
            id: FactTypeId::new(id),
            roles: [first, second],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "fwd")]
    Forward,
    #[serde(rename = "rev")]
    Reverse,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Reverse => "rev",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "fwd" | "forward" => Some(Direction::Forward),
            "rev" | "reverse" => Some(Direction::Reverse),
            _ => None,
        }
    }

    /// Indices of the (from, to) roles.
    fn role_indices(self) -> (usize, usize) {
        match self {
            Direction::Forward => (0, 1),
            Direction::Reverse => (1, 0),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One traversal of a fact type. Forward goes from `roles[0].player` to
/// `roles[1].player`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Step {
    pub fact_type: FactTypeId,
    pub direction: Direction,
}

impl Step {
    pub fn new(fact_type: &str, direction: Direction) -> Self {
        Step {
            fact_type: FactTypeId::new(fact_type),
            direction,
        }
    }

    pub fn fwd(fact_type: &str) -> Self {
        Step::new(fact_type, Direction::Forward)
    }

    pub fn rev(fact_type: &str) -> Self {
        Step::new(fact_type, Direction::Reverse)
    }

    pub fn reversed(&self) -> Self {
        Step {
            fact_type: self.fact_type.clone(),
            direction: self.direction.opposite(),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.fact_type, self.direction)
    }
}

/// A problem found by [`validate_schema`] or by expression validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("no object types declared")]
    NoObjectTypes,
    #[error("line {line}: duplicate object type name `{name}`")]
    DuplicateName { name: String, line: usize },
    #[error("line {line}: duplicate fact type id `{id}`")]
    DuplicateFactType { id: String, line: usize },
    #[error("line {line}: unknown object type `{name}`")]
    UnknownPlayer { name: String, line: usize },
    #[error("unknown object type `{0}`")]
    UnknownObjectType(String),
}

/// The navigable conceptual schema. Immutable once built; adjacency is
/// derived from the fact types at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaGraph {
    object_types: Vec<ObjectType>,
    fact_types: Vec<FactType>,
    adjacency: BTreeMap<ObjectTypeId, Vec<Step>>,
    ot_index: HashMap<ObjectTypeId, usize>,
    ft_index: HashMap<FactTypeId, usize>,
}

impl SchemaGraph {
    /// Builds the graph without validating it; see [`validate_schema`].
    /// Roles naming absent object types contribute no adjacency.
    pub fn new(object_types: Vec<ObjectType>, fact_types: Vec<FactType>) -> Self {
        let ot_index = object_types
            .iter()
            .enumerate()
            .map(|(i, o)| (o.id.clone(), i))
            .collect();
        let ft_index = fact_types.iter().enumerate().map(|(i, f)| (f.id.clone(), i)).collect();
        let adjacency = derive_adjacency(&object_types, &fact_types);
        SchemaGraph {
            object_types,
            fact_types,
            adjacency,
            ot_index,
            ft_index,
        }
    }

    pub fn object_types(&self) -> &[ObjectType] {
        &self.object_types
    }

    pub fn fact_types(&self) -> &[FactType] {
        &self.fact_types
    }

    pub fn adjacency(&self) -> &BTreeMap<ObjectTypeId, Vec<Step>> {
        &self.adjacency
    }

    pub fn object_type(&self, id: &ObjectTypeId) -> Option<&ObjectType> {
        self.ot_index.get(id).map(|&i| &self.object_types[i])
    }

    pub fn fact_type(&self, id: &FactTypeId) -> Option<&FactType> {
        self.ft_index.get(id).map(|&i| &self.fact_types[i])
    }

    pub fn contains(&self, id: &ObjectTypeId) -> bool {
        self.ot_index.contains_key(id)
    }

    /// Looks a name up exactly, falling back to a unique case-insensitive
    /// match.
    pub fn resolve(&self, name: &str) -> Result<ObjectTypeId, SchemaError> {
        let exact = ObjectTypeId::new(name);
        if self.contains(&exact) {
            return Ok(exact);
        }
        let mut matches = self.object_types.iter().filter(|o| o.name().eq_ignore_ascii_case(name));
        match (matches.next(), matches.next()) {
            (Some(o), None) => Ok(o.id.clone()),
            _ => Err(SchemaError::UnknownObjectType(name.to_owned())),
        }
    }

    /// The (from, to) players of a step, or `None` if its fact type is absent.
    pub fn step_ends(&self, step: &Step) -> Option<(&ObjectTypeId, &ObjectTypeId)> {
        let ft = self.fact_type(&step.fact_type)?;
        let (from, to) = step.direction.role_indices();
        Some((&ft.roles[from].player, &ft.roles[to].player))
    }

    pub fn step_connector(&self, step: &Step) -> Option<&str> {
        let ft = self.fact_type(&step.fact_type)?;
        let (from, _) = step.direction.role_indices();
        Some(&ft.roles[from].connector)
    }

    /// Text appended to a verbalization for one step: `" <connector> <target>"`.
    pub fn step_text(&self, step: &Step) -> Option<String> {
        let (_, to) = self.step_ends(step)?;
        let connector = self.step_connector(step)?;
        let target = self
            .object_type(to)
            .map(ObjectType::phrase)
            .unwrap_or_else(|| name_phrase(to.as_str()));
        Some(format!(" {} {}", connector.to_lowercase(), target))
    }

    /// Capitalized phrase of an object type as the head of a verbalization.
    pub fn head_text(&self, id: &ObjectTypeId) -> String {
        capitalize(&name_phrase(id.as_str()))
    }

    /// The same schema without one fact type.
    pub fn without_fact_type(&self, id: &FactTypeId) -> SchemaGraph {
        let facts = self.fact_types.iter().filter(|f| &f.id != id).cloned().collect();
        SchemaGraph::new(self.object_types.clone(), facts)
    }
}

fn derive_adjacency(object_types: &[ObjectType], fact_types: &[FactType]) -> BTreeMap<ObjectTypeId, Vec<Step>> {
    let mut adjacency: BTreeMap<ObjectTypeId, Vec<Step>> =
        object_types.iter().map(|o| (o.id.clone(), Vec::new())).collect();
    for ft in fact_types {
        for direction in [Direction::Forward, Direction::Reverse] {
            let (from, _) = direction.role_indices();
            if let Some(steps) = adjacency.get_mut(&ft.roles[from].player) {
                steps.push(Step {
                    fact_type: ft.id.clone(),
                    direction,
                });
            }
        }
    }
    for steps in adjacency.values_mut() {
        steps.sort();
    }
    adjacency
}

/// Steps departing `ot`, ordered by (fact type id, direction).
pub fn adjacent_steps<'g>(g: &'g SchemaGraph, ot: &ObjectTypeId) -> Result<&'g [Step], SchemaError> {
    g.adjacency
        .get(ot)
        .map(Vec::as_slice)
        .ok_or_else(|| SchemaError::UnknownObjectType(ot.0.clone()))
}

/// All object types by degree descending, then name ascending.
pub fn importance_order(g: &SchemaGraph) -> Vec<ObjectTypeId> {
    let mut ids: Vec<(usize, &ObjectTypeId)> = g
        .object_types
        .iter()
        .map(|o| (g.adjacency.get(&o.id).map_or(0, Vec::len), &o.id))
        .collect();
    ids.sort_by(|(da, a), (db, b)| {
        db.cmp(da)
            .then_with(|| a.0.to_lowercase().cmp(&b.0.to_lowercase()))
            .then_with(|| a.cmp(b))
    });
    ids.into_iter().map(|(_, id)| id.clone()).collect()
}

pub fn validate_schema(g: &SchemaGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    if g.object_types.is_empty() {
        out.push(Violation("no object types declared".into()));
    }
    let mut seen: HashMap<String, &str> = HashMap::new();
    for ot in &g.object_types {
        let key = ot.name().to_lowercase();
        if let Some(first) = seen.get(&key) {
            out.push(Violation(format!(
                "duplicate name: object type `{}` clashes with `{}`",
                ot.name(),
                first
            )));
        } else {
            seen.insert(key, ot.name());
        }
        if !is_identifier(ot.name()) {
            out.push(Violation(format!(
                "object type `{}`: name is not an identifier",
                ot.name()
            )));
        }
        if let ObjectKind::Entity { reference_scheme } = &ot.kind {
            if reference_scheme.trim().is_empty() {
                out.push(Violation(format!(
                    "object type `{}`: entity without reference scheme",
                    ot.name()
                )));
            }
        }
    }
    let mut fact_ids: HashMap<&FactTypeId, ()> = HashMap::new();
    for ft in &g.fact_types {
        if fact_ids.insert(&ft.id, ()).is_some() {
            out.push(Violation(format!("duplicate fact type id `{}`", ft.id)));
        }
        for (i, role) in ft.roles.iter().enumerate() {
            if !g.contains(&role.player) {
                out.push(Violation(format!(
                    "fact type `{}` role {}: unknown object type `{}`",
                    ft.id, i, role.player
                )));
            }
            if role.connector.trim().is_empty() {
                out.push(Violation(format!("fact type `{}` role {}: empty connector", ft.id, i)));
            }
        }
    }
    out
}

/// Renders a path: capitalized head, then connector and target per step.
pub fn verbalize_path(g: &SchemaGraph, p: &SchemaPath) -> Result<String, crate::pathfinder::PathError> {
    p.tail(g)?;
    let mut text = g.head_text(&p.head);
    for step in &p.steps {
        // tail() above guarantees every step resolves
        text.push_str(&g.step_text(step).unwrap_or_default());
    }
    Ok(text)
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}

// ---------------------------------------------------------------------------
// .cqs text format

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Colon,
    Slash,
    LBracket,
    RBracket,
}

fn lex_line(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    let err = |col: usize, msg: &str| ParseError {
        line: line_no,
        column: col,
        message: msg.to_owned(),
    };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            ':' => {
                toks.push((Tok::Colon, col));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, col));
                i += 1;
            }
            '[' => {
                toks.push((Tok::LBracket, col));
                i += 1;
            }
            ']' => {
                toks.push((Tok::RBracket, col));
                i += 1;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(col, "unterminated string")),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') if i + 1 < chars.len() => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                toks.push((Tok::Str(s), col));
            }
            c if c.is_alphanumeric() || c == '_' || c == '-' || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '-' | '.')) {
                    i += 1;
                }
                toks.push((Tok::Word(chars[start..i].iter().collect()), col));
            }
            _ => return Err(err(col, &format!("unexpected character `{c}`"))),
        }
    }
    Ok(toks)
}

struct LineCursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    line_len: usize,
}

impl LineCursor<'_> {
    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.line_len + 1, |(_, c)| *c)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn word(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        match self.toks.get(self.pos) {
            Some((Tok::Word(w), col)) => {
                self.pos += 1;
                Ok((w.clone(), *col))
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, ParseError> {
        match self.toks.get(self.pos) {
            Some((Tok::Str(s), _)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.error(format!("expected quoted {what}"))),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(Tok::Str(_)) | Some(Tok::Slash) => Err(self.error("only binary fact types are supported")),
            Some(_) => Err(self.error("unexpected trailing input")),
        }
    }
}

fn parse_identifier(cur: &mut LineCursor<'_>, what: &str) -> Result<String, ParseError> {
    let (w, col) = cur.word(what)?;
    if !is_identifier(&w) {
        return Err(ParseError {
            line: cur.line,
            column: col,
            message: format!("`{w}` is not a valid {what}"),
        });
    }
    Ok(w)
}

struct PendingFact {
    fact: FactType,
    line: usize,
}

pub fn parse_schema(source: &str) -> Result<SchemaGraph, SchemaError> {
    let mut object_types: Vec<ObjectType> = Vec::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut facts: Vec<PendingFact> = Vec::new();

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex_line(raw, line_no)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = LineCursor {
            toks: &toks,
            pos: 0,
            line: line_no,
            line_len: raw.chars().count(),
        };
        let (keyword, _) = cur.word("`object` or `fact`")?;
        match keyword.as_str() {
            "object" => {
                let name = parse_identifier(&mut cur, "object type name")?;
                let kind = parse_object_kind(&mut cur)?;
                cur.finish()?;
                let key = name.to_lowercase();
                if names.contains_key(&key) {
                    return Err(SchemaError::DuplicateName { name, line: line_no });
                }
                names.insert(key, object_types.len());
                object_types.push(ObjectType {
                    id: ObjectTypeId(name),
                    kind,
                });
            }
            "fact" => {
                let id = parse_identifier(&mut cur, "fact type id")?;
                cur.expect(Tok::Colon, "`:` after fact type id")?;
                let first_player = parse_identifier(&mut cur, "object type name")?;
                let first_role = parse_role_name(&mut cur)?;
                let first_conn = cur.string("connector")?;
                cur.expect(Tok::Slash, "`/` between connectors")?;
                let second_conn = cur.string("connector")?;
                let second_player = parse_identifier(&mut cur, "object type name")?;
                let second_role = parse_role_name(&mut cur)?;
                cur.finish()?;
                facts.push(PendingFact {
                    fact: FactType {
                        id: FactTypeId(id),
                        roles: [
                            Role {
                                player: ObjectTypeId(first_player),
                                connector: first_conn,
                                role_name: first_role,
                            },
                            Role {
                                player: ObjectTypeId(second_player),
                                connector: second_conn,
                                role_name: second_role,
                            },
                        ],
                    },
                    line: line_no,
                });
            }
            other => {
                return Err(ParseError {
                    line: line_no,
                    column: toks[0].1,
                    message: format!("unknown declaration `{other}`, expected `object` or `fact`"),
                }
                .into())
            }
        }
    }

    if object_types.is_empty() {
        return Err(SchemaError::NoObjectTypes);
    }

    let mut fact_ids: HashMap<String, ()> = HashMap::new();
    for pending in &facts {
        if fact_ids.insert(pending.fact.id.0.clone(), ()).is_some() {
            return Err(SchemaError::DuplicateFactType {
                id: pending.fact.id.0.clone(),
                line: pending.line,
            });
        }
        for role in &pending.fact.roles {
            if !object_types.iter().any(|o| o.id == role.player) {
                return Err(SchemaError::UnknownPlayer {
                    name: role.player.0.clone(),
                    line: pending.line,
                });
            }
        }
    }

    let graph = SchemaGraph::new(object_types, facts.into_iter().map(|p| p.fact).collect());
    if let Some(v) = validate_schema(&graph).into_iter().next() {
        return Err(ParseError {
            line: 0,
            column: 0,
            message: v.0,
        }
        .into());
    }
    Ok(graph)
}

fn parse_object_kind(cur: &mut LineCursor<'_>) -> Result<ObjectKind, ParseError> {
    let (word, _) = cur.word("`value` or `id:<reference-scheme>`")?;
    match word.as_str() {
        "value" => {
            if !cur.eat(Tok::Colon) {
                return Ok(ObjectKind::Value {
                    format: ValueFormat::Integer,
                });
            }
            let (fmt, col) = cur.word("value format")?;
            let format = match fmt.as_str() {
                "integer" | "int" => ValueFormat::Integer,
                "text" => ValueFormat::Text,
                _ => {
                    return Err(ParseError {
                        line: cur.line,
                        column: col,
                        message: format!("unknown value format `{fmt}`"),
                    })
                }
            };
            Ok(ObjectKind::Value { format })
        }
        "id" => {
            cur.expect(Tok::Colon, "`:` after `id`")?;
            let scheme = match cur.peek() {
                Some(Tok::Str(_)) => cur.string("reference scheme")?,
                _ => cur.word("reference scheme")?.0,
            };
            if scheme.trim().is_empty() {
                return Err(cur.error("empty reference scheme"));
            }
            Ok(ObjectKind::Entity {
                reference_scheme: scheme,
            })
        }
        _ => Err(cur.error("expected `value` or `id:<reference-scheme>`")),
    }
}

fn parse_role_name(cur: &mut LineCursor<'_>) -> Result<Option<String>, ParseError> {
    if !cur.eat(Tok::LBracket) {
        return Ok(None);
    }
    let name = parse_identifier(cur, "role name")?;
    cur.expect(Tok::RBracket, "`]` after role name")?;
    Ok(Some(name))
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn write_player(out: &mut String, role: &Role) {
    out.push_str(role.player.as_str());
    if let Some(name) = &role.role_name {
        out.push('[');
        out.push_str(name);
        out.push(']');
    }
}

/// Writes the schema back in `.cqs` form.
pub fn serialize_schema(g: &SchemaGraph) -> String {
    let mut out = String::new();
    for ot in &g.object_types {
        out.push_str("object ");
        out.push_str(ot.name());
        match &ot.kind {
            ObjectKind::Value {
                format: ValueFormat::Integer,
            } => out.push_str(" value"),
            ObjectKind::Value {
                format: ValueFormat::Text,
            } => out.push_str(" value:text"),
            ObjectKind::Entity { reference_scheme } => {
                out.push_str(" id:");
                if is_identifier(reference_scheme) {
                    out.push_str(reference_scheme);
                } else {
                    out.push_str(&quote(reference_scheme));
                }
            }
        }
        out.push('\n');
    }
    if !g.fact_types.is_empty() {
        out.push('\n');
    }
    for ft in &g.fact_types {
        out.push_str("fact ");
        out.push_str(ft.id.as_str());
        out.push_str(": ");
        write_player(&mut out, &ft.roles[0]);
        out.push(' ');
        out.push_str(&quote(&ft.roles[0].connector));
        out.push_str(" / ");
        out.push_str(&quote(&ft.roles[1].connector));
        out.push(' ');
        write_player(&mut out, &ft.roles[1]);
        out.push('\n');
    }
    out
}
