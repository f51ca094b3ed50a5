//! Session-keeping HTTP+JSON API over the core modules.
//!
//! [`Service::handle`] is router-agnostic: it takes a method, a path and a
//! raw body and returns a status plus a JSON body. [`server`] mounts it on
//! axum. Each session sits behind its own mutex, so requests on one
//! session are serialized while different sessions run in parallel.

pub mod server;
pub mod wire;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use uuid::Uuid;

use crate::evaluator::{eval_expr, parse_population, EvalResult, Population};
use crate::navigator::{apply_move, moves, start_session, NavMove, NavNode, Origin};
use crate::pathfinder::{concat_paths, path_weight, run_ppq, PathError, PpqResult, SchemaPath, WeightedPath};
use crate::querybuilder::{head_tail, parse_query, splice, to_text, validate_expr, verbalize_expr, QueryExpr};
use crate::schema::{adjacent_steps, importance_order, parse_schema, validate_schema, verbalize_path, SchemaGraph};
use crate::spider::{attach_spider, extend_leaf, prune_branch, spider, tree_paths, QueryTree, SpiderError, SpiderTree};
use crate::sqlgen::{emit_ddl, emit_sql};

use wire::*;

pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{name} must be a positive integer, got `{value}`")]
    Invalid { name: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub port: u16,
    pub session_ttl: Duration,
    pub default_batch: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            port: DEFAULT_PORT,
            session_ttl: DEFAULT_TTL,
            default_batch: crate::pathfinder::DEFAULT_BATCH,
        }
    }
}

impl Config {
    /// Reads `PORT`, `SESSION_TTL_MINUTES` and `DEFAULT_BATCH`; unset
    /// variables keep their defaults.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        fn num(name: &'static str, raw: Option<String>) -> Result<Option<u64>, ConfigError> {
            match raw {
                None => Ok(None),
                Some(v) => match v.trim().parse::<u64>() {
                    Ok(n) if n > 0 => Ok(Some(n)),
                    _ => Err(ConfigError::Invalid { name, value: v }),
                },
            }
        }
        let mut c = Config::default();
        if let Some(p) = num("PORT", get("PORT"))? {
            c.port = u16::try_from(p).map_err(|_| ConfigError::Invalid {
                name: "PORT",
                value: p.to_string(),
            })?;
        }
        if let Some(m) = num("SESSION_TTL_MINUTES", get("SESSION_TTL_MINUTES"))? {
            c.session_ttl = Duration::from_secs(m * 60);
        }
        if let Some(b) = num("DEFAULT_BATCH", get("DEFAULT_BATCH"))? {
            c.default_batch = b as usize;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub body: serde_json::Value,
}

impl Response {
    fn json(status: u16, body: impl Serialize) -> Self {
        Response {
            status,
            body: serde_json::to_value(body).expect("wire types serialize"),
        }
    }
}

#[derive(Debug)]
enum ApiError {
    NotFound(String),
    BadRequest(String, Vec<String>),
    Conflict(String),
}

impl ApiError {
    fn bad(msg: impl ToString) -> Self {
        ApiError::BadRequest(msg.to_string(), Vec::new())
    }

    fn into_response(self) -> Response {
        let (status, error, violations) = match self {
            ApiError::NotFound(m) => (404, m, Vec::new()),
            ApiError::BadRequest(m, v) => (400, m, v),
            ApiError::Conflict(m) => (409, m, Vec::new()),
        };
        Response::json(status, ErrorBody { error, violations })
    }
}

impl From<PathError> for ApiError {
    fn from(e: PathError) -> Self {
        match e {
            PathError::SegmentOutOfRange { .. } | PathError::ChoiceOutOfRange { .. } => {
                ApiError::Conflict(e.to_string())
            }
            other => ApiError::bad(other),
        }
    }
}

impl From<SpiderError> for ApiError {
    fn from(e: SpiderError) -> Self {
        match e {
            SpiderError::BadIndexPath(_) | SpiderError::NotALeaf(_) => ApiError::Conflict(e.to_string()),
            other => ApiError::bad(other),
        }
    }
}

type ApiResult = Result<Response, ApiError>;

struct Session {
    schema: Arc<SchemaGraph>,
    population: Option<Population>,
    ppq: HashMap<String, PpqResult>,
    nav: HashMap<String, NavNode>,
    trees: HashMap<String, QueryTree>,
    drafts: HashMap<String, QueryExpr>,
    next_id: u64,
    last_seen: Instant,
}

impl Session {
    fn fresh_id(&mut self, prefix: &str) -> String {
        self.next_id += 1;
        format!("{prefix}{}", self.next_id)
    }
}

fn missing(kind: &str, id: &str) -> ApiError {
    ApiError::NotFound(format!("unknown {kind} `{id}`"))
}

pub struct Service {
    config: Config,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad(format!("malformed body: {e}")))
}

/// Raw text, or a JSON object carrying the text under `field`.
fn text_body(body: &[u8], field: &str) -> Result<String, ApiError> {
    let text = std::str::from_utf8(body).map_err(|_| ApiError::bad("body is not UTF-8"))?;
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = parse_body(body)?;
        return v
            .get(field)
            .and_then(|s| s.as_str())
            .map(str::to_owned)
            .ok_or_else(|| ApiError::bad(format!("expected a `{field}` string")));
    }
    Ok(text.to_owned())
}

fn path_view(g: &SchemaGraph, p: &SchemaPath) -> PathView {
    PathView {
        head: p.head.clone(),
        steps: p.steps.clone(),
        weight: path_weight(g, p).unwrap_or(p.len()),
        text: verbalize_path(g, p).unwrap_or_default(),
    }
}

fn weighted_view(w: &WeightedPath) -> PathView {
    PathView {
        head: w.path.head.clone(),
        steps: w.path.steps.clone(),
        weight: w.weight,
        text: w.verbalization.clone(),
    }
}

fn ppq_view(g: &SchemaGraph, id: &str, r: &PpqResult) -> Result<PpqView, ApiError> {
    let selected = r.selected_path(g)?;
    let selected_path = path_view(g, &selected);
    Ok(PpqView {
        id: id.to_owned(),
        points: r.points.clone(),
        batch: r.batch,
        segments: r
            .segments
            .iter()
            .map(|s| SegmentView {
                from: s.enumerator.from().clone(),
                to: s.enumerator.to().clone(),
                offered: s.offered.iter().map(weighted_view).collect(),
                selected: s.selected,
                exhausted: s.enumerator.is_exhausted(),
            })
            .collect(),
        selected_text: selected_path.text.clone(),
        selected_path,
    })
}

fn node_view(g: &SchemaGraph, t: &SpiderTree) -> NodeView {
    NodeView {
        object_type: t.root.clone(),
        branches: t
            .branches
            .iter()
            .map(|b| BranchView {
                step: b.step.clone(),
                text: g.step_text(&b.step).unwrap_or_default().trim_start().to_owned(),
                child: node_view(g, &b.child),
            })
            .collect(),
    }
}

fn tree_view(g: &SchemaGraph, id: &str, qt: &QueryTree) -> TreeView {
    let paths = tree_paths(&qt.crown)
        .iter()
        .filter_map(|leaf| concat_paths(g, &qt.stem, leaf).ok())
        .map(|p| verbalize_path(g, &p).unwrap_or_default())
        .collect();
    TreeView {
        id: id.to_owned(),
        stem: path_view(g, &qt.stem),
        root: node_view(g, &qt.crown),
        paths,
    }
}

fn move_views(g: &SchemaGraph, n: &NavNode) -> Vec<MoveView> {
    moves(g, n)
        .into_iter()
        .map(|m| {
            let after = apply_move(g, n, &m).expect("offered moves apply");
            MoveView {
                text: verbalize_path(g, &after.focus).unwrap_or_default(),
                mv: m,
            }
        })
        .collect()
}

fn nav_view(g: &SchemaGraph, id: &str, n: &NavNode) -> NavView {
    NavView {
        id: id.to_owned(),
        focus: path_view(g, &n.focus),
        moves: move_views(g, n),
    }
}

fn placeholders(e: &QueryExpr, out: &mut Vec<String>) {
    if let QueryExpr::Placeholder { label, .. } = e {
        if !out.contains(label) {
            out.push(label.clone());
        }
    }
    for c in e.children() {
        placeholders(c, out);
    }
}

fn draft_view(g: &SchemaGraph, id: &str, e: &QueryExpr) -> Result<DraftView, ApiError> {
    let ht = head_tail(g, e).map_err(ApiError::bad)?;
    let mut labels = Vec::new();
    placeholders(e, &mut labels);
    Ok(DraftView {
        id: id.to_owned(),
        expr: to_text(e),
        text: verbalize_expr(g, e).map_err(ApiError::bad)?,
        head: ht.head,
        tail: ht.tail,
        placeholders: labels,
    })
}

impl Default for Service {
    fn default() -> Self {
        Service::new(Config::default())
    }
}

impl Service {
    pub fn new(config: Config) -> Self {
        Service {
            config,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn session_count(&self) -> usize {
        lock(&self.sessions).len()
    }

    /// Evicts sessions idle longer than the TTL as of `now`. Sessions busy
    /// with a request are never idle.
    pub fn gc_sessions(&self, now: Instant) -> usize {
        let mut sessions = lock(&self.sessions);
        let before = sessions.len();
        let ttl = self.config.session_ttl;
        sessions.retain(|_, s| match s.try_lock() {
            Ok(guard) => now.saturating_duration_since(guard.last_seen) <= ttl,
            Err(_) => true,
        });
        before - sessions.len()
    }

    pub fn handle(&self, method: &str, path: &str, body: &[u8]) -> Response {
        self.route(method, path, body).unwrap_or_else(ApiError::into_response)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        lock(&self.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| missing("session", id))
    }

    fn route(&self, method: &str, path: &str, body: &[u8]) -> ApiResult {
        let path = path.split('?').next().unwrap_or("");
        let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
        match (method, parts.as_slice()) {
            ("GET", ["healthz"]) => Ok(Response::json(200, Health { status: "ok".into() })),
            ("POST", ["sessions"]) => self.create_session(body),
            (_, ["sessions", sid, rest @ ..]) => {
                let cell = self.session(sid)?;
                let mut s = lock(&cell);
                s.last_seen = Instant::now();
                self.session_route(&mut s, method, rest, body)
            }
            _ => Err(ApiError::NotFound(format!("no route for {method} {path}"))),
        }
    }

    fn create_session(&self, body: &[u8]) -> ApiResult {
        let source = text_body(body, "schema")?;
        let g = parse_schema(&source).map_err(|e| ApiError::BadRequest(e.to_string(), vec![e.to_string()]))?;
        let violations = validate_schema(&g);
        if !violations.is_empty() {
            return Err(ApiError::BadRequest(
                "schema is invalid".into(),
                violations.into_iter().map(|v| v.0).collect(),
            ));
        }
        let id = Uuid::new_v4().to_string();
        let object_types = importance_order(&g);
        let session = Session {
            schema: Arc::new(g),
            population: None,
            ppq: HashMap::new(),
            nav: HashMap::new(),
            trees: HashMap::new(),
            drafts: HashMap::new(),
            next_id: 0,
            last_seen: Instant::now(),
        };
        lock(&self.sessions).insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(Response::json(
            201,
            SessionCreated {
                session: id,
                object_types,
            },
        ))
    }

    fn session_route(&self, s: &mut Session, method: &str, rest: &[&str], body: &[u8]) -> ApiResult {
        match (method, rest) {
            ("GET", ["object-types"]) => object_types(s),
            ("POST", ["ppq"]) => self.ppq_create(s, body),
            ("POST", ["ppq", p, "more"]) => ppq_more(s, p, body),
            ("POST", ["ppq", p, "select"]) => ppq_select(s, p, body),
            ("POST", ["spider"]) => spider_create(s, body),
            ("POST", ["spider", t, "prune"]) => spider_prune(s, t, body),
            ("POST", ["spider", t, "extend"]) => spider_extend(s, t, body),
            ("POST", ["nav"]) => nav_create(s, body),
            ("GET", ["nav", n, "moves"]) => nav_moves(s, n),
            ("POST", ["nav", n, "move"]) => nav_move(s, n, body),
            ("POST", ["drafts"]) => draft_create(s, body),
            ("GET", ["drafts", d]) => {
                let e = s.drafts.get(*d).ok_or_else(|| missing("draft", d))?;
                Ok(Response::json(200, draft_view(&s.schema, d, e)?))
            }
            ("POST", ["drafts", d, "splice"]) => draft_splice(s, d, body),
            ("POST", ["population"]) => population(s, body),
            ("POST", ["eval"]) => eval(s, body),
            ("GET", ["sql", d]) => sql(s, d),
            _ => Err(ApiError::NotFound(format!("no route for {method} /{}", rest.join("/")))),
        }
    }

    fn ppq_create(&self, s: &mut Session, body: &[u8]) -> ApiResult {
        let req: PpqRequest = parse_body(body)?;
        let g = Arc::clone(&s.schema);
        let points = req
            .points
            .iter()
            .map(|p| g.resolve(p).map_err(ApiError::bad))
            .collect::<Result<Vec<_>, _>>()?;
        let batch = req.batch.unwrap_or(self.config.default_batch);
        let r = run_ppq(Arc::clone(&g), &points, batch)?;
        let id = s.fresh_id("p");
        let view = ppq_view(&g, &id, &r)?;
        s.ppq.insert(id, r);
        Ok(Response::json(201, view))
    }
}

fn object_types(s: &Session) -> ApiResult {
    let g = &s.schema;
    let list = importance_order(g)
        .into_iter()
        .map(|id| {
            let ot = g.object_type(&id).expect("ordered ids exist");
            ObjectTypeView {
                kind: if ot.is_value() { "value" } else { "entity" }.into(),
                degree: adjacent_steps(g, &id).map(|a| a.len()).unwrap_or(0),
                text: g.head_text(&id),
                id,
            }
        })
        .collect();
    Ok(Response::json(200, ObjectTypeList { object_types: list }))
}

fn ppq_more(s: &mut Session, id: &str, body: &[u8]) -> ApiResult {
    let req: MoreRequest = parse_body(body)?;
    let g = Arc::clone(&s.schema);
    let r = s.ppq.get_mut(id).ok_or_else(|| missing("ppq", id))?;
    let added = r.more(req.segment)?;
    let exhausted = r.segments[req.segment].enumerator.is_exhausted();
    Ok(Response::json(
        200,
        MoreView {
            added: added.iter().map(weighted_view).collect(),
            exhausted,
            ppq: ppq_view(&g, id, r)?,
        },
    ))
}

fn ppq_select(s: &mut Session, id: &str, body: &[u8]) -> ApiResult {
    let req: SelectRequest = parse_body(body)?;
    let g = Arc::clone(&s.schema);
    let r = s.ppq.remove(id).ok_or_else(|| missing("ppq", id))?;
    let kept = r.clone();
    match r.select_alternative(req.segment, req.choice) {
        Ok(updated) => {
            let view = ppq_view(&g, id, &updated)?;
            s.ppq.insert(id.to_owned(), updated);
            Ok(Response::json(200, view))
        }
        Err(e) => {
            s.ppq.insert(id.to_owned(), kept);
            Err(e.into())
        }
    }
}

fn draft_path(s: &Session, id: &str) -> Result<SchemaPath, ApiError> {
    match s.drafts.get(id) {
        Some(QueryExpr::Atom(p)) => Ok(p.clone()),
        Some(_) => Err(ApiError::bad(format!("draft `{id}` is not a single path"))),
        None => Err(missing("draft", id)),
    }
}

fn spider_create(s: &mut Session, body: &[u8]) -> ApiResult {
    let req: SpiderRequest = parse_body(body)?;
    let g = Arc::clone(&s.schema);
    let qt = match (req.object_type, req.draft) {
        (Some(name), None) => {
            let root = g.resolve(&name).map_err(ApiError::bad)?;
            let crown = spider(&g, &root)?;
            QueryTree {
                stem: SchemaPath::at(&root),
                crown,
            }
        }
        (None, Some(d)) => {
            let stem = draft_path(s, &d)?;
            let tail = stem.tail(&g).map_err(ApiError::bad)?;
            let crown = spider(&g, &tail)?;
            attach_spider(&g, &stem, &crown)?
        }
        _ => return Err(ApiError::bad("give exactly one of `object_type` or `draft`")),
    };
    let id = s.fresh_id("t");
    let view = tree_view(&g, &id, &qt);
    s.trees.insert(id, qt);
    Ok(Response::json(201, view))
}

fn update_tree(
    s: &mut Session,
    id: &str,
    f: impl FnOnce(&SchemaGraph, &SpiderTree) -> Result<SpiderTree, SpiderError>,
) -> ApiResult {
    let g = Arc::clone(&s.schema);
    let qt = s.trees.get_mut(id).ok_or_else(|| missing("spider tree", id))?;
    qt.crown = f(&g, &qt.crown)?;
    Ok(Response::json(200, tree_view(&g, id, qt)))
}

fn spider_prune(s: &mut Session, id: &str, body: &[u8]) -> ApiResult {
    let req: PruneRequest = parse_body(body)?;
    update_tree(s, id, |_, t| prune_branch(t, &req.at, req.branch))
}

fn spider_extend(s: &mut Session, id: &str, body: &[u8]) -> ApiResult {
    let req: ExtendRequest = parse_body(body)?;
    update_tree(s, id, |g, t| extend_leaf(g, t, &req.at))
}

fn origin_path(s: &Session, origin: &NavOrigin) -> Result<Origin, ApiError> {
    let g = &s.schema;
    Ok(match origin {
        NavOrigin::ObjectType(name) => Origin::ObjectType(g.resolve(name).map_err(ApiError::bad)?),
        NavOrigin::Drafts(ids) => {
            let (first, rest) = ids.split_first().ok_or_else(|| ApiError::bad("no drafts given"))?;
            let mut p = draft_path(s, first)?;
            for id in rest {
                p = concat_paths(g, &p, &draft_path(s, id)?).map_err(ApiError::bad)?;
            }
            Origin::Path(p)
        }
        NavOrigin::Tree { tree, leaf } => {
            let qt = s.trees.get(tree).ok_or_else(|| missing("spider tree", tree))?;
            let leaves = tree_paths(&qt.crown);
            let leaf_path = leaves
                .get(*leaf)
                .ok_or_else(|| ApiError::Conflict(format!("leaf {leaf} out of range ({} leaves)", leaves.len())))?;
            Origin::Path(concat_paths(g, &qt.stem, leaf_path).map_err(ApiError::bad)?)
        }
        NavOrigin::Ppq { ppq, segment } => {
            let r = s.ppq.get(ppq).ok_or_else(|| missing("ppq", ppq))?;
            match segment {
                None => Origin::Path(r.selected_path(g)?),
                Some(k) => {
                    let seg = r.segments.get(*k).ok_or(PathError::SegmentOutOfRange {
                        segment: *k,
                        len: r.segments.len(),
                    })?;
                    Origin::Path(seg.selected().path.clone())
                }
            }
        }
    })
}

fn nav_create(s: &mut Session, body: &[u8]) -> ApiResult {
    let req: NavRequest = parse_body(body)?;
    let origin = origin_path(s, &req.origin)?;
    let g = Arc::clone(&s.schema);
    let node = start_session(&g, origin).map_err(ApiError::bad)?;
    let id = s.fresh_id("n");
    let view = nav_view(&g, &id, &node);
    s.nav.insert(id, node);
    Ok(Response::json(201, view))
}

fn nav_moves(s: &Session, id: &str) -> ApiResult {
    let n = s.nav.get(id).ok_or_else(|| missing("nav session", id))?;
    Ok(Response::json(
        200,
        MoveList {
            moves: move_views(&s.schema, n),
        },
    ))
}

fn nav_move(s: &mut Session, id: &str, body: &[u8]) -> ApiResult {
    let m: NavMove = parse_body(body)?;
    let g = Arc::clone(&s.schema);
    let n = s.nav.get_mut(id).ok_or_else(|| missing("nav session", id))?;
    *n = apply_move(&g, n, &m).map_err(|e| ApiError::Conflict(e.to_string()))?;
    Ok(Response::json(200, nav_view(&g, id, n)))
}

fn draft_create(s: &mut Session, body: &[u8]) -> ApiResult {
    let req: DraftRequest = parse_body(body)?;
    let g = Arc::clone(&s.schema);
    let e = match req {
        DraftRequest {
            expr: Some(text),
            nav: None,
            ppq: None,
            tree: None,
        } => {
            let e = parse_query(&g, &text).map_err(ApiError::bad)?;
            let violations = validate_expr(&g, &e);
            if !violations.is_empty() {
                return Err(ApiError::BadRequest(
                    "query is ill-typed".into(),
                    violations.into_iter().map(|v| v.0).collect(),
                ));
            }
            e
        }
        DraftRequest {
            expr: None,
            nav: Some(n),
            ppq: None,
            tree: None,
        } => {
            let node = s.nav.get(&n).ok_or_else(|| missing("nav session", &n))?;
            QueryExpr::Atom(node.focus.clone())
        }
        DraftRequest {
            expr: None,
            nav: None,
            ppq: Some(p),
            tree: None,
        } => {
            let r = s.ppq.get(&p).ok_or_else(|| missing("ppq", &p))?;
            QueryExpr::Atom(r.selected_path(&g)?)
        }
        DraftRequest {
            expr: None,
            nav: None,
            ppq: None,
            tree: Some(t),
        } => {
            let qt = s.trees.get(&t).ok_or_else(|| missing("spider tree", &t))?;
            QueryExpr::Tree(qt.clone())
        }
        _ => return Err(ApiError::bad("give exactly one of `expr`, `nav`, `ppq` or `tree`")),
    };
    let id = s.fresh_id("d");
    let view = draft_view(&g, &id, &e)?;
    s.drafts.insert(id, e);
    Ok(Response::json(201, view))
}

fn draft_splice(s: &mut Session, id: &str, body: &[u8]) -> ApiResult {
    let req: SpliceRequest = parse_body(body)?;
    let g = Arc::clone(&s.schema);
    let replacement = match (&req.replacement, &req.ppq) {
        (Some(text), None) => parse_query(&g, text).map_err(ApiError::bad)?,
        (None, Some(p)) => {
            let r = s.ppq.get(p).ok_or_else(|| missing("ppq", p))?;
            QueryExpr::Atom(r.selected_path(&g)?)
        }
        _ => return Err(ApiError::bad("give exactly one of `replacement` or `ppq`")),
    };
    let e = s.drafts.get(id).ok_or_else(|| missing("draft", id))?;
    let spliced = splice(&g, e, &req.label, &replacement).map_err(ApiError::bad)?;
    let view = draft_view(&g, id, &spliced)?;
    s.drafts.insert(id.to_owned(), spliced);
    Ok(Response::json(200, view))
}

fn population(s: &mut Session, body: &[u8]) -> ApiResult {
    let text = text_body(body, "population")?;
    let pop = parse_population(&text, &s.schema).map_err(ApiError::bad)?;
    let view = PopulationView {
        facts: pop.fact_count(),
        fact_types: pop.fact_type_count(),
    };
    s.population = Some(pop);
    Ok(Response::json(200, view))
}

fn eval(s: &mut Session, body: &[u8]) -> ApiResult {
    let req: EvalRequest = parse_body(body)?;
    let g = Arc::clone(&s.schema);
    let e = match (req.draft_id, req.tree_id) {
        (Some(d), None) => s.drafts.get(&d).ok_or_else(|| missing("draft", &d))?.clone(),
        (None, Some(t)) => QueryExpr::Tree(s.trees.get(&t).ok_or_else(|| missing("spider tree", &t))?.clone()),
        _ => return Err(ApiError::bad("give exactly one of `draft_id` or `tree_id`")),
    };
    let pop = s
        .population
        .as_ref()
        .ok_or_else(|| ApiError::Conflict("no population loaded".into()))?;
    let result: EvalResult = eval_expr(&g, pop, &e).map_err(ApiError::bad)?;
    let text = verbalize_expr(&g, &e).map_err(ApiError::bad)?;
    Ok(Response::json(200, EvalView { text, result }))
}

fn sql(s: &Session, id: &str) -> ApiResult {
    let e = s.drafts.get(id).ok_or_else(|| missing("draft", id))?;
    let sql = emit_sql(&s.schema, e).map_err(ApiError::bad)?;
    let ddl = emit_ddl(&s.schema).map_err(ApiError::bad)?;
    Ok(Response::json(
        200,
        SqlView {
            draft: id.to_owned(),
            sql,
            ddl,
        },
    ))
}
