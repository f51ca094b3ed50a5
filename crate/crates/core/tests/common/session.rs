//! The scripted election session driven through the wire protocol only.
//! Transports differ (in-process or real HTTP); the transcript must not.

use serde_json::{json, Value};

use cqf_core::fixtures;
use cqf_core::service::wire::*;

pub enum Body {
    Empty,
    Text(String),
    Json(Value),
}

impl Body {
    pub fn bytes(&self) -> Vec<u8> {
        match self {
            Body::Empty => Vec::new(),
            Body::Text(t) => t.clone().into_bytes(),
            Body::Json(v) => v.to_string().into_bytes(),
        }
    }
}

pub trait Transport {
    fn call(&mut self, method: &str, path: &str, body: Body) -> (u16, Value);
}

fn expect<T: serde::de::DeserializeOwned + serde::Serialize>(
    t: &mut dyn Transport,
    method: &str,
    path: &str,
    body: Body,
    status: u16,
) -> T {
    let (got, v) = t.call(method, path, body);
    assert_eq!(got, status, "{method} {path}: {v}");
    let typed: T = serde_json::from_value(v.clone()).unwrap_or_else(|e| panic!("{method} {path}: {e}: {v}"));
    // every 2xx body round-trips through the wire types
    assert_eq!(
        serde_json::to_value(&typed).unwrap(),
        v,
        "{method} {path} does not round-trip"
    );
    typed
}

/// Runs create, PPQ, MORE, select alternative, spider, prune, switch to
/// navigation, refine, back to construction, eval and SQL. Returns every
/// user-visible string in order.
pub fn run_session(t: &mut dyn Transport) -> Vec<String> {
    let mut log = Vec::new();

    let (health, _) = t.call("GET", "/healthz", Body::Empty);
    assert_eq!(health, 200);

    let created: SessionCreated = expect(t, "POST", "/sessions", Body::Text(fixtures::EL1.into()), 201);
    let s = format!("/sessions/{}", created.session);
    let types: ObjectTypeList = expect(t, "GET", &format!("{s}/object-types"), Body::Empty, 200);
    log.extend(types.object_types.iter().map(|o| o.id.0.clone()));

    // point-to-point query with a batch of one so MORE has work to do
    let ppq: PpqView = expect(
        t,
        "POST",
        &format!("{s}/ppq"),
        Body::Json(json!({"points": ["President", "Election", "NrOfVotes"], "batch": 1})),
        201,
    );
    assert_eq!(
        ppq.selected_text,
        "President winning election which resulted in nr of votes"
    );
    assert_eq!(ppq.segments[0].offered[0].text, "President winning election");
    log.push(ppq.selected_text.clone());
    let p = format!("{s}/ppq/{}", ppq.id);

    let more: MoreView = expect(t, "POST", &format!("{p}/more"), Body::Json(json!({"segment": 0})), 200);
    assert_eq!(more.added.len(), 1);
    assert!(more.exhausted);
    log.extend(more.added.iter().map(|w| format!("{}\t{}", w.weight, w.text)));
    let again: MoreView = expect(t, "POST", &format!("{p}/more"), Body::Json(json!({"segment": 0})), 200);
    assert!(again.added.is_empty());

    let alt: PpqView = expect(
        t,
        "POST",
        &format!("{p}/select"),
        Body::Json(json!({"segment": 0, "choice": 1})),
        200,
    );
    assert_eq!(alt.segments[0].selected, 1);
    log.push(alt.selected_text.clone());
    let (bad, _) = t.call(
        "POST",
        &format!("{p}/select"),
        Body::Json(json!({"segment": 0, "choice": 7})),
    );
    assert_eq!(bad, 409);
    let back: PpqView = expect(
        t,
        "POST",
        &format!("{p}/select"),
        Body::Json(json!({"segment": 0, "choice": 0})),
        200,
    );
    assert_eq!(back.selected_text, ppq.selected_text);

    // the construction window holds the PPQ result as a draft
    let d_ppq: DraftView = expect(
        t,
        "POST",
        &format!("{s}/drafts"),
        Body::Json(json!({"ppq": ppq.id})),
        201,
    );
    log.push(d_ppq.text.clone());

    // a placeholder filled from the PPQ
    let slot: DraftView = expect(
        t,
        "POST",
        &format!("{s}/drafts"),
        Body::Json(json!({"expr": "(count (placeholder PPQ President NrOfVotes))"})),
        201,
    );
    assert_eq!(slot.text, "number of [PPQ]");
    let filled: DraftView = expect(
        t,
        "POST",
        &format!("{s}/drafts/{}/splice", slot.id),
        Body::Json(json!({"label": "PPQ", "ppq": ppq.id})),
        200,
    );
    assert!(filled.placeholders.is_empty());
    log.push(filled.text.clone());

    // spider on politician, prune the president branch
    let tree: TreeView = expect(
        t,
        "POST",
        &format!("{s}/spider"),
        Body::Json(json!({"object_type": "Politician"})),
        201,
    );
    assert_eq!(tree.root.branches.len(), 3);
    log.extend(tree.paths.iter().cloned());
    let pruned: TreeView = expect(
        t,
        "POST",
        &format!("{s}/spider/{}/prune", tree.id),
        Body::Json(json!({"at": [], "branch": 1})),
        200,
    );
    assert_eq!(pruned.root.branches.len(), 2);
    log.extend(pruned.paths.iter().cloned());
    let (bad, _) = t.call(
        "POST",
        &format!("{s}/spider/{}/prune", tree.id),
        Body::Json(json!({"at": [], "branch": 5})),
    );
    assert_eq!(bad, 409);

    // switch to navigation from the first leaf and refine
    let nav: NavView = expect(
        t,
        "POST",
        &format!("{s}/nav"),
        Body::Json(json!({"origin": {"tree": tree.id, "leaf": 0}})),
        201,
    );
    log.push(nav.focus.text.clone());

    // leaves extend by further spiders
    let extended: TreeView = expect(
        t,
        "POST",
        &format!("{s}/spider/{}/extend", tree.id),
        Body::Json(json!({"at": [0]})),
        200,
    );
    log.extend(extended.paths.iter().cloned());
    let n = format!("{s}/nav/{}", nav.id);
    let moves: MoveList = expect(t, "GET", &format!("{n}/moves"), Body::Empty, 200);
    log.extend(moves.moves.iter().map(|m| m.text.clone()));
    let refined: NavView = expect(
        t,
        "POST",
        &format!("{n}/move"),
        Body::Json(json!({"kind": "refine", "step": {"fact_type": "FT2", "direction": "fwd"}})),
        200,
    );
    assert_eq!(
        refined.focus.text,
        "Politician is president of administration inaugurated in year"
    );
    log.push(refined.focus.text.clone());

    // back to construction with the navigation focus
    let d_nav: DraftView = expect(
        t,
        "POST",
        &format!("{s}/drafts"),
        Body::Json(json!({"nav": nav.id})),
        201,
    );
    log.push(d_nav.text.clone());

    // two path drafts as navigation origins, joined and alone
    let d1: DraftView = expect(
        t,
        "POST",
        &format!("{s}/drafts"),
        Body::Json(json!({"expr": "(atom Politician FT1 fwd)"})),
        201,
    );
    let d2: DraftView = expect(
        t,
        "POST",
        &format!("{s}/drafts"),
        Body::Json(json!({"expr": "(atom Administration FT2 fwd)"})),
        201,
    );
    let both: NavView = expect(
        t,
        "POST",
        &format!("{s}/nav"),
        Body::Json(json!({"origin": [d1.id, d2.id]})),
        201,
    );
    assert_eq!(
        both.focus.text,
        "Politician is president of administration inaugurated in year"
    );
    log.push(both.focus.text.clone());
    let single: NavView = expect(
        t,
        "POST",
        &format!("{s}/nav"),
        Body::Json(json!({"origin": [d2.id]})),
        201,
    );
    assert_eq!(single.focus.text, "Administration inaugurated in year");
    log.push(single.focus.text.clone());
    let zero: NavView = expect(
        t,
        "POST",
        &format!("{s}/nav"),
        Body::Json(json!({"origin": "Year"})),
        201,
    );
    let (illegal, _) = t.call(
        "POST",
        &format!("{s}/nav/{}/move", zero.id),
        Body::Json(json!({"kind": "generalize"})),
    );
    assert_eq!(illegal, 409);

    // evaluation needs a population
    let (no_pop, _) = t.call("POST", &format!("{s}/eval"), Body::Json(json!({"draft_id": d_ppq.id})));
    assert_eq!(no_pop, 409);
    let pop: PopulationView = expect(
        t,
        "POST",
        &format!("{s}/population"),
        Body::Text(fixtures::P1.into()),
        200,
    );
    assert_eq!((pop.facts, pop.fact_types), (6, 3));
    let ev: EvalView = expect(
        t,
        "POST",
        &format!("{s}/eval"),
        Body::Json(json!({"draft_id": d_ppq.id})),
        200,
    );
    log.push(serde_json::to_string(&ev).unwrap());
    let count: EvalView = expect(
        t,
        "POST",
        &format!("{s}/eval"),
        Body::Json(json!({"draft_id": filled.id})),
        200,
    );
    log.push(serde_json::to_string(&count).unwrap());
    let table: EvalView = expect(
        t,
        "POST",
        &format!("{s}/eval"),
        Body::Json(json!({"tree_id": tree.id})),
        200,
    );
    log.push(serde_json::to_string(&table).unwrap());

    let sql: SqlView = expect(t, "GET", &format!("{s}/sql/{}", d_ppq.id), Body::Empty, 200);
    assert_eq!(
        sql.sql,
        "SELECT DISTINCT t1.a, t2.b FROM ft3 t1 JOIN ft4 t2 ON t1.b = t2.a;"
    );
    log.push(sql.sql.clone());
    let (bad, _) = t.call("GET", &format!("{s}/sql/{}", slot.id), Body::Empty);
    assert_eq!(bad, 200, "spliced drafts lower to SQL");
    let (missing, _) = t.call("GET", &format!("{s}/sql/d999"), Body::Empty);
    assert_eq!(missing, 404);

    log
}

/// Calls [`cqf_core::service::Service::handle`] directly.
pub struct InProcess(pub cqf_core::service::Service);

impl Transport for InProcess {
    fn call(&mut self, method: &str, path: &str, body: Body) -> (u16, Value) {
        let r = self.0.handle(method, path, &body.bytes());
        (r.status, r.body)
    }
}

/// A real server on an ephemeral localhost port, driven over HTTP.
pub struct Http {
    rt: tokio::runtime::Runtime,
    client: reqwest::Client,
    pub base: String,
}

impl Http {
    pub fn start(service: cqf_core::service::Service) -> Self {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let service = std::sync::Arc::new(service);
        rt.spawn(cqf_core::service::server::serve(service, listener));
        Http {
            rt,
            client: reqwest::Client::new(),
            base,
        }
    }
}

impl Transport for Http {
    fn call(&mut self, method: &str, path: &str, body: Body) -> (u16, Value) {
        let url = format!("{}{path}", self.base);
        let method = reqwest::Method::from_bytes(method.as_bytes()).unwrap();
        let req = self.client.request(method, url).body(body.bytes());
        self.rt.block_on(async move {
            let res = req.send().await.expect("server reachable");
            let status = res.status().as_u16();
            let bytes = res.bytes().await.unwrap();
            (status, serde_json::from_slice(&bytes).expect("JSON body"))
        })
    }
}
