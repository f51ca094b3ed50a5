//! Point-to-point path search.
//!
//! [`PathEnumerator`] lists the simple paths between two object types lazily,
//! cheapest first. The order is (step count, verbalization, step sequence),
//! a strict total order. Paths are produced by deviation search: every
//! accepted path spawns, per prefix, the best path that leaves the prefix
//! through a step not yet taken by an accepted path with that prefix.
//! Only candidates are held in memory, never the full path set.
//!
//! Simple means no object type occurs twice. A fact type then cannot repeat
//! either, and self-referencing fact types never appear.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{verbalize_path, ObjectTypeId, SchemaGraph, Step};

pub const DEFAULT_BATCH: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("unknown object type `{0}`")]
    UnknownObjectType(String),
    #[error("unknown fact type `{0}`")]
    UnknownFactType(String),
    #[error("step {index} ({step}) departs from {found}, expected {expected}")]
    BrokenChain {
        index: usize,
        step: String,
        expected: String,
        found: String,
    },
    #[error("type mismatch: path ends at {tail} but next starts at {head}")]
    TypeMismatch { tail: String, head: String },
    #[error("a point-to-point query needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("no path between {from} and {to}")]
    NoPath { from: String, to: String },
    #[error("segment {segment} out of range ({len} segments)")]
    SegmentOutOfRange { segment: usize, len: usize },
    #[error("choice {choice} out of range ({len} offered)")]
    ChoiceOutOfRange { choice: usize, len: usize },
    #[error("batch size must be at least 1")]
    ZeroBatch,
}

/// A head-to-tail walk through the schema.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchemaPath {
    pub head: ObjectTypeId,
    pub steps: Vec<Step>,
}

impl SchemaPath {
    pub fn new(head: impl Into<String>, steps: Vec<Step>) -> Self {
        SchemaPath {
            head: ObjectTypeId(head.into()),
            steps,
        }
    }

    pub fn empty(head: impl Into<String>) -> Self {
        SchemaPath::new(head, Vec::new())
    }

    pub fn at(head: &ObjectTypeId) -> Self {
        SchemaPath {
            head: head.clone(),
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks the chaining invariant and returns the tail.
    pub fn tail(&self, g: &SchemaGraph) -> Result<ObjectTypeId, PathError> {
        Ok(self.nodes(g)?.pop().expect("nodes includes the head"))
    }

    /// Head followed by the to-player of every step.
    pub fn nodes(&self, g: &SchemaGraph) -> Result<Vec<ObjectTypeId>, PathError> {
        if !g.contains(&self.head) {
            return Err(PathError::UnknownObjectType(self.head.0.clone()));
        }
        let mut nodes = Vec::with_capacity(self.steps.len() + 1);
        nodes.push(self.head.clone());
        for (index, step) in self.steps.iter().enumerate() {
            let (from, to) = g
                .step_ends(step)
                .ok_or_else(|| PathError::UnknownFactType(step.fact_type.0.clone()))?;
            let current = nodes.last().expect("non-empty");
            if from != current {
                return Err(PathError::BrokenChain {
                    index,
                    step: step.to_string(),
                    expected: current.0.clone(),
                    found: from.0.clone(),
                });
            }
            nodes.push(to.clone());
        }
        Ok(nodes)
    }

    /// True when valid and no object type repeats.
    pub fn is_simple(&self, g: &SchemaGraph) -> bool {
        match self.nodes(g) {
            Ok(nodes) => {
                let set: HashSet<&ObjectTypeId> = nodes.iter().collect();
                set.len() == nodes.len()
            }
            Err(_) => false,
        }
    }

    /// The same walk traversed backwards.
    pub fn reversed(&self, g: &SchemaGraph) -> Result<SchemaPath, PathError> {
        let tail = self.tail(g)?;
        Ok(SchemaPath {
            head: tail,
            steps: self.steps.iter().rev().map(Step::reversed).collect(),
        })
    }
}

/// Relevance weight: the number of steps.
pub fn path_weight(g: &SchemaGraph, p: &SchemaPath) -> Result<usize, PathError> {
    p.tail(g)?;
    Ok(p.steps.len())
}

pub fn concat_paths(g: &SchemaGraph, p: &SchemaPath, q: &SchemaPath) -> Result<SchemaPath, PathError> {
    let tail = p.tail(g)?;
    q.tail(g)?;
    if tail != q.head {
        return Err(PathError::TypeMismatch {
            tail: tail.0,
            head: q.head.0.clone(),
        });
    }
    let mut steps = p.steps.clone();
    steps.extend(q.steps.iter().cloned());
    Ok(SchemaPath {
        head: p.head.clone(),
        steps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedPath {
    pub path: SchemaPath,
    pub weight: usize,
    pub verbalization: String,
}

/// Candidate ordering key: (weight, verbalization, steps).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    weight: usize,
    text: String,
    steps: Vec<Step>,
}

/// Lazy, resumable generator of simple paths in relevance order.
#[derive(Debug, Clone)]
pub struct PathEnumerator {
    schema: Arc<SchemaGraph>,
    from: ObjectTypeId,
    to: ObjectTypeId,
    emitted: Vec<WeightedPath>,
    candidates: BTreeSet<Candidate>,
    exhausted: bool,
}

pub fn open_enumeration(
    g: Arc<SchemaGraph>,
    from: &ObjectTypeId,
    to: &ObjectTypeId,
) -> Result<PathEnumerator, PathError> {
    PathEnumerator::open(g, from, to)
}

pub fn next_batch(e: &mut PathEnumerator, batch: usize) -> Result<Vec<WeightedPath>, PathError> {
    e.next_batch(batch)
}

impl PathEnumerator {
    pub fn open(schema: Arc<SchemaGraph>, from: &ObjectTypeId, to: &ObjectTypeId) -> Result<Self, PathError> {
        for id in [from, to] {
            if !schema.contains(id) {
                return Err(PathError::UnknownObjectType(id.0.clone()));
            }
        }
        let mut e = PathEnumerator {
            schema,
            from: from.clone(),
            to: to.clone(),
            emitted: Vec::new(),
            candidates: BTreeSet::new(),
            exhausted: false,
        };
        let first = e.best_spur(from, &HashSet::new(), &HashSet::new());
        match first {
            Some(steps) => {
                let c = e.candidate(Vec::new(), steps);
                e.candidates.insert(c);
            }
            None => e.exhausted = true,
        }
        Ok(e)
    }

    pub fn from(&self) -> &ObjectTypeId {
        &self.from
    }

    pub fn to(&self) -> &ObjectTypeId {
        &self.to
    }

    pub fn schema(&self) -> &Arc<SchemaGraph> {
        &self.schema
    }

    pub fn emitted(&self) -> &[WeightedPath] {
        &self.emitted
    }

    /// No further paths exist.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// The next at most `batch` paths. Returns fewer only once the
    /// enumerator is exhausted.
    pub fn next_batch(&mut self, batch: usize) -> Result<Vec<WeightedPath>, PathError> {
        if batch == 0 {
            return Err(PathError::ZeroBatch);
        }
        let mut out = Vec::new();
        while out.len() < batch {
            let Some(best) = self.candidates.pop_first() else {
                break;
            };
            let wp = WeightedPath {
                path: SchemaPath {
                    head: self.from.clone(),
                    steps: best.steps.clone(),
                },
                weight: best.weight,
                verbalization: best.text,
            };
            self.emitted.push(wp.clone());
            self.deviate(&best.steps);
            out.push(wp);
        }
        if self.candidates.is_empty() {
            self.exhausted = true;
        }
        Ok(out)
    }

    fn candidate(&self, mut root: Vec<Step>, spur: Vec<Step>) -> Candidate {
        root.extend(spur);
        let path = SchemaPath {
            head: self.from.clone(),
            steps: root,
        };
        let text = verbalize_path(&self.schema, &path).expect("search yields valid paths");
        Candidate {
            weight: path.steps.len(),
            text,
            steps: path.steps,
        }
    }

    /// Adds the deviations of a newly accepted path to the candidate set.
    fn deviate(&mut self, accepted: &[Step]) {
        let g = Arc::clone(&self.schema);
        let mut node = self.from.clone();
        let mut root_nodes: HashSet<ObjectTypeId> = HashSet::new();
        for i in 0..accepted.len() {
            let root = &accepted[..i];
            let banned_steps: HashSet<Step> = self
                .emitted
                .iter()
                .filter(|wp| wp.path.steps.len() > i && wp.path.steps[..i] == *root)
                .map(|wp| wp.path.steps[i].clone())
                .collect();
            if let Some(spur) = self.best_spur(&node, &root_nodes, &banned_steps) {
                let c = self.candidate(root.to_vec(), spur);
                self.candidates.insert(c);
            }
            root_nodes.insert(node.clone());
            let (_, next) = g.step_ends(&accepted[i]).expect("accepted paths are valid");
            node = next.clone();
        }
    }

    /// Best (fewest steps, then smallest text, then smallest steps) simple
    /// path from `start` to the target that avoids `banned_nodes` and does
    /// not leave `start` through any of `banned_steps`.
    fn best_spur(
        &self,
        start: &ObjectTypeId,
        banned_nodes: &HashSet<ObjectTypeId>,
        banned_steps: &HashSet<Step>,
    ) -> Option<Vec<Step>> {
        let g = &*self.schema;
        if start == &self.to {
            return Some(Vec::new());
        }
        if banned_nodes.contains(&self.to) {
            return None;
        }
        // Distances to the target. Every fact type is traversable both ways,
        // so walking outgoing steps from the target measures incoming ones.
        let mut dist: HashMap<&ObjectTypeId, usize> = HashMap::new();
        dist.insert(&self.to, 0);
        let mut queue = VecDeque::from([&self.to]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v];
            for step in g.adjacency().get(v).into_iter().flatten() {
                let (_, w) = g.step_ends(step).expect("adjacency is derived");
                // the spur may not pass back through its own start
                if w == start || banned_nodes.contains(w) || dist.contains_key(w) {
                    continue;
                }
                dist.insert(w, d + 1);
                queue.push_back(w);
            }
        }
        let start_dist = g
            .adjacency()
            .get(start)
            .into_iter()
            .flatten()
            .filter(|s| !banned_steps.contains(*s))
            .filter_map(|s| {
                let (_, w) = g.step_ends(s)?;
                if w == start {
                    return None;
                }
                dist.get(w).map(|d| d + 1)
            })
            .min()?;

        // Minimal suffix (text, steps) per node over the shortest-path DAG.
        let mut memo: HashMap<ObjectTypeId, (String, Vec<Step>)> = HashMap::new();
        let (_, steps) = self.best_suffix(start, start_dist, &dist, banned_steps, true, &mut memo)?;
        Some(steps)
    }

    fn best_suffix(
        &self,
        v: &ObjectTypeId,
        d: usize,
        dist: &HashMap<&ObjectTypeId, usize>,
        banned_steps: &HashSet<Step>,
        is_start: bool,
        memo: &mut HashMap<ObjectTypeId, (String, Vec<Step>)>,
    ) -> Option<(String, Vec<Step>)> {
        if v == &self.to {
            return Some((String::new(), Vec::new()));
        }
        if !is_start {
            if let Some(hit) = memo.get(v) {
                return Some(hit.clone());
            }
        }
        let g = &*self.schema;
        let mut best: Option<(String, Vec<Step>)> = None;
        for step in g.adjacency().get(v).into_iter().flatten() {
            if is_start && banned_steps.contains(step) {
                continue;
            }
            let (_, w) = g.step_ends(step).expect("adjacency is derived");
            if w == v || dist.get(w) != Some(&(d - 1)) {
                continue;
            }
            // distances strictly decrease and exclude the start and banned
            // nodes, so the walk stays simple
            let Some((rest_text, rest_steps)) = self.best_suffix(w, d - 1, dist, banned_steps, false, memo) else {
                continue;
            };
            let mut text = g.step_text(step).expect("adjacency is derived");
            text.push_str(&rest_text);
            let mut steps = Vec::with_capacity(rest_steps.len() + 1);
            steps.push(step.clone());
            steps.extend(rest_steps);
            let better = match &best {
                None => true,
                Some((bt, bs)) => (&text, &steps) < (bt, bs),
            };
            if better {
                best = Some((text, steps));
            }
        }
        if !is_start {
            if let Some(b) = &best {
                memo.insert(v.clone(), b.clone());
            }
        }
        best
    }
}

/// One leg of a point-to-point query.
#[derive(Debug, Clone)]
pub struct PpqSegment {
    pub enumerator: PathEnumerator,
    pub offered: Vec<WeightedPath>,
    pub selected: usize,
}

impl PpqSegment {
    pub fn selected(&self) -> &WeightedPath {
        &self.offered[self.selected]
    }
}

#[derive(Debug, Clone)]
pub struct PpqResult {
    pub points: Vec<ObjectTypeId>,
    pub segments: Vec<PpqSegment>,
    pub batch: usize,
}

pub fn run_ppq(g: Arc<SchemaGraph>, points: &[ObjectTypeId], batch: usize) -> Result<PpqResult, PathError> {
    if points.len() < 2 {
        return Err(PathError::TooFewPoints(points.len()));
    }
    if batch == 0 {
        return Err(PathError::ZeroBatch);
    }
    if let Some(p) = points.iter().find(|p| !g.contains(p)) {
        return Err(PathError::UnknownObjectType(p.0.clone()));
    }
    let mut segments = Vec::with_capacity(points.len() - 1);
    for pair in points.windows(2) {
        let mut enumerator = PathEnumerator::open(Arc::clone(&g), &pair[0], &pair[1])?;
        let offered = enumerator.next_batch(batch)?;
        if offered.is_empty() {
            return Err(PathError::NoPath {
                from: pair[0].0.clone(),
                to: pair[1].0.clone(),
            });
        }
        segments.push(PpqSegment {
            enumerator,
            offered,
            selected: 0,
        });
    }
    Ok(PpqResult {
        points: points.to_vec(),
        segments,
        batch,
    })
}

pub fn select_alternative(r: PpqResult, segment: usize, choice: usize) -> Result<PpqResult, PathError> {
    r.select_alternative(segment, choice)
}

impl PpqResult {
    pub fn select_alternative(mut self, segment: usize, choice: usize) -> Result<Self, PathError> {
        let len = self.segments.len();
        let seg = self
            .segments
            .get_mut(segment)
            .ok_or(PathError::SegmentOutOfRange { segment, len })?;
        if choice >= seg.offered.len() {
            return Err(PathError::ChoiceOutOfRange {
                choice,
                len: seg.offered.len(),
            });
        }
        seg.selected = choice;
        Ok(self)
    }

    /// One MORE press on a segment: appends the next batch to its offered
    /// list and returns the additions.
    pub fn more(&mut self, segment: usize) -> Result<Vec<WeightedPath>, PathError> {
        let len = self.segments.len();
        let batch = self.batch;
        let seg = self
            .segments
            .get_mut(segment)
            .ok_or(PathError::SegmentOutOfRange { segment, len })?;
        let added = seg.enumerator.next_batch(batch)?;
        seg.offered.extend(added.iter().cloned());
        Ok(added)
    }

    /// The selected segments joined head to tail.
    pub fn selected_path(&self, g: &SchemaGraph) -> Result<SchemaPath, PathError> {
        let mut iter = self.segments.iter();
        let first = iter.next().expect("at least one segment");
        iter.try_fold(first.selected().path.clone(), |acc, seg| {
            concat_paths(g, &acc, &seg.selected().path)
        })
    }
}
