//! JSON bodies of the HTTP protocol. Field names here are the contract
//! documented in `docs/api.md`.

use serde::{Deserialize, Serialize};

use crate::evaluator::EvalResult;
use crate::navigator::NavMove;
use crate::schema::{ObjectTypeId, Step};

// ---- responses ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session: String,
    pub object_types: Vec<ObjectTypeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectTypeView {
    pub id: ObjectTypeId,
    /// "entity" or "value".
    pub kind: String,
    pub degree: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectTypeList {
    pub object_types: Vec<ObjectTypeView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathView {
    pub head: ObjectTypeId,
    pub steps: Vec<Step>,
    pub weight: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentView {
    pub from: ObjectTypeId,
    pub to: ObjectTypeId,
    pub offered: Vec<PathView>,
    pub selected: usize,
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpqView {
    pub id: String,
    pub points: Vec<ObjectTypeId>,
    pub batch: usize,
    pub segments: Vec<SegmentView>,
    pub selected_path: PathView,
    pub selected_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoreView {
    pub added: Vec<PathView>,
    pub exhausted: bool,
    pub ppq: PpqView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchView {
    pub step: Step,
    pub text: String,
    pub child: NodeView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeView {
    pub object_type: ObjectTypeId,
    pub branches: Vec<BranchView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeView {
    pub id: String,
    pub stem: PathView,
    pub root: NodeView,
    /// Stem plus each leaf path, verbalized, depth first.
    pub paths: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveView {
    #[serde(rename = "move")]
    pub mv: NavMove,
    /// Focus verbalization after the move.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavView {
    pub id: String,
    pub focus: PathView,
    pub moves: Vec<MoveView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveList {
    pub moves: Vec<MoveView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftView {
    pub id: String,
    pub expr: String,
    pub text: String,
    pub head: ObjectTypeId,
    pub tail: ObjectTypeId,
    pub placeholders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationView {
    pub facts: usize,
    pub fact_types: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalView {
    pub text: String,
    pub result: EvalResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlView {
    pub draft: String,
    pub sql: String,
    pub ddl: String,
}

// ---- requests ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpqRequest {
    pub points: Vec<String>,
    #[serde(default)]
    pub batch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoreRequest {
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectRequest {
    pub segment: usize,
    pub choice: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpiderRequest {
    #[serde(default)]
    pub object_type: Option<String>,
    /// Attach the spider to the tail of this path draft instead.
    #[serde(default)]
    pub draft: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneRequest {
    #[serde(default)]
    pub at: Vec<usize>,
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendRequest {
    pub at: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NavOrigin {
    ObjectType(String),
    Drafts(Vec<String>),
    Tree {
        tree: String,
        leaf: usize,
    },
    Ppq {
        ppq: String,
        #[serde(default)]
        segment: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavRequest {
    pub origin: NavOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DraftRequest {
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub nav: Option<String>,
    #[serde(default)]
    pub ppq: Option<String>,
    #[serde(default)]
    pub tree: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpliceRequest {
    pub label: String,
    #[serde(default)]
    pub replacement: Option<String>,
    #[serde(default)]
    pub ppq: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalRequest {
    #[serde(default)]
    pub draft_id: Option<String>,
    #[serde(default)]
    pub tree_id: Option<String>,
}
