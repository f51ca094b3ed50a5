//! Spider queries: the star of fact types around one object type, pruned
//! and grown by the user, optionally hung off an incoming path to form a
//! double tree.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pathfinder::{PathError, SchemaPath};
use crate::schema::{adjacent_steps, ObjectTypeId, SchemaGraph, Step};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpiderError {
    #[error("unknown object type `{0}`")]
    UnknownObjectType(String),
    #[error("no branch at {0:?}")]
    BadIndexPath(Vec<usize>),
    #[error("node at {0:?} is not a leaf")]
    NotALeaf(Vec<usize>),
    #[error("type mismatch: stem ends at {tail} but the tree is rooted at {root}")]
    TypeMismatch { tail: String, root: String },
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub step: Step,
    pub child: SpiderTree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpiderTree {
    pub root: ObjectTypeId,
    pub branches: Vec<Branch>,
}

/// A stem path ending where the crown is rooted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTree {
    pub stem: SchemaPath,
    pub crown: SpiderTree,
}

impl SpiderTree {
    pub fn leaf(root: ObjectTypeId) -> Self {
        SpiderTree {
            root,
            branches: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn node_count(&self) -> usize {
        1 + self.branches.iter().map(|b| b.child.node_count()).sum::<usize>()
    }

    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.branches.iter().map(|b| b.child.leaf_count()).sum()
        }
    }

    pub fn node(&self, at: &[usize]) -> Option<&SpiderTree> {
        at.iter()
            .try_fold(self, |node, &i| node.branches.get(i).map(|b| &b.child))
    }

    fn node_mut(&mut self, at: &[usize]) -> Option<&mut SpiderTree> {
        at.iter()
            .try_fold(self, |node, &i| node.branches.get_mut(i).map(|b| &mut b.child))
    }

    /// Checks the tree's structural invariants against `g`; returns the
    /// first problem found.
    pub fn check(&self, g: &SchemaGraph) -> Result<(), String> {
        let mut chain = Vec::new();
        self.check_node(g, &mut chain)
    }

    fn check_node(&self, g: &SchemaGraph, chain: &mut Vec<ObjectTypeId>) -> Result<(), String> {
        if !g.contains(&self.root) {
            return Err(format!("unknown object type `{}`", self.root));
        }
        // a ring fact type puts the root under itself in the initial spider
        let ring_under_root = chain.len() == 1 && chain[0] == self.root;
        if chain.contains(&self.root) && !ring_under_root {
            return Err(format!("object type `{}` repeats along a branch", self.root));
        }
        chain.push(self.root.clone());
        let mut seen = HashSet::new();
        for b in &self.branches {
            let (from, to) = g
                .step_ends(&b.step)
                .ok_or_else(|| format!("unknown fact type `{}`", b.step.fact_type))?;
            if from != &self.root {
                return Err(format!("branch {} does not depart from `{}`", b.step, self.root));
            }
            if to != &b.child.root {
                return Err(format!("branch {} does not reach `{}`", b.step, b.child.root));
            }
            if !seen.insert(&b.step) {
                return Err(format!("branch {} occurs twice under `{}`", b.step, self.root));
            }
            b.child.check_node(g, chain)?;
        }
        chain.pop();
        Ok(())
    }
}

/// Depth-1 tree over every step departing `root`.
pub fn spider(g: &SchemaGraph, root: &ObjectTypeId) -> Result<SpiderTree, SpiderError> {
    let steps = adjacent_steps(g, root).map_err(|_| SpiderError::UnknownObjectType(root.0.clone()))?;
    let branches = steps
        .iter()
        .map(|step| {
            let (_, to) = g.step_ends(step).expect("adjacency is derived");
            Branch {
                step: step.clone(),
                child: SpiderTree::leaf(to.clone()),
            }
        })
        .collect();
    Ok(SpiderTree {
        root: root.clone(),
        branches,
    })
}

pub fn prune_branch(t: &SpiderTree, at: &[usize], branch: usize) -> Result<SpiderTree, SpiderError> {
    let mut out = t.clone();
    let node = out.node_mut(at).ok_or_else(|| SpiderError::BadIndexPath(at.to_vec()))?;
    if branch >= node.branches.len() {
        let mut bad = at.to_vec();
        bad.push(branch);
        return Err(SpiderError::BadIndexPath(bad));
    }
    node.branches.remove(branch);
    Ok(out)
}

/// Replaces the leaf at `at` by its own spider, minus any branch leading
/// back to an object type already on the chain from the root.
pub fn extend_leaf(g: &SchemaGraph, t: &SpiderTree, at: &[usize]) -> Result<SpiderTree, SpiderError> {
    let mut chain = vec![t.root.clone()];
    let mut node = t;
    for &i in at {
        node = &node
            .branches
            .get(i)
            .ok_or_else(|| SpiderError::BadIndexPath(at.to_vec()))?
            .child;
        chain.push(node.root.clone());
    }
    if !node.is_leaf() {
        return Err(SpiderError::NotALeaf(at.to_vec()));
    }
    let mut grown = spider(g, &node.root)?;
    grown.branches.retain(|b| !chain.contains(&b.child.root));

    let mut out = t.clone();
    *out.node_mut(at).expect("index path checked above") = grown;
    Ok(out)
}

pub fn attach_spider(g: &SchemaGraph, p: &SchemaPath, t: &SpiderTree) -> Result<QueryTree, SpiderError> {
    let tail = p.tail(g)?;
    if tail != t.root {
        return Err(SpiderError::TypeMismatch {
            tail: tail.0,
            root: t.root.0.clone(),
        });
    }
    Ok(QueryTree {
        stem: p.clone(),
        crown: t.clone(),
    })
}

/// One root-to-leaf path per leaf, depth first. A bare root yields its
/// 0-step path.
pub fn tree_paths(t: &SpiderTree) -> Vec<SchemaPath> {
    let mut out = Vec::new();
    let mut steps = Vec::new();
    collect_paths(t, &t.root, &mut steps, &mut out);
    out
}

fn collect_paths(node: &SpiderTree, head: &ObjectTypeId, steps: &mut Vec<Step>, out: &mut Vec<SchemaPath>) {
    if node.is_leaf() {
        out.push(SchemaPath {
            head: head.clone(),
            steps: steps.clone(),
        });
        return;
    }
    for b in &node.branches {
        steps.push(b.step.clone());
        collect_paths(&b.child, head, steps, out);
        steps.pop();
    }
}
