//! Query by navigation: a focus path that the user refines one step at a
//! time or generalizes by dropping the last step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pathfinder::{PathError, SchemaPath};
use crate::schema::{adjacent_steps, ObjectTypeId, SchemaGraph, Step};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NavError {
    #[error("invalid origin: {0}")]
    InvalidOrigin(#[from] PathError),
    #[error("illegal move: {0}")]
    IllegalMove(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NavMove {
    Refine { step: Step },
    Generalize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    ObjectType(ObjectTypeId),
    Path(SchemaPath),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavNode {
    pub focus: SchemaPath,
    /// Applied moves, oldest first. Kept for undo only.
    pub history: Vec<NavMove>,
}

pub fn start_session(g: &SchemaGraph, origin: Origin) -> Result<NavNode, NavError> {
    let focus = match origin {
        Origin::ObjectType(ot) => {
            if !g.contains(&ot) {
                return Err(PathError::UnknownObjectType(ot.0).into());
            }
            SchemaPath::at(&ot)
        }
        Origin::Path(p) => {
            p.tail(g)?;
            p
        }
    };
    Ok(NavNode {
        focus,
        history: Vec::new(),
    })
}

/// Legal moves in order: refines first (adjacency order, never revisiting
/// an object type on the focus), then generalize when the focus has steps.
pub fn moves(g: &SchemaGraph, n: &NavNode) -> Vec<NavMove> {
    let Ok(nodes) = n.focus.nodes(g) else {
        return Vec::new();
    };
    let tail = nodes.last().expect("nodes includes the head");
    let mut out: Vec<NavMove> = adjacent_steps(g, tail)
        .unwrap_or_default()
        .iter()
        .filter(|step| {
            let (_, to) = g.step_ends(step).expect("adjacency is derived");
            !nodes.contains(to)
        })
        .map(|step| NavMove::Refine { step: step.clone() })
        .collect();
    if !n.focus.is_empty() {
        out.push(NavMove::Generalize);
    }
    out
}

pub fn apply_move(g: &SchemaGraph, n: &NavNode, m: &NavMove) -> Result<NavNode, NavError> {
    if !moves(g, n).contains(m) {
        let why = match m {
            NavMove::Generalize => "nothing to generalize on a 0-step focus".to_owned(),
            NavMove::Refine { step } => format!("step {step} is not available from the focus"),
        };
        return Err(NavError::IllegalMove(why));
    }
    let mut next = n.clone();
    match m {
        NavMove::Refine { step } => next.focus.steps.push(step.clone()),
        NavMove::Generalize => {
            next.focus.steps.pop();
        }
    }
    next.history.push(m.clone());
    Ok(next)
}

pub fn to_particle(n: &NavNode) -> SchemaPath {
    n.focus.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pathfinder::concat_paths;
    use crate::schema::{parse_schema, verbalize_path};

    fn el1() -> SchemaGraph {
        parse_schema(fixtures::EL1).unwrap()
    }

    fn ot(s: &str) -> ObjectTypeId {
        ObjectTypeId::new(s)
    }

    fn refine(step: Step) -> NavMove {
        NavMove::Refine { step }
    }

    #[test]
    fn starting_from_construction_paths() {
        let g = el1();
        let a = SchemaPath::new("Politician", vec![Step::fwd("FT1")]);
        let b = SchemaPath::new("Administration", vec![Step::fwd("FT2")]);
        let joined = concat_paths(&g, &a, &b).unwrap();
        let n = start_session(&g, Origin::Path(joined)).unwrap();
        assert_eq!(
            verbalize_path(&g, &n.focus).unwrap(),
            "Politician is president of administration inaugurated in year"
        );
        let n = start_session(&g, Origin::Path(b)).unwrap();
        assert_eq!(
            verbalize_path(&g, &n.focus).unwrap(),
            "Administration inaugurated in year"
        );
        let n = start_session(&g, Origin::ObjectType(ot("Year"))).unwrap();
        assert_eq!(verbalize_path(&g, &n.focus).unwrap(), "Year");
        assert!(n.history.is_empty());
    }

    #[test]
    fn invalid_origins() {
        let g = el1();
        assert!(start_session(&g, Origin::ObjectType(ot("Senate"))).is_err());
        let broken = SchemaPath::new("Year", vec![Step::fwd("FT1")]);
        assert!(start_session(&g, Origin::Path(broken)).is_err());
    }

    #[test]
    fn moves_at_politician() {
        let g = el1();
        let n = start_session(&g, Origin::ObjectType(ot("Politician"))).unwrap();
        assert_eq!(
            moves(&g, &n),
            vec![
                refine(Step::fwd("FT1")),
                refine(Step::rev("FT5")),
                refine(Step::fwd("FT6"))
            ]
        );
    }

    #[test]
    fn moves_exclude_revisits() {
        let g = el1();
        let n = start_session(&g, Origin::Path(SchemaPath::new("Politician", vec![Step::fwd("FT1")]))).unwrap();
        assert_eq!(moves(&g, &n), vec![refine(Step::fwd("FT2")), NavMove::Generalize]);
    }

    #[test]
    fn isolated_focus() {
        let g = parse_schema("object Alone value\n").unwrap();
        let n = start_session(&g, Origin::ObjectType(ot("Alone"))).unwrap();
        assert!(moves(&g, &n).is_empty());
    }

    #[test]
    fn refine_and_generalize() {
        let g = el1();
        let start = start_session(&g, Origin::Path(SchemaPath::new("Politician", vec![Step::fwd("FT1")]))).unwrap();
        let refined = apply_move(&g, &start, &refine(Step::fwd("FT2"))).unwrap();
        assert_eq!(refined.focus.steps, vec![Step::fwd("FT1"), Step::fwd("FT2")]);
        assert_eq!(to_particle(&refined).len(), to_particle(&start).len() + 1);
        let back = apply_move(&g, &refined, &NavMove::Generalize).unwrap();
        assert_eq!(back.focus, start.focus);
        assert_eq!(back.history.len(), 2);

        let zero = start_session(&g, Origin::ObjectType(ot("Election"))).unwrap();
        assert!(matches!(
            apply_move(&g, &zero, &NavMove::Generalize),
            Err(NavError::IllegalMove(_))
        ));
        assert!(apply_move(&g, &start, &refine(Step::rev("FT1"))).is_err());
        assert_eq!(to_particle(&zero), SchemaPath::empty("Election"));
    }
}
