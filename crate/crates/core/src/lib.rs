//! Conceptual query formulation over binary fact-oriented schemas.
//!
//! The pipeline: parse a schema, find paths between object types (PPQ),
//! browse around object types (spider) or along paths (navigator), combine
//! paths into query expressions, then evaluate them against a population or
//! lower them to SQL.

pub mod cli;
pub mod evaluator;
pub mod navigator;
pub mod pathfinder;
pub mod querybuilder;
pub mod schema;
pub mod service;
pub mod spider;
pub mod sqlgen;

/// Bundled example schema and population.
pub mod fixtures {
    pub const EL1: &str = include_str!("../fixtures/el1.cqs");
    pub const P1: &str = include_str!("../fixtures/p1.cqp");
}
