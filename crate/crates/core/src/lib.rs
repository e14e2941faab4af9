//! Causal identification engine.
//!
//! The crate decides conditional-independence questions on causal DAGs
//! ([`dsep`]), derives do-free estimation formulas from back-door,
//! front-door and do-calculus rewrites ([`identify`]), and checks every
//! derived formula against exact discrete structural causal models
//! ([`scm`]). Formulas are values of the small expression language in
//! [`expr`].

pub mod cli;
pub mod dsep;
pub mod error;
pub mod expr;
pub mod graph;
pub mod identify;
pub mod scm;

pub use error::{Error, Result};
pub use graph::{CausalGraph, NodeId, NodeSet, Observability, Variable};
