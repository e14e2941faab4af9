//! The three do-calculus rules as guarded rewrites.
//!
//! Each rule is stated for `p(y | do(x), z, w)` style terms with four
//! pairwise-disjoint sets:
//!
//! * rule 1 drops the observation `z` when `(Y _||_ Z | X,W)` holds once the
//!   edges into `X` are removed;
//! * rule 2 drops the intervention `do(z)` when `(Y _||_ Z | X,W)` holds once
//!   the edges into `X` and into `Z(W)` are removed, `Z(W)` being the members
//!   of `Z` that are not ancestors of `W` in the graph without edges into `X`;
//! * rule 3 replaces `do(z)` with the observation `z` when `(Y _||_ Z | X,W)`
//!   holds once the edges into `X` and out of `Z` are removed.

use std::fmt;

use serde::Serialize;

use crate::dsep::{d_separated, Statement};
use crate::error::{Error, Result};
use crate::graph::{check_disjoint, CausalGraph, NodeSet};

/// A d-separation fact on a mutilated graph, the license for one rewrite.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Guard {
    pub statement: Statement,
    pub cut_incoming: Vec<String>,
    pub cut_outgoing: Vec<String>,
    pub holds: bool,
}

impl Guard {
    fn check(
        g: &CausalGraph,
        statement_sets: (&NodeSet, &NodeSet, &NodeSet),
        cut_in: &NodeSet,
        cut_out: &NodeSet,
    ) -> Result<Guard> {
        let (y, z, cond) = statement_sets;
        let m = g.mutilate(cut_in, cut_out);
        Ok(Guard {
            statement: Statement::new(g, y, z, cond),
            cut_incoming: g.names(cut_in),
            cut_outgoing: g.names(cut_out),
            holds: d_separated(&m, y, z, cond)?,
        })
    }

    /// Re-evaluates the statement on the mutilated graph built from `g`.
    pub fn recheck(&self, g: &CausalGraph) -> Result<bool> {
        let m = g.mutilate_named(&self.cut_incoming, &self.cut_outgoing)?;
        let (x, y, z) = self.statement.resolve(&m)?;
        d_separated(&m, &x, &y, &z)
    }

    /// `G`, `G[in: X]`, `G[out: Z]` or `G[in: X; out: Z]`.
    pub fn graph_label(&self) -> String {
        let mut parts = Vec::new();
        if !self.cut_incoming.is_empty() {
            parts.push(format!("in: {}", self.cut_incoming.join(",")));
        }
        if !self.cut_outgoing.is_empty() {
            parts.push(format!("out: {}", self.cut_outgoing.join(",")));
        }
        if parts.is_empty() {
            "G".to_string()
        } else {
            format!("G[{}]", parts.join("; "))
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) in {}", self.statement, self.graph_label())
    }
}

fn validate(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet, w: &NodeSet) -> Result<()> {
    if y.is_empty() || z.is_empty() {
        return Err(Error::InvalidQuery("rule guards need nonempty Y and Z".into()));
    }
    check_disjoint(g, &[("X", x), ("Y", y), ("Z", z), ("W", w)])
}

fn union(a: &NodeSet, b: &NodeSet) -> NodeSet {
    a.union(b).copied().collect()
}

pub fn rule1_guard(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet, w: &NodeSet) -> Result<Guard> {
    validate(g, x, y, z, w)?;
    Guard::check(g, (y, z, &union(x, w)), x, &NodeSet::new())
}

pub fn rule2_guard(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet, w: &NodeSet) -> Result<Guard> {
    validate(g, x, y, z, w)?;
    let zw = g.z_hat(x, z, w)?;
    Guard::check(g, (y, z, &union(x, w)), &union(x, &zw), &NodeSet::new())
}

pub fn rule3_guard(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet, w: &NodeSet) -> Result<Guard> {
    validate(g, x, y, z, w)?;
    Guard::check(g, (y, z, &union(x, w)), x, z)
}

/// `p(y|do(x),z,w) = p(y|do(x),w)`.
pub fn rule1_applicable(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet, w: &NodeSet) -> Result<bool> {
    Ok(rule1_guard(g, x, y, z, w)?.holds)
}

/// `p(y|do(x),do(z),w) = p(y|do(x),w)`.
pub fn rule2_applicable(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet, w: &NodeSet) -> Result<bool> {
    Ok(rule2_guard(g, x, y, z, w)?.holds)
}

/// `p(y|do(x),do(z),w) = p(y|do(x),z,w)`.
pub fn rule3_applicable(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet, w: &NodeSet) -> Result<bool> {
    Ok(rule3_guard(g, x, y, z, w)?.holds)
}
