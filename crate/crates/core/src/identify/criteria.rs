//! Back-door and front-door adjustment.

use crate::dsep::d_separated;
use crate::error::{Error, Result};
use crate::expr::{primed, Expr};
use crate::graph::{check_disjoint, CausalGraph, NodeSet};

/// Largest candidate pool scanned by the set enumerators.
pub const ADJUSTMENT_CANDIDATE_LIMIT: usize = 16;

fn check_sets(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidQuery("treatment and outcome sets must be nonempty".into()));
    }
    if let Some(&v) = z.iter().find(|&&v| g.is_latent(v)) {
        return Err(Error::InvalidQuery(format!("adjustment variable {} is latent", g.name(v))));
    }
    check_disjoint(g, &[("X", x), ("Y", y), ("Z", z)])
}

/// `Z` contains no descendant of `X` and blocks every path from `X` to `Y`
/// that starts with an edge into `X`.
pub fn backdoor_admissible(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<bool> {
    check_sets(g, x, y, z)?;
    if !g.descendants(x).is_disjoint(z) {
        return Ok(false);
    }
    d_separated(&g.mutilate(&NodeSet::new(), x), x, y, z)
}

/// `Z` intercepts every directed path from `X` to `Y`, nothing but colliders
/// separates `X` from `Z`, and `X` blocks the back-door paths from `Z` to `Y`.
pub fn frontdoor_admissible(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<bool> {
    check_sets(g, x, y, z)?;
    if z.is_empty() {
        return Ok(false);
    }
    if !g.mutilate(&NodeSet::new(), z).descendants(x).is_disjoint(y) {
        return Ok(false);
    }
    if !d_separated(&g.mutilate(&NodeSet::new(), x), x, z, &NodeSet::new())? {
        return Ok(false);
    }
    d_separated(&g.mutilate(&NodeSet::new(), z), z, y, x)
}

fn minimal_sets(
    g: &CausalGraph,
    candidates: Vec<usize>,
    admissible: impl Fn(&NodeSet) -> Result<bool>,
    include_empty: bool,
    operation: &'static str,
) -> Result<Vec<NodeSet>> {
    if candidates.len() > ADJUSTMENT_CANDIDATE_LIMIT {
        return Err(Error::ScaleGuard { operation, nodes: candidates.len(), limit: ADJUSTMENT_CANDIDATE_LIMIT });
    }
    let mut subsets: Vec<NodeSet> = (0u32..1 << candidates.len())
        .map(|mask| candidates.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect())
        .filter(|s: &NodeSet| include_empty || !s.is_empty())
        .collect();
    subsets.sort_by_cached_key(|s| (s.len(), g.names(s)));
    let mut found: Vec<NodeSet> = Vec::new();
    for s in subsets {
        if found.iter().any(|f| f.is_subset(&s)) {
            continue;
        }
        if admissible(&s)? {
            found.push(s);
        }
    }
    Ok(found)
}

/// Inclusion-minimal observed back-door sets, smallest first, ties broken by
/// the sorted variable names.
pub fn find_backdoor_sets(g: &CausalGraph, x: &NodeSet, y: &NodeSet) -> Result<Vec<NodeSet>> {
    check_sets(g, x, y, &NodeSet::new())?;
    let desc = g.descendants(x);
    let candidates =
        g.observed().into_iter().filter(|v| !x.contains(v) && !y.contains(v) && !desc.contains(v)).collect();
    minimal_sets(g, candidates, |z| backdoor_admissible(g, x, y, z), true, "back-door set search")
}

/// Inclusion-minimal observed front-door sets, ordered like
/// [`find_backdoor_sets`].
pub fn find_frontdoor_sets(g: &CausalGraph, x: &NodeSet, y: &NodeSet) -> Result<Vec<NodeSet>> {
    check_sets(g, x, y, &NodeSet::new())?;
    let desc = g.descendants(x);
    let candidates =
        g.observed().into_iter().filter(|v| !x.contains(v) && !y.contains(v) && desc.contains(v)).collect();
    minimal_sets(g, candidates, |z| frontdoor_admissible(g, x, y, z), false, "front-door set search")
}

fn concat(a: &[String], b: &[String]) -> Vec<String> {
    a.iter().chain(b).cloned().collect()
}

fn strings<S: AsRef<str>>(v: &[S]) -> Vec<String> {
    v.iter().map(|s| s.as_ref().to_string()).collect()
}

/// `sum_z p(y|x,z) p(z)`, or `p(y|x)` when `z` is empty.
pub fn backdoor_formula<S: AsRef<str>>(x: &[S], y: &[S], z: &[S]) -> Expr {
    let (x, y, z) = (strings(x), strings(y), strings(z));
    if z.is_empty() {
        return Expr::p(&y, &x, &[]);
    }
    Expr::sum(&z, Expr::product(vec![Expr::p(&y, &concat(&x, &z), &[]), Expr::p(&z, &[], &[])]))
}

/// `sum_z p(z|x) sum_{x'} p(y|x',z) p(x')`.
pub fn frontdoor_formula<S: AsRef<str>>(x: &[S], y: &[S], z: &[S]) -> Expr {
    let (x, y, z) = (strings(x), strings(y), strings(z));
    let xp: Vec<String> = x.iter().map(|v| primed(v, 1)).collect();
    Expr::sum(
        &z,
        Expr::product(vec![
            Expr::p(&z, &x, &[]),
            Expr::sum(&xp, Expr::product(vec![Expr::p(&y, &concat(&xp, &z), &[]), Expr::p(&xp, &[], &[])])),
        ]),
    )
}
