//! Identification of interventional distributions.
//!
//! [`identify`] searches for a do-free expression of `p(y | do(x))` by
//! rewriting with the three do-calculus rules, marginalization and the chain
//! rule, with the back-door and front-door adjustments available as
//! shortcuts. Every formula it returns has been compared against the
//! interventional distribution of several random models first. A failed
//! search is reported as such unless the query matches a catalog graph known
//! to be non-identifiable.

mod catalog;
mod criteria;
mod rules;
mod search;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{Evaluator, Expr};
use crate::graph::{check_disjoint, CausalGraph, NodeSet};
use crate::scm::{random_model, Assignment, DiscreteModel, Prob, RandomModelConfig, Rational};

pub use catalog::{
    catalog, find_entry, known_non_identifiable, run_entry, unavailable, CatalogEntry, EntryReport, Expectation,
};
pub use criteria::{
    backdoor_admissible, backdoor_formula, find_backdoor_sets, find_frontdoor_sets, frontdoor_admissible,
    frontdoor_formula, ADJUSTMENT_CANDIDATE_LIMIT,
};
pub use rules::{rule1_applicable, rule1_guard, rule2_applicable, rule2_guard, rule3_applicable, rule3_guard, Guard};
pub use search::{replay, tidy, DerivationStep, RuleTag, Search, Solution, Term};

pub const DEFAULT_BUDGET: u32 = 16;

/// Random models an identified formula is checked on before it is returned.
pub const VERIFICATION_MODELS: usize = 3;

/// Joints up to this many cells are verified in exact arithmetic.
const EXACT_VERIFICATION_CELLS: usize = 4096;

/// `p(y | do(x))` on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    graph: CausalGraph,
    x: NodeSet,
    y: NodeSet,
}

impl Query {
    pub fn new(graph: CausalGraph, x: NodeSet, y: NodeSet) -> Result<Query> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidQuery("treatment and outcome sets must be nonempty".into()));
        }
        if let Some(&v) = x.iter().chain(&y).find(|&&v| v >= graph.len()) {
            return Err(Error::InvalidQuery(format!("node id {v} is out of range")));
        }
        if let Some(&v) = x.iter().chain(&y).find(|&&v| graph.is_latent(v)) {
            return Err(Error::InvalidQuery(format!("{} is latent", graph.name(v))));
        }
        check_disjoint(&graph, &[("X", &x), ("Y", &y)])?;
        Ok(Query { graph, x, y })
    }

    pub fn from_names<S: AsRef<str>>(graph: CausalGraph, x: &[S], y: &[S]) -> Result<Query> {
        let (xs, ys) = (graph.set(x)?, graph.set(y)?);
        Query::new(graph, xs, ys)
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn x(&self) -> &NodeSet {
        &self.x
    }

    pub fn y(&self) -> &NodeSet {
        &self.y
    }

    pub fn x_names(&self) -> Vec<String> {
        self.graph.names(&self.x)
    }

    pub fn y_names(&self) -> Vec<String> {
        self.graph.names(&self.y)
    }

    /// `p(y|do(x))` as an expression.
    pub fn target(&self) -> Expr {
        Expr::p(&self.y_names(), &[], &self.x_names())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Identified,
    /// The search found nothing within this many steps.
    NotIdentifiedWithinBudget(u32),
    KnownNonIdentifiable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Identified => f.write_str("IDENTIFIED"),
            Status::NotIdentifiedWithinBudget(b) => write!(f, "NOT-IDENTIFIED-WITHIN-BUDGET ({b})"),
            Status::KnownNonIdentifiable => f.write_str("KNOWN-NON-IDENTIFIABLE"),
        }
    }
}

impl Serialize for Status {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Status::Identified => "identified",
            Status::NotIdentifiedWithinBudget(_) => "not-identified-within-budget",
            Status::KnownNonIdentifiable => "known-non-identifiable",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult {
    pub status: Status,
    pub formula: Option<Expr>,
    pub derivation: Vec<DerivationStep>,
    pub budget: u32,
    /// Deepening bound reached when the search stopped.
    pub budget_spent: u32,
    /// Primitive steps in the derivation.
    pub steps: u32,
    /// Matching catalog graph when the status is known-non-identifiable.
    pub catalog_entry: Option<String>,
    pub verified_models: usize,
}

pub fn identify(q: &Query, budget: u32) -> Result<IdentificationResult> {
    if budget < 1 {
        return Err(Error::InvalidQuery("budget must be at least 1".into()));
    }
    let g = q.graph();
    let mut search = Search::new(g);
    let root = Term::new(q.y.clone(), q.x.clone(), NodeSet::new());
    for b in 1..=budget {
        let Some(sol) = search.solve(&root, b)? else { continue };
        let (formula, derivation) = replay(g, &sol)?;
        let observed: Vec<String> = g.names(&g.observed());
        if !formula.is_do_free() || formula.free_vars().iter().any(|v| !observed.contains(v)) {
            return Err(Error::Internal(format!("derived formula {formula} is not an observational expression")));
        }
        let verified_models = verify(q, &formula, VERIFICATION_MODELS)?;
        return Ok(IdentificationResult {
            status: Status::Identified,
            formula: Some(formula),
            derivation,
            budget,
            budget_spent: b,
            steps: sol.cost,
            catalog_entry: None,
            verified_models,
        });
    }
    let known = known_non_identifiable(q);
    Ok(IdentificationResult {
        status: if known.is_some() { Status::KnownNonIdentifiable } else { Status::NotIdentifiedWithinBudget(budget) },
        formula: None,
        derivation: Vec::new(),
        budget,
        budget_spent: budget,
        steps: 0,
        catalog_entry: known,
        verified_models: 0,
    })
}

fn cells(m: &DiscreteModel) -> usize {
    m.domains().iter().map(Vec::len).product()
}

fn assignments(names: &[String], m: &DiscreteModel) -> Result<Vec<Assignment>> {
    let mut out: Vec<Assignment> = vec![Vec::new()];
    for n in names {
        let k = m.domain(n)?.len();
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..k).map(move |v| {
                    let mut b = a.clone();
                    b.push((n.clone(), v));
                    b
                })
            })
            .collect();
    }
    Ok(out)
}

/// True iff `formula` agrees with the interventional distribution of `m`
/// over all values of the query variables, within `tol` for inexact `P`.
fn agrees<P: Prob>(q: &Query, formula: &Expr, m: &DiscreteModel, tol: f64) -> Result<bool> {
    let ev = Evaluator::<P>::new(m);
    let ys = q.y_names();
    for xa in assignments(&q.x_names(), m)? {
        let oracle = m.do_marginal::<P, _>(&xa, &ys)?;
        for ya in assignments(&ys, m)? {
            let idx: Vec<usize> = ya.iter().map(|(_, v)| *v).collect();
            let mut binding = xa.clone();
            binding.extend(ya);
            if !ev.eval(formula, &binding)?.close(oracle.get(&idx), tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff `formula` equals `p(y|do(x))` exactly on `m`.
pub fn matches_oracle(q: &Query, formula: &Expr, m: &DiscreteModel) -> Result<bool> {
    agrees::<Rational>(q, formula, m, 0.0)
}

/// Checks `formula` on `count` seeded random models of the query graph and
/// returns how many were checked. Models whose joint exceeds the table
/// budget are skipped.
pub fn verify(q: &Query, formula: &Expr, count: usize) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d_e17);
    let mut checked = 0;
    for i in 0..count {
        let config = if i + 1 == count && count > 1 {
            RandomModelConfig::with_domains(2, 3)
        } else {
            RandomModelConfig::default()
        };
        let m = random_model(q.graph(), &config, &mut rng)?;
        let ok = if cells(&m) <= EXACT_VERIFICATION_CELLS {
            matches_oracle(q, formula, &m)
        } else {
            agrees::<f64>(q, formula, &m, 1e-9)
        };
        match ok {
            Ok(true) => checked += 1,
            Ok(false) => {
                return Err(Error::Internal(format!(
                    "derived formula {formula} disagrees with the interventional distribution of a random model"
                )))
            }
            Err(Error::TableBudget { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(checked)
}

/// A bijection between the nodes of two graphs preserving edges and
/// latency that maps `x` onto `hx` and `y` onto `hy`.
pub fn query_isomorphism(
    g: &CausalGraph,
    x: &NodeSet,
    y: &NodeSet,
    h: &CausalGraph,
    hx: &NodeSet,
    hy: &NodeSet,
) -> Option<Vec<usize>> {
    if g.len() != h.len() || g.edge_count() != h.edge_count() || x.len() != hx.len() || y.len() != hy.len() {
        return None;
    }
    let role = |set_x: &NodeSet, set_y: &NodeSet, v: usize| (set_x.contains(&v), set_y.contains(&v));
    let compatible = |a: usize, b: usize| {
        g.is_latent(a) == h.is_latent(b)
            && role(x, y, a) == role(hx, hy, b)
            && g.parents(a).len() == h.parents(b).len()
            && g.children(a).len() == h.children(b).len()
    };
    fn extend(
        g: &CausalGraph,
        h: &CausalGraph,
        order: &[usize],
        map: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        compatible: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        let Some(&a) = order.iter().find(|&&v| map[v].is_none()) else {
            return true;
        };
        for b in 0..h.len() {
            if used[b] || !compatible(a, b) {
                continue;
            }
            let consistent = (0..g.len()).all(|c| match map[c] {
                Some(d) => g.has_edge(a, c) == h.has_edge(b, d) && g.has_edge(c, a) == h.has_edge(d, b),
                None => true,
            });
            if !consistent {
                continue;
            }
            map[a] = Some(b);
            used[b] = true;
            if extend(g, h, order, map, used, compatible) {
                return true;
            }
            map[a] = None;
            used[b] = false;
        }
        false
    }
    let mut map = vec![None; g.len()];
    let mut used = vec![false; h.len()];
    let order = g.topological_order().to_vec();
    extend(g, h, &order, &mut map, &mut used, &compatible).then(|| map.into_iter().map(Option::unwrap).collect())
}
