use std::fmt;

use num::{One, Zero};

use super::{fmt_rational, Assignment, JointDistribution, Prob, Rational};
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeId, NodeSet, Observability, Variable};

/// Default limit on materialized joint-table cells.
pub const DEFAULT_CELL_BUDGET: u128 = 1 << 20;

/// Conditional table `p(child | parents)`. Rows are indexed by the parent
/// assignment in mixed radix, first parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub child: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<Rational>>,
}

/// `(parent values, noise value) -> child value`, `None` where undefined.
pub type StructuralMap = Box<dyn Fn(&[usize], usize) -> Option<usize>>;

/// `child = f(parents, noise)` with an exact noise distribution.
pub struct StructuralEquationSpec {
    pub child: String,
    pub parents: Vec<String>,
    pub parent_domain_sizes: Vec<usize>,
    pub child_domain_size: usize,
    pub noise: Vec<Rational>,
    pub map: StructuralMap,
}

impl fmt::Debug for StructuralEquationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructuralEquationSpec")
            .field("child", &self.child)
            .field("parents", &self.parents)
            .field("noise", &self.noise)
            .finish_non_exhaustive()
    }
}

fn decode_mixed(mut index: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, &s) in out.iter_mut().zip(sizes).rev() {
        *slot = index % s;
        index /= s;
    }
    out
}

fn encode_mixed(values: &[usize], sizes: &[usize]) -> usize {
    values.iter().zip(sizes).fold(0, |acc, (&v, &s)| acc * s + v)
}

/// Row for parent values `pa` gives value `v` the total noise mass mapped to it.
pub fn compile_mechanism(spec: &StructuralEquationSpec) -> Result<Mechanism> {
    let total = spec.noise.iter().fold(Rational::zero(), |a, b| a + b);
    if !total.is_one() {
        return Err(Error::Model(format!("noise distribution of {} sums to {}", spec.child, fmt_rational(&total))));
    }
    if spec.parents.len() != spec.parent_domain_sizes.len() {
        return Err(Error::Model(format!("{}: one domain size per parent required", spec.child)));
    }
    let rows_n: usize = spec.parent_domain_sizes.iter().product();
    let mut rows = Vec::with_capacity(rows_n);
    for r in 0..rows_n {
        let pa = decode_mixed(r, &spec.parent_domain_sizes);
        let mut row = vec![Rational::zero(); spec.child_domain_size];
        for (eps, mass) in spec.noise.iter().enumerate() {
            let cell = || {
                let parts: Vec<String> = spec.parents.iter().zip(&pa).map(|(p, v)| format!("{p}={v}")).collect();
                format!("({}) noise={eps}", parts.join(","))
            };
            match (spec.map)(&pa, eps) {
                Some(v) if v < spec.child_domain_size => row[v] += mass,
                Some(v) => {
                    return Err(Error::Model(format!(
                        "structural equation for {} maps {} to out-of-domain value {v}",
                        spec.child,
                        cell()
                    )))
                }
                None => {
                    return Err(Error::Model(format!(
                        "structural equation for {} is undefined at {}",
                        spec.child,
                        cell()
                    )))
                }
            }
        }
        rows.push(row);
    }
    Ok(Mechanism { child: spec.child.clone(), parents: spec.parents.clone(), rows })
}

/// A causal graph with a finite domain and an exact mechanism per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    graph: CausalGraph,
    domains: Vec<Vec<String>>,
    /// Indexed by node; parents listed in graph order.
    mechanisms: Vec<Mechanism>,
    cell_budget: u128,
}

impl DiscreteModel {
    /// `domains` is indexed by node; mechanisms may come in any order and
    /// list their parents in any order.
    pub fn new(graph: CausalGraph, domains: Vec<Vec<String>>, mechanisms: Vec<Mechanism>) -> Result<Self> {
        if domains.len() != graph.len() {
            return Err(Error::Model("one domain per variable required".into()));
        }
        for (v, d) in domains.iter().enumerate() {
            if d.len() < 2 {
                return Err(Error::Model(format!("domain of {} needs at least two values", graph.name(v))));
            }
            let mut seen = std::collections::HashSet::new();
            if let Some(dup) = d.iter().find(|x| !seen.insert(x.as_str())) {
                return Err(Error::Model(format!("value `{dup}` repeated in domain of {}", graph.name(v))));
            }
        }
        let mut slots: Vec<Option<Mechanism>> = vec![None; graph.len()];
        for m in mechanisms {
            let child = graph.id(&m.child)?;
            if slots[child].is_some() {
                return Err(Error::Model(format!("two mechanisms for {}", m.child)));
            }
            slots[child] = Some(normalize_mechanism(&graph, &domains, child, m)?);
        }
        let mechanisms = slots
            .into_iter()
            .enumerate()
            .map(|(v, m)| m.ok_or_else(|| Error::Model(format!("no mechanism for {}", graph.name(v)))))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteModel { graph, domains, mechanisms, cell_budget: DEFAULT_CELL_BUDGET })
    }

    pub fn with_cell_budget(mut self, budget: u128) -> Self {
        self.cell_budget = budget;
        self
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    pub fn domain(&self, name: &str) -> Result<&[String]> {
        Ok(&self.domains[self.graph.id(name)?])
    }

    pub fn mechanism(&self, name: &str) -> Result<&Mechanism> {
        Ok(&self.mechanisms[self.graph.id(name)?])
    }

    pub fn mechanisms(&self) -> &[Mechanism] {
        &self.mechanisms
    }

    pub fn value_index(&self, name: &str, value: &str) -> Result<usize> {
        self.domain(name)?
            .iter()
            .position(|d| d == value)
            .ok_or_else(|| Error::Model(format!("`{value}` is not in the domain of {name}")))
    }

    fn check_budget(&self) -> Result<usize> {
        let cells: u128 = self.domains.iter().map(|d| d.len() as u128).product();
        if cells > self.cell_budget {
            return Err(Error::TableBudget { cells, budget: self.cell_budget });
        }
        Ok(cells as usize)
    }

    fn tables<P: Prob>(&self) -> Vec<Vec<Vec<P>>> {
        self.mechanisms
            .iter()
            .map(|m| m.rows.iter().map(|r| r.iter().map(P::from_rational).collect()).collect())
            .collect()
    }

    fn row_index(&self, v: NodeId, values: &[usize]) -> usize {
        self.graph.parents(v).iter().fold(0, |acc, &p| acc * self.domains[p].len() + values[p])
    }

    fn names(&self) -> Vec<String> {
        self.graph.variables().iter().map(|v| v.name.clone()).collect()
    }

    /// Product of conditionals over all variables except `skip`, restricted
    /// to cells where `skip` takes the given value.
    fn product_table<P: Prob>(&self, skip: Option<(NodeId, usize)>) -> Result<JointDistribution<P>> {
        let cells = self.check_budget()?;
        let tables = self.tables::<P>();
        let sizes: Vec<usize> = self.domains.iter().map(Vec::len).collect();
        let mut probs = Vec::with_capacity(cells);
        for cell in 0..cells {
            let values = decode_mixed(cell, &sizes);
            if let Some((t, val)) = skip {
                if values[t] != val {
                    probs.push(P::zero());
                    continue;
                }
            }
            let mut p = P::one();
            for v in 0..self.graph.len() {
                if skip.is_some_and(|(t, _)| t == v) {
                    continue;
                }
                let f = &tables[v][self.row_index(v, &values)][values[v]];
                if f.is_zero() {
                    p = P::zero();
                    break;
                }
                p = p * f.clone();
            }
            probs.push(p);
        }
        JointDistribution::new(self.names(), self.domains.clone(), probs)
    }

    /// `p(x_1..x_n) = prod_j p(x_j | pa_j)` by full enumeration.
    pub fn joint<P: Prob>(&self) -> Result<JointDistribution<P>> {
        self.product_table(None)
    }

    /// Post-intervention distribution for `do(target = value)` as the truncated
    /// product `prod_{j != target} p(x_j | pa_j)`, zero off `x_target = value`.
    pub fn truncated<P: Prob>(&self, target: &str, value: usize) -> Result<JointDistribution<P>> {
        let t = self.graph.id(target)?;
        if value >= self.domains[t].len() {
            return Err(Error::Model(format!("value index {value} out of range for {target}")));
        }
        self.product_table(Some((t, value)))
    }

    /// Graph surgery: edges into the assigned variables are cut and their
    /// mechanisms replaced by point masses.
    pub fn intervene(&self, assignment: &Assignment) -> Result<DiscreteModel> {
        if assignment.is_empty() {
            return Ok(self.clone());
        }
        let mut fixed: Vec<Option<usize>> = vec![None; self.graph.len()];
        for (name, v) in assignment {
            let id = self.graph.id(name)?;
            if *v >= self.domains[id].len() {
                return Err(Error::Model(format!("value index {v} out of range for {name}")));
            }
            fixed[id] = Some(*v);
        }
        let cut: NodeSet = (0..self.graph.len()).filter(|&i| fixed[i].is_some()).collect();
        let graph = self.graph.mutilate(&cut, &NodeSet::new());
        let mut mechanisms = self.mechanisms.clone();
        for &v in &cut {
            let mut row = vec![Rational::zero(); self.domains[v].len()];
            row[fixed[v].unwrap()] = Rational::one();
            mechanisms[v] = Mechanism { child: self.graph.name(v).to_string(), parents: Vec::new(), rows: vec![row] };
        }
        Ok(DiscreteModel { graph, domains: self.domains.clone(), mechanisms, cell_budget: self.cell_budget })
    }

    /// `p(y | do(x))`: the marginal on `y` of the intervened model's joint.
    pub fn do_marginal<P: Prob, S: AsRef<str>>(&self, x: &Assignment, y: &[S]) -> Result<JointDistribution<P>> {
        self.intervene(x)?.joint::<P>()?.marginal(y)
    }

    /// Adds an observed fair coin that becomes the only parent of `treatment`,
    /// which copies it. Requires `treatment` to have a domain of the coin's size.
    pub fn graft_coin(&self, treatment: &str) -> Result<DiscreteModel> {
        let t = self.graph.id(treatment)?;
        let mut coin = "C".to_string();
        while self.graph.id(&coin).is_ok() {
            coin.push('_');
        }
        let mut vars = self.graph.variables().to_vec();
        vars.push(Variable { name: coin.clone(), observability: Observability::Observed });
        let mut edges: Vec<(String, String)> = self
            .graph
            .edges()
            .into_iter()
            .filter(|&(_, h)| h != t)
            .map(|(a, b)| (self.graph.name(a).to_string(), self.graph.name(b).to_string()))
            .collect();
        edges.push((coin.clone(), treatment.to_string()));
        let graph = CausalGraph::new(vars, edges)?;
        let k = self.domains[t].len();
        let mut domains = self.domains.clone();
        domains.push(self.domains[t].clone());
        let mut mechanisms = self.mechanisms.clone();
        mechanisms[t] = Mechanism {
            child: treatment.to_string(),
            parents: vec![coin.clone()],
            rows: (0..k)
                .map(|c| (0..k).map(|v| if v == c { Rational::one() } else { Rational::zero() }).collect())
                .collect(),
        };
        mechanisms.push(Mechanism {
            child: coin,
            parents: Vec::new(),
            rows: vec![vec![Rational::new(1.into(), (k as i64).into()); k]],
        });
        DiscreteModel::new(graph, domains, mechanisms)
    }
}

/// Validates a mechanism against the graph and reorders its rows so the
/// parents follow graph order.
fn normalize_mechanism(g: &CausalGraph, domains: &[Vec<String>], child: NodeId, m: Mechanism) -> Result<Mechanism> {
    let name = g.name(child);
    let given: Vec<NodeId> = m.parents.iter().map(|p| g.id(p)).collect::<Result<_>>()?;
    let mut sorted = given.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted != g.parents(child) || sorted.len() != given.len() {
        return Err(Error::Model(format!(
            "mechanism parents of {name} ({}) differ from graph parents ({})",
            m.parents.join(","),
            g.names(&g.parents(child).iter().copied().collect()).join(",")
        )));
    }
    let given_sizes: Vec<usize> = given.iter().map(|&p| domains[p].len()).collect();
    let graph_sizes: Vec<usize> = sorted.iter().map(|&p| domains[p].len()).collect();
    let rows_n: usize = graph_sizes.iter().product();
    if m.rows.len() != rows_n {
        return Err(Error::Model(format!("{name} has {} rows, expected {rows_n}", m.rows.len())));
    }
    let mut rows = vec![Vec::new(); rows_n];
    for (r, row) in m.rows.into_iter().enumerate() {
        if row.len() != domains[child].len() {
            return Err(Error::Model(format!(
                "row {r} of {name} has {} entries, expected {}",
                row.len(),
                domains[child].len()
            )));
        }
        let total = row.iter().fold(Rational::zero(), |a, b| a + b);
        if !total.is_one() || row.iter().any(|p| p < &Rational::zero()) {
            return Err(Error::Model(format!("row {r} of {name} sums to {}, not 1", fmt_rational(&total))));
        }
        let values = decode_mixed(r, &given_sizes);
        let reordered: Vec<usize> = sorted.iter().map(|p| values[given.iter().position(|q| q == p).unwrap()]).collect();
        rows[encode_mixed(&reordered, &graph_sizes)] = row;
    }
    Ok(Mechanism { child: name.to_string(), parents: sorted.iter().map(|&p| g.name(p).to_string()).collect(), rows })
}
