use std::collections::HashSet;

use super::Prob;
use crate::error::{Error, Result};

/// Partial assignment: variable name and value index into its domain.
pub type Assignment = Vec<(String, usize)>;

/// Exact table over every assignment of a list of finite variables. Cells
/// are laid out in mixed radix, first variable most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<P> {
    names: Vec<String>,
    domains: Vec<Vec<String>>,
    probs: Vec<P>,
}

impl<P: Prob> JointDistribution<P> {
    pub fn new(names: Vec<String>, domains: Vec<Vec<String>>, probs: Vec<P>) -> Result<Self> {
        if names.len() != domains.len() {
            return Err(Error::Model("one domain per variable required".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Model(format!("variable `{dup}` listed twice")));
        }
        let cells: usize = domains.iter().map(Vec::len).product();
        if cells != probs.len() {
            return Err(Error::Model(format!("table has {} cells, expected {cells}", probs.len())));
        }
        Ok(JointDistribution { names, domains, probs })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domains(&self) -> &[Vec<String>] {
        &self.domains
    }

    pub fn probs(&self) -> &[P] {
        &self.probs
    }

    pub fn cells(&self) -> usize {
        self.probs.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn value_index(&self, name: &str, value: &str) -> Result<usize> {
        let v = self.var_index(name)?;
        self.domains[v]
            .iter()
            .position(|d| d == value)
            .ok_or_else(|| Error::Model(format!("`{value}` is not in the domain of {name}")))
    }

    pub fn cell_index(&self, values: &[usize]) -> usize {
        values.iter().zip(&self.domains).fold(0, |acc, (&v, d)| acc * d.len() + v)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.domains.len()];
        for (slot, d) in out.iter_mut().zip(&self.domains).rev() {
            *slot = index % d.len();
            index /= d.len();
        }
        out
    }

    pub fn get(&self, values: &[usize]) -> &P {
        &self.probs[self.cell_index(values)]
    }

    pub fn total(&self) -> P {
        self.probs.iter().fold(P::zero(), |acc, p| acc + p.clone())
    }

    /// Distribution of the listed variables, in the listed order.
    pub fn marginal<S: AsRef<str>>(&self, vars: &[S]) -> Result<Self> {
        let idx: Vec<usize> = vars.iter().map(|v| self.var_index(v.as_ref())).collect::<Result<_>>()?;
        let names: Vec<String> = idx.iter().map(|&i| self.names[i].clone()).collect();
        let domains: Vec<Vec<String>> = idx.iter().map(|&i| self.domains[i].clone()).collect();
        let cells: usize = domains.iter().map(Vec::len).product();
        let mut probs = vec![P::zero(); cells];
        for (cell, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let values = self.decode(cell);
            let target = idx.iter().zip(&domains).fold(0, |acc, (&i, d)| acc * d.len() + values[i]);
            probs[target] = probs[target].clone() + p.clone();
        }
        JointDistribution::new(names, domains, probs)
    }

    fn resolve_event(&self, event: &Assignment) -> Result<Vec<(usize, usize)>> {
        event
            .iter()
            .map(|(name, v)| {
                let i = self.var_index(name)?;
                if *v >= self.domains[i].len() {
                    return Err(Error::Model(format!("value index {v} out of range for {name}")));
                }
                Ok((i, *v))
            })
            .collect()
    }

    /// Probability of a partial assignment.
    pub fn prob(&self, event: &Assignment) -> Result<P> {
        let ev = self.resolve_event(event)?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(cell, _)| {
                let values = self.decode(*cell);
                ev.iter().all(|&(i, v)| values[i] == v)
            })
            .fold(P::zero(), |acc, (_, p)| acc + p.clone()))
    }

    /// Distribution of `targets` given the event `given`, renormalized.
    pub fn conditional<S: AsRef<str>>(&self, targets: &[S], given: &Assignment) -> Result<Self> {
        let ev = self.resolve_event(given)?;
        let mut restricted = self.clone();
        let mut mass = P::zero();
        for (cell, p) in restricted.probs.iter_mut().enumerate() {
            let values = self.decode(cell);
            if ev.iter().all(|&(i, v)| values[i] == v) {
                mass = mass + p.clone();
            } else {
                *p = P::zero();
            }
        }
        if mass.is_zero() {
            let event: Vec<String> = given
                .iter()
                .map(|(n, v)| format!("{n}={}", self.domains[self.var_index(n).unwrap_or(0)][*v]))
                .collect();
            return Err(Error::Positivity(format!("p({}) = 0", event.join(","))));
        }
        for p in restricted.probs.iter_mut() {
            *p = p.clone() / mass.clone();
        }
        restricted.marginal(targets)
    }

    /// `p(x,y|z) = p(x|z) p(y|z)` for every `z` with `p(z) > 0`, checked in the
    /// cross-multiplied form `p(x,y,z) p(z) = p(x,z) p(y,z)`.
    pub fn independent<S: AsRef<str>>(&self, x: &[S], y: &[S], z: &[S], tol: f64) -> Result<bool> {
        let mut all: Vec<&str> = Vec::new();
        for s in x.iter().chain(y).chain(z) {
            if all.contains(&s.as_ref()) {
                return Err(Error::Overlap(format!("`{}` appears twice", s.as_ref())));
            }
            all.push(s.as_ref());
        }
        let xyz = self.marginal(&all)?;
        let (nx, ny) = (x.len(), y.len());
        let xz: Vec<&str> = all[..nx].iter().chain(&all[nx + ny..]).copied().collect();
        let yz: Vec<&str> = all[nx..].to_vec();
        let zs: Vec<&str> = all[nx + ny..].to_vec();
        let (pxz, pyz, pz) = (xyz.marginal(&xz)?, xyz.marginal(&yz)?, xyz.marginal(&zs)?);
        for (cell, p) in xyz.probs.iter().enumerate() {
            let v = xyz.decode(cell);
            let vxz: Vec<usize> = v[..nx].iter().chain(&v[nx + ny..]).copied().collect();
            let lhs = p.clone() * pz.get(&v[nx + ny..]).clone();
            let rhs = pxz.get(&vxz).clone() * pyz.get(&v[nx..]).clone();
            if !lhs.close(&rhs, tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Total variation distance; both tables must share variables and domains.
    pub fn total_variation<Q: Prob>(&self, other: &JointDistribution<Q>) -> Result<f64> {
        if self.names != other.names || self.domains != other.domains {
            return Err(Error::Model("distributions have different shapes".into()));
        }
        let sum: f64 = self.probs.iter().zip(&other.probs).map(|(a, b)| (a.to_f64() - b.to_f64()).abs()).sum();
        Ok(sum / 2.0)
    }

    /// Iterates `(values, probability)` over all cells.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &P)> + '_ {
        self.probs.iter().enumerate().map(|(c, p)| (self.decode(c), p))
    }
}
