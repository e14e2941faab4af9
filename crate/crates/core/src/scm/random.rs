use num::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{DiscreteModel, Mechanism, Rational};
use crate::error::Result;
use crate::graph::{CausalGraph, Observability, Variable};

/// Parameters for [`random_model`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomModelConfig {
    /// Inclusive range of domain sizes, drawn per variable.
    pub min_domain: usize,
    pub max_domain: usize,
    /// Table entries are `w / sum(w)` with integer weights `w` in `1..=max_weight`,
    /// so every row is strictly positive.
    pub max_weight: u32,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        RandomModelConfig { min_domain: 2, max_domain: 2, max_weight: 9 }
    }
}

impl RandomModelConfig {
    pub fn with_domains(min: usize, max: usize) -> Self {
        RandomModelConfig { min_domain: min, max_domain: max, ..Self::default() }
    }
}

/// Draws strictly positive exact tables for every variable of `graph`.
pub fn random_model<R: Rng + ?Sized>(
    graph: &CausalGraph,
    config: &RandomModelConfig,
    rng: &mut R,
) -> Result<DiscreteModel> {
    let domains: Vec<Vec<String>> = (0..graph.len())
        .map(|_| {
            let k = rng.gen_range(config.min_domain.max(2)..=config.max_domain.max(config.min_domain).max(2));
            (0..k).map(|v| v.to_string()).collect()
        })
        .collect();
    let mechanisms = (0..graph.len())
        .map(|v| {
            let parents = graph.parents(v);
            let rows_n: usize = parents.iter().map(|&p| domains[p].len()).product();
            let rows = (0..rows_n)
                .map(|_| {
                    let w: Vec<u32> =
                        (0..domains[v].len()).map(|_| rng.gen_range(1..=config.max_weight.max(1))).collect();
                    let total: u32 = w.iter().sum();
                    w.iter().map(|&x| Rational::new(BigInt::from(x), BigInt::from(total))).collect()
                })
                .collect();
            Mechanism {
                child: graph.name(v).to_string(),
                parents: parents.iter().map(|&p| graph.name(p).to_string()).collect(),
                rows,
            }
        })
        .collect();
    DiscreteModel::new(graph.clone(), domains, mechanisms)
}

/// Random DAG over `observed` observed and `latent` latent nodes. Each pair is
/// joined with probability `edge_prob`, oriented along a random ordering.
/// Observed nodes are named `V0, V1, ...`, latent ones `U0, U1, ...`.
pub fn random_dag<R: Rng + ?Sized>(observed: usize, latent: usize, edge_prob: f64, rng: &mut R) -> CausalGraph {
    let vars: Vec<Variable> = (0..observed)
        .map(|i| Variable { name: format!("V{i}"), observability: Observability::Observed })
        .chain((0..latent).map(|i| Variable { name: format!("U{i}"), observability: Observability::Latent }))
        .collect();
    let mut order: Vec<usize> = (0..vars.len()).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if rng.gen_bool(edge_prob) {
                edges.push((vars[order[i]].name.clone(), vars[order[j]].name.clone()));
            }
        }
    }
    CausalGraph::new(vars, edges).expect("edges follow a total order")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_models_are_valid_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let g = random_dag(4, 1, 0.5, &mut rng);
            let m = random_model(&g, &RandomModelConfig::with_domains(2, 3), &mut rng).unwrap();
            let j = m.joint::<Rational>().unwrap();
            assert!(j.total().is_one());
            assert!(j.probs().iter().all(|p| p > &Rational::from_integer(0.into())));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = random_dag(6, 2, 0.4, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_dag(6, 2, 0.4, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
