use num::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DiscreteModel, JointDistribution, Prob, Rational};
use crate::error::{Error, Result};

/// Rows of value indices over named finite variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub domains: Vec<Vec<String>>,
    pub rows: Vec<Vec<usize>>,
}

impl Dataset {
    /// Reads CSV with a header of variable names; each cell must be a value
    /// of that variable's domain.
    pub fn from_csv(text: &str, names: &[String], domains: &[Vec<String>]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> =
            reader.headers().map_err(|e| Error::Io(e.to_string()))?.iter().map(str::to_string).collect();
        let cols: Vec<usize> = names
            .iter()
            .map(|n| header.iter().position(|h| h == n).ok_or_else(|| Error::UnknownVariable(n.clone())))
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Io(e.to_string()))?;
            let row = cols
                .iter()
                .zip(domains)
                .map(|(&c, d)| {
                    let cell = record.get(c).unwrap_or("");
                    d.iter().position(|v| v == cell).ok_or_else(|| Error::parse(r + 2, cell, "value not in domain"))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Ok(Dataset { names: names.to_vec(), domains: domains.to_vec(), rows })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.names).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().zip(&self.domains).map(|(&v, d)| d[v].as_str())).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

impl DiscreteModel {
    /// Forward ancestral sampling of every variable, reproducible under `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = self.graph();
        let tables: Vec<Vec<Vec<f64>>> = self
            .mechanisms()
            .iter()
            .map(|m| m.rows.iter().map(|r| r.iter().map(<f64 as Prob>::from_rational).collect()).collect())
            .collect();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut values = vec![0usize; g.len()];
            for &v in g.topological_order() {
                let r = g.parents(v).iter().fold(0, |acc, &p| acc * self.domains()[p].len() + values[p]);
                let row = &tables[v][r];
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                values[v] = row.len() - 1;
                for (k, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        values[v] = k;
                        break;
                    }
                }
            }
            rows.push(values);
        }
        Dataset {
            names: g.variables().iter().map(|v| v.name.clone()).collect(),
            domains: self.domains().to_vec(),
            rows,
        }
    }
}

/// Empirical joint frequencies over the dataset's variables.
pub fn fit(data: &Dataset) -> Result<JointDistribution<Rational>> {
    if data.rows.is_empty() {
        return Err(Error::Model("cannot fit an empty dataset".into()));
    }
    let cells: usize = data.domains.iter().map(Vec::len).product();
    let mut counts = vec![0u64; cells];
    for row in &data.rows {
        let c = row.iter().zip(&data.domains).fold(0, |acc, (&v, d)| acc * d.len() + v);
        counts[c] += 1;
    }
    let n = BigInt::from(data.rows.len());
    JointDistribution::new(
        data.names.clone(),
        data.domains.clone(),
        counts.into_iter().map(|c| Rational::new(c.into(), n.clone())).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{random_dag, random_model, ratio, RandomModelConfig};
    use crate::CausalGraph;

    fn coin() -> DiscreteModel {
        let g = CausalGraph::builder().observed("C").build().unwrap();
        let m =
            crate::scm::Mechanism { child: "C".into(), parents: vec![], rows: vec![vec![ratio(1, 2), ratio(1, 2)]] };
        DiscreteModel::new(g, vec![vec!["0".into(), "1".into()]], vec![m]).unwrap()
    }

    #[test]
    fn fair_coin_frequency_within_three_sigma() {
        let n = 10_000;
        let data = coin().sample(11, n);
        let heads = data.rows.iter().filter(|r| r[0] == 1).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((heads - n as f64 / 2.0).abs() <= 3.0 * sigma);
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let m = coin();
        assert_eq!(m.sample(5, 100), m.sample(5, 100));
        assert_ne!(m.sample(5, 100), m.sample(6, 100));
    }

    #[test]
    fn csv_round_trip() {
        let data = coin().sample(1, 20);
        let text = data.to_csv().unwrap();
        assert!(text.starts_with("C\n"));
        assert_eq!(Dataset::from_csv(&text, &data.names, &data.domains).unwrap(), data);
    }

    #[test]
    fn fit_converges_in_total_variation() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g = random_dag(3, 0, 0.6, &mut rng);
        let m = random_model(&g, &RandomModelConfig::default(), &mut rng).unwrap();
        let exact = m.joint::<Rational>().unwrap();
        let tv: Vec<f64> = [100, 1_000, 10_000]
            .iter()
            .map(|&n| fit(&m.sample(9, n)).unwrap().total_variation(&exact).unwrap())
            .collect();
        assert!(tv[0] > tv[1] && tv[1] > tv[2], "{tv:?}");
    }
}
