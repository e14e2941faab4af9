//! Built-in corpus of named graphs with expected identification outcomes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    backdoor_admissible, backdoor_formula, find_backdoor_sets, frontdoor_admissible, frontdoor_formula, identify,
    matches_oracle, query_isomorphism, tidy, Query, Status, DEFAULT_BUDGET,
};
use crate::error::Result;
use crate::expr::Expr;
use crate::graph::{parse_graph, CausalGraph};
use crate::scm::{parse_model, random_model, JointDistribution, RandomModelConfig, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expectation {
    /// Identified by the back-door formula over this set.
    Backdoor {
        z: Vec<&'static str>,
    },
    /// Identified by the front-door formula over this set.
    Frontdoor {
        z: Vec<&'static str>,
    },
    Identified,
    /// Identified as `p(y|x)`, and equal to it on random models.
    ObservationalEqualsInterventional,
    /// Admissibility verdicts for back-door candidate sets, plus identified.
    BackdoorSets {
        admissible: Vec<Vec<&'static str>>,
        inadmissible: Vec<Vec<&'static str>>,
    },
    /// Two models agreeing on the observed variables but not on
    /// `p(y|do(x))`.
    KnownNonIdentifiable {
        witness: [&'static str; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub graph: &'static str,
    pub x: Vec<&'static str>,
    pub y: Vec<&'static str>,
    pub expectation: Expectation,
    /// The topology is a reconstruction and only partly pinned down.
    pub reconstructed: bool,
}

impl CatalogEntry {
    pub fn parse(&self) -> Result<CausalGraph> {
        parse_graph(self.graph)
    }

    pub fn query(&self) -> Result<Query> {
        Query::from_names(self.parse()?, &self.x, &self.y)
    }

    pub fn latent_count(&self) -> usize {
        self.parse().map(|g| g.variables().iter().filter(|v| v.is_latent()).count()).unwrap_or(0)
    }
}

const LOYALTY: &str = "\
var U latent
var Z
var X
var Y
edge U -> Z
edge Z -> X
edge X -> Y
edge U -> Y
";

const FRONT_DOOR: &str = "\
var U latent
var X
var Z
var Y
edge U -> X
edge U -> Y
edge X -> Z
edge Z -> Y
";

const PRICING: &str = "\
var U latent
var X
var Z
var Y
edge U -> X
edge U -> Z
edge X -> Z
edge X -> Y
edge Z -> Y
";

// Both models copy U into every observed variable, so their observational
// distributions agree. Under do(X) the first keeps Y = U, the second Y = X.
const PRICING_WITNESS_A: &str = "\
var U latent
var X
var Z
var Y
edge U -> X
edge U -> Z
edge X -> Z
edge X -> Y
edge Z -> Y
cpt U : 1/2 1/2
cpt X | U=0 : 1 0
cpt X | U=1 : 0 1
cpt Z | U=0,X=0 : 1 0
cpt Z | U=0,X=1 : 1 0
cpt Z | U=1,X=0 : 0 1
cpt Z | U=1,X=1 : 0 1
cpt Y | X=0,Z=0 : 1 0
cpt Y | X=0,Z=1 : 0 1
cpt Y | X=1,Z=0 : 1 0
cpt Y | X=1,Z=1 : 0 1
";

const PRICING_WITNESS_B: &str = "\
var U latent
var X
var Z
var Y
edge U -> X
edge U -> Z
edge X -> Z
edge X -> Y
edge Z -> Y
cpt U : 1/2 1/2
cpt X | U=0 : 1 0
cpt X | U=1 : 0 1
cpt Z | U=0,X=0 : 1 0
cpt Z | U=0,X=1 : 0 1
cpt Z | U=1,X=0 : 1 0
cpt Z | U=1,X=1 : 0 1
cpt Y | X=0,Z=0 : 1 0
cpt Y | X=0,Z=1 : 0 1
cpt Y | X=1,Z=0 : 1 0
cpt Y | X=1,Z=1 : 0 1
";

const BOW: &str = "\
var U latent
var X
var Y
edge U -> X
edge U -> Y
edge X -> Y
";

const BOW_WITNESS_A: &str = "\
var U latent
var X
var Y
edge U -> X
edge U -> Y
edge X -> Y
cpt U : 1/2 1/2
cpt X | U=0 : 1 0
cpt X | U=1 : 0 1
cpt Y | U=0,X=0 : 1 0
cpt Y | U=0,X=1 : 1 0
cpt Y | U=1,X=0 : 0 1
cpt Y | U=1,X=1 : 0 1
";

const BOW_WITNESS_B: &str = "\
var U latent
var X
var Y
edge U -> X
edge U -> Y
edge X -> Y
cpt U : 1/2 1/2
cpt X | U=0 : 1 0
cpt X | U=1 : 0 1
cpt Y | U=0,X=0 : 1 0
cpt Y | U=0,X=1 : 0 1
cpt Y | U=1,X=0 : 1 0
cpt Y | U=1,X=1 : 0 1
";

const RCT_OBSERVED: &str = "\
var Z1
var Z2
var Z3
var X
var Y
edge Z1 -> Y
edge Z2 -> Y
edge Z3 -> Y
edge X -> Y
";

const RCT_CONFOUNDED: &str = "\
var Z1
var Z2
var Z3
var X
var Y
edge Z1 -> X
edge Z2 -> X
edge Z3 -> X
edge Z1 -> Y
edge Z2 -> Y
edge Z3 -> Y
edge X -> Y
";

const RCT_COIN: &str = "\
var C
var Z1
var Z2
var Z3
var X
var Y
edge C -> X
edge Z1 -> Y
edge Z2 -> Y
edge Z3 -> Y
edge X -> Y
";

// Edges beyond the two back-door paths the criterion example needs are a
// reconstruction.
const ADJUSTMENT_EXAMPLE: &str = "\
var Z1
var Z2
var Z3
var Z4
var Z5
var Z6
var X
var Y
edge Z1 -> Z3
edge Z3 -> X
edge Z1 -> Y
edge Z1 -> Z4
edge Z2 -> Z4
edge Z2 -> Y
edge Z4 -> X
edge Z5 -> Z4
edge Z5 -> Y
edge Z4 -> Y
edge X -> Z6
edge Z6 -> Y
";

const CONFOUNDED_MEDIATOR: &str = "\
var U latent
var X
var Z
var Y
edge X -> Z
edge X -> Y
edge Z -> Y
edge U -> Z
edge U -> Y
";

const LOYALTY_DIRECT: &str = "\
var U latent
var Z
var X
var Y
edge U -> Z
edge Z -> X
edge X -> Y
edge U -> Y
edge Z -> Y
";

/// Every runnable entry, in a fixed order.
pub fn catalog() -> Vec<CatalogEntry> {
    let e = |name, description, graph, expectation| CatalogEntry {
        name,
        description,
        graph,
        x: vec!["X"],
        y: vec!["Y"],
        expectation,
        reconstructed: false,
    };
    vec![
        e(
            "loyalty",
            "customer intention U drives behavior Z, which drives targeting X; X and U drive churn Y",
            LOYALTY,
            Expectation::Backdoor { z: vec!["Z"] },
        ),
        e(
            "insurance",
            "claim characterization U drives declaration Z and compensation Y; Z drives provisioning X",
            LOYALTY,
            Expectation::Backdoor { z: vec!["Z"] },
        ),
        e(
            "sales-training",
            "competitive pressure U confounds training X and turnover Y; skills Z mediate",
            FRONT_DOOR,
            Expectation::Frontdoor { z: vec!["Z"] },
        ),
        e(
            "front-door",
            "latent confounder of X and Y with an observed mediator Z",
            FRONT_DOOR,
            Expectation::Frontdoor { z: vec!["Z"] },
        ),
        e(
            "pricing",
            "competition U confounds price X and volume Z; both drive turnover Y",
            PRICING,
            Expectation::KnownNonIdentifiable { witness: [PRICING_WITNESS_A, PRICING_WITNESS_B] },
        ),
        e(
            "bow",
            "latent confounder of X and Y alongside the direct edge",
            BOW,
            Expectation::KnownNonIdentifiable { witness: [BOW_WITNESS_A, BOW_WITNESS_B] },
        ),
        e(
            "rct-observed",
            "covariates Z1..Z3 affect only the outcome",
            RCT_OBSERVED,
            Expectation::Backdoor { z: vec![] },
        ),
        e(
            "rct-confounded",
            "covariates Z1..Z3 affect both treatment and outcome",
            RCT_CONFOUNDED,
            Expectation::Backdoor { z: vec!["Z1", "Z2", "Z3"] },
        ),
        e("rct-coin", "treatment assigned by a coin C", RCT_COIN, Expectation::ObservationalEqualsInterventional),
        CatalogEntry {
            reconstructed: true,
            ..e(
                "adjustment-example",
                "eight-variable back-door example",
                ADJUSTMENT_EXAMPLE,
                Expectation::BackdoorSets { admissible: vec![vec!["Z3", "Z4"]], inadmissible: vec![vec!["Z4"]] },
            )
        },
        e(
            "confounded-mediator",
            "X drives Z and Y; a latent confounds Z and Y",
            CONFOUNDED_MEDIATOR,
            Expectation::Identified,
        ),
        e(
            "loyalty-direct",
            "the loyalty graph with an extra edge Z -> Y",
            LOYALTY_DIRECT,
            Expectation::Backdoor { z: vec!["Z"] },
        ),
    ]
}

/// Catalog graphs whose topology is not recoverable, with the reason.
pub fn unavailable() -> Vec<(&'static str, &'static str)> {
    let reason = "published only as a drawing; edge list not stated in the text";
    vec![
        ("identifiable-a", reason),
        ("identifiable-d", reason),
        ("identifiable-e", reason),
        ("identifiable-f", reason),
        ("identifiable-g", reason),
        ("non-identifiable-other-panels", reason),
    ]
}

pub fn find_entry(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.name == name)
}

/// Name of the first non-identifiable catalog entry the query matches.
pub fn known_non_identifiable(q: &Query) -> Option<String> {
    catalog()
        .into_iter()
        .filter(|e| matches!(e.expectation, Expectation::KnownNonIdentifiable { .. }))
        .find(|e| {
            e.query().is_ok_and(|h| query_isomorphism(q.graph(), q.x(), q.y(), h.graph(), h.x(), h.y()).is_some())
        })
        .map(|e| e.name.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntryReport {
    pub name: String,
    pub passed: bool,
    pub status: String,
    pub formula: Option<String>,
    pub detail: String,
}

fn same(a: &Expr, b: &Expr) -> bool {
    tidy(a) == tidy(b)
}

fn observed_joint(text: &str) -> Result<(JointDistribution<Rational>, crate::scm::DiscreteModel)> {
    let m = parse_model(text)?;
    let g = m.graph();
    let names = g.names(&g.observed());
    Ok((m.joint::<Rational>()?.marginal(&names)?, m))
}

fn check_witness(entry: &CatalogEntry, pair: &[&str; 2]) -> Result<std::result::Result<(), String>> {
    let (ja, ma) = observed_joint(pair[0])?;
    let (jb, mb) = observed_joint(pair[1])?;
    let g = entry.parse()?;
    if ma.graph() != &g || mb.graph() != &g {
        return Ok(Err("witness models are not over the entry graph".into()));
    }
    if ja != jb {
        return Ok(Err("witness models differ observationally".into()));
    }
    for xv in 0..ma.domain(entry.x[0])?.len() {
        let x = vec![(entry.x[0].to_string(), xv)];
        if ma.do_marginal::<Rational, _>(&x, &entry.y)? != mb.do_marginal::<Rational, _>(&x, &entry.y)? {
            return Ok(Ok(()));
        }
    }
    Ok(Err("witness models agree on every intervention".into()))
}

/// Runs one entry's expectation.
pub fn run_entry(entry: &CatalogEntry) -> Result<EntryReport> {
    let q = entry.query()?;
    let r = identify(&q, DEFAULT_BUDGET)?;
    let formula = r.formula.clone();
    let mut problems: Vec<String> = Vec::new();
    let expect_identified = !matches!(entry.expectation, Expectation::KnownNonIdentifiable { .. });
    if expect_identified && r.status != Status::Identified {
        problems.push(format!("expected IDENTIFIED, got {}", r.status));
    }
    let g = q.graph();
    match &entry.expectation {
        Expectation::Backdoor { z } => {
            let zs = g.set(z)?;
            if !backdoor_admissible(g, q.x(), q.y(), &zs)? {
                problems.push(format!("{{{}}} is not back-door admissible", z.join(",")));
            }
            if find_backdoor_sets(g, q.x(), q.y())?.first() != Some(&zs) {
                problems.push("first back-door set differs".into());
            }
            let want = backdoor_formula(&entry.x, &entry.y, z);
            if formula.as_ref().is_some_and(|f| !same(f, &want)) {
                problems.push(format!("formula differs from {want}"));
            }
        }
        Expectation::Frontdoor { z } => {
            if !frontdoor_admissible(g, q.x(), q.y(), &g.set(z)?)? {
                problems.push(format!("{{{}}} is not front-door admissible", z.join(",")));
            }
            let want = frontdoor_formula(&entry.x, &entry.y, z);
            if formula.as_ref().is_some_and(|f| !same(f, &want)) {
                problems.push(format!("formula differs from {}", tidy(&want)));
            }
        }
        Expectation::Identified => {}
        Expectation::ObservationalEqualsInterventional => {
            let want = Expr::p(&entry.y, &entry.x, &[]);
            if formula.as_ref().is_some_and(|f| !same(f, &want)) {
                problems.push(format!("formula differs from {want}"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0xc01);
            for _ in 0..5 {
                let m = random_model(g, &RandomModelConfig::default(), &mut rng)?;
                if !matches_oracle(&q, &want, &m)? {
                    problems.push("p(y|x) differs from p(y|do(x)) on a random model".into());
                    break;
                }
            }
        }
        Expectation::BackdoorSets { admissible, inadmissible } => {
            for z in admissible {
                if !backdoor_admissible(g, q.x(), q.y(), &g.set(z)?)? {
                    problems.push(format!("{{{}}} should be admissible", z.join(",")));
                }
            }
            for z in inadmissible {
                if backdoor_admissible(g, q.x(), q.y(), &g.set(z)?)? {
                    problems.push(format!("{{{}}} should not be admissible", z.join(",")));
                }
            }
        }
        Expectation::KnownNonIdentifiable { witness } => {
            if r.status != Status::KnownNonIdentifiable {
                problems.push(format!("expected KNOWN-NON-IDENTIFIABLE, got {}", r.status));
            }
            if let Err(msg) = check_witness(entry, witness)? {
                problems.push(msg);
            }
        }
    }
    Ok(EntryReport {
        name: entry.name.to_string(),
        passed: problems.is_empty(),
        status: r.status.to_string(),
        formula: formula.map(|f| f.to_string()),
        detail: problems.join("; "),
    })
}
