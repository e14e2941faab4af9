//! Symbolic probability expressions.
//!
//! An [`Expr`] is a tree of conditional probability terms, sums over bound
//! variables, products and quotients. Expressions name variables only;
//! domains come from the model an expression is evaluated on.
//!
//! A bound variable may carry a fresh-name suffix `__k` (`x__1`), which
//! refers to the same model variable as `x`. The text renderer prints such
//! names primed (`x'`), and the parser reads them back.

mod eval;
mod parse;
mod render;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

pub use eval::{evaluate, Evaluator};
pub use parse::parse_expr;
pub use render::{render_latex, render_text};

/// `p(targets | do(interventions), given)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProbTerm {
    pub targets: Vec<String>,
    pub given: Vec<String>,
    pub interventions: Vec<String>,
}

impl ProbTerm {
    pub fn new<S: AsRef<str>>(targets: &[S], given: &[S], interventions: &[S]) -> Result<ProbTerm> {
        let own = |v: &[S]| v.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>();
        let term = ProbTerm { targets: own(targets), given: own(given), interventions: own(interventions) };
        term.validate()?;
        Ok(term)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Expr("probability term without targets".into()));
        }
        let mut seen = HashSet::new();
        for v in self.vars() {
            if !seen.insert(v) {
                return Err(Error::Expr(format!("`{v}` appears twice in one probability term")));
            }
        }
        Ok(())
    }

    /// Targets, then interventions, then observations.
    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.targets.iter().chain(&self.interventions).chain(&self.given)
    }

    fn sort(&mut self) {
        self.targets.sort();
        self.given.sort();
        self.interventions.sort();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Prob(ProbTerm),
    Sum {
        vars: Vec<String>,
        body: Box<Expr>,
    },
    /// The empty product is the constant 1.
    Product(Vec<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
}

/// The model variable a (possibly fresh) name refers to: `x__2` -> `x`.
pub fn base_name(name: &str) -> &str {
    match name.rfind("__") {
        Some(i) if i > 0 && name.len() > i + 2 && name[i + 2..].bytes().all(|b| b.is_ascii_digit()) => &name[..i],
        _ => name,
    }
}

/// Number of primes a name renders with: `x__2` -> 2.
pub fn prime_count(name: &str) -> usize {
    let base = base_name(name);
    if base.len() == name.len() {
        0
    } else {
        name[base.len() + 2..].parse().unwrap_or(0)
    }
}

pub fn primed(base: &str, k: usize) -> String {
    if k == 0 {
        base.to_string()
    } else {
        format!("{base}__{k}")
    }
}

impl Expr {
    /// Convenience constructor; panics on an invalid term, so use
    /// [`ProbTerm::new`] for untrusted input.
    pub fn p<S: AsRef<str>>(targets: &[S], given: &[S], interventions: &[S]) -> Expr {
        Expr::Prob(ProbTerm::new(targets, given, interventions).expect("valid probability term"))
    }

    /// A sum over no variables is its body.
    pub fn sum<S: AsRef<str>>(vars: &[S], body: Expr) -> Expr {
        if vars.is_empty() {
            return body;
        }
        Expr::Sum { vars: vars.iter().map(|s| s.as_ref().to_string()).collect(), body: Box::new(body) }
    }

    /// A product of one factor is that factor.
    pub fn product(mut factors: Vec<Expr>) -> Expr {
        if factors.len() == 1 {
            return factors.pop().unwrap();
        }
        Expr::Product(factors)
    }

    pub fn quotient(num: Expr, den: Expr) -> Expr {
        Expr::Quotient(Box::new(num), Box::new(den))
    }

    pub fn one() -> Expr {
        Expr::Product(Vec::new())
    }

    /// Variables not bound by an enclosing sum.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Expr::Prob(t) => {
                for v in t.vars() {
                    if !bound.contains(&v.as_str()) {
                        out.insert(v.clone());
                    }
                }
            }
            Expr::Sum { vars, body } => {
                let n = bound.len();
                bound.extend(vars.iter().map(String::as_str));
                body.collect_free(bound, out);
                bound.truncate(n);
            }
            Expr::Product(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Expr::Quotient(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
        }
    }

    /// Every name mentioned anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| out.extend(t.vars().cloned()));
        self.visit_sums(&mut |vs| out.extend(vs.iter().cloned()));
        out
    }

    pub fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a ProbTerm)) {
        match self {
            Expr::Prob(t) => f(t),
            Expr::Sum { body, .. } => body.visit_terms(f),
            Expr::Product(fs) => fs.iter().for_each(|e| e.visit_terms(f)),
            Expr::Quotient(a, b) => {
                a.visit_terms(f);
                b.visit_terms(f);
            }
        }
    }

    fn visit_sums<'a>(&'a self, f: &mut impl FnMut(&'a [String])) {
        match self {
            Expr::Prob(_) => {}
            Expr::Sum { vars, body } => {
                f(vars);
                body.visit_sums(f);
            }
            Expr::Product(fs) => fs.iter().for_each(|e| e.visit_sums(f)),
            Expr::Quotient(a, b) => {
                a.visit_sums(f);
                b.visit_sums(f);
            }
        }
    }

    /// True iff no probability term carries an intervention.
    pub fn is_do_free(&self) -> bool {
        let mut free = true;
        self.visit_terms(&mut |t| free &= t.interventions.is_empty());
        free
    }

    /// Checks term validity and that no sum rebinds a variable already bound
    /// or free in an enclosing scope.
    pub fn validate(&self) -> Result<()> {
        let free = self.free_vars();
        self.validate_scoped(&mut free.iter().cloned().collect())
    }

    fn validate_scoped(&self, scope: &mut Vec<String>) -> Result<()> {
        match self {
            Expr::Prob(t) => t.validate(),
            Expr::Sum { vars, body } => {
                let n = scope.len();
                for v in vars {
                    if scope.contains(v) {
                        return Err(Error::Expr(format!("bound variable `{v}` shadows an outer variable")));
                    }
                    scope.push(v.clone());
                }
                body.validate_scoped(scope)?;
                scope.truncate(n);
                Ok(())
            }
            Expr::Product(fs) => fs.iter().try_for_each(|f| f.validate_scoped(scope)),
            Expr::Quotient(a, b) => {
                a.validate_scoped(scope)?;
                b.validate_scoped(scope)
            }
        }
    }

    /// Canonical form: flattened products, merged nested sums, sorted
    /// variable lists, and bound variables renamed to the smallest fresh
    /// name of their base in order of appearance.
    pub fn canonicalize(&self) -> Expr {
        let mut e = self.flatten();
        let free = e.free_vars();
        let mut taken: Vec<String> = free.into_iter().collect();
        e.rename_bound(&mut taken, &HashMap::new());
        e.sort_sets();
        e
    }

    fn flatten(&self) -> Expr {
        match self {
            Expr::Prob(t) => Expr::Prob(t.clone()),
            Expr::Sum { vars, body } => {
                let body = body.flatten();
                let mut vars = vars.clone();
                let body = match body {
                    Expr::Sum { vars: inner, body } => {
                        vars.extend(inner);
                        *body
                    }
                    b => b,
                };
                Expr::sum(&vars, body)
            }
            Expr::Product(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    match f.flatten() {
                        Expr::Product(inner) => out.extend(inner),
                        g => out.push(g),
                    }
                }
                Expr::product(out)
            }
            Expr::Quotient(a, b) => Expr::quotient(a.flatten(), b.flatten()),
        }
    }

    /// First-appearance order of the names in `vars` inside `self`.
    fn appearance_order(&self, vars: &[String]) -> Vec<String> {
        let mut order: Vec<String> = Vec::new();
        self.visit_terms(&mut |t| {
            for v in t.vars() {
                if vars.contains(v) && !order.contains(v) {
                    order.push(v.clone());
                }
            }
        });
        for v in vars {
            if !order.contains(v) {
                order.push(v.clone());
            }
        }
        order
    }

    fn rename_bound(&mut self, taken: &mut Vec<String>, map: &HashMap<String, String>) {
        match self {
            Expr::Prob(t) => {
                for v in t.targets.iter_mut().chain(&mut t.given).chain(&mut t.interventions) {
                    if let Some(n) = map.get(v) {
                        *v = n.clone();
                    }
                }
            }
            Expr::Sum { vars, body } => {
                let mut inner = map.clone();
                let n = taken.len();
                for v in body.appearance_order(vars) {
                    let base = base_name(&v).to_string();
                    let fresh = (0..).map(|k| primed(&base, k)).find(|c| !taken.contains(c)).unwrap();
                    taken.push(fresh.clone());
                    inner.insert(v, fresh);
                }
                for v in vars.iter_mut() {
                    *v = inner[v.as_str()].clone();
                }
                body.rename_bound(taken, &inner);
                taken.truncate(n);
            }
            Expr::Product(fs) => fs.iter_mut().for_each(|f| f.rename_bound(taken, map)),
            Expr::Quotient(a, b) => {
                a.rename_bound(taken, map);
                b.rename_bound(taken, map);
            }
        }
    }

    fn sort_sets(&mut self) {
        match self {
            Expr::Prob(t) => t.sort(),
            Expr::Sum { vars, body } => {
                vars.sort();
                body.sort_sets();
            }
            Expr::Product(fs) => fs.iter_mut().for_each(Expr::sort_sets),
            Expr::Quotient(a, b) => {
                a.sort_sets();
                b.sort_sets();
            }
        }
    }

    /// Replaces free occurrences of `from` by `to`.
    pub fn substitute(&self, from: &str, to: &str) -> Expr {
        match self {
            Expr::Prob(t) => {
                let mut t = t.clone();
                for v in t.targets.iter_mut().chain(&mut t.given).chain(&mut t.interventions) {
                    if v == from {
                        *v = to.to_string();
                    }
                }
                Expr::Prob(t)
            }
            Expr::Sum { vars, .. } if vars.iter().any(|v| v == from) => self.clone(),
            Expr::Sum { vars, body } => Expr::Sum { vars: vars.clone(), body: Box::new(body.substitute(from, to)) },
            Expr::Product(fs) => Expr::Product(fs.iter().map(|f| f.substitute(from, to)).collect()),
            Expr::Quotient(a, b) => Expr::quotient(a.substitute(from, to), b.substitute(from, to)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_text(self))
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&render_text(self))
    }
}

impl fmt::Display for ProbTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_text(&Expr::Prob(self.clone())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backdoor() -> Expr {
        Expr::sum(&["z"], Expr::product(vec![Expr::p(&["y"], &["x", "z"], &[]), Expr::p(&["z"], &[], &[])]))
    }

    fn frontdoor(z: &str, xp: &str) -> Expr {
        Expr::sum(
            &[z],
            Expr::product(vec![
                Expr::p(&[z], &["x"], &[]),
                Expr::sum(&[xp], Expr::product(vec![Expr::p(&["y"], &[xp, z], &[]), Expr::p(&[xp], &[], &[])])),
            ]),
        )
    }

    #[test]
    fn names() {
        assert_eq!(base_name("x__1"), "x");
        assert_eq!(base_name("x__12"), "x");
        assert_eq!(base_name("x__"), "x__");
        assert_eq!(base_name("__1"), "__1");
        assert_eq!(base_name("my_var"), "my_var");
        assert_eq!(prime_count("x__2"), 2);
        assert_eq!(prime_count("x"), 0);
    }

    #[test]
    fn do_free() {
        assert!(backdoor().is_do_free());
        assert!(frontdoor("z", "x__1").is_do_free());
        assert!(!Expr::p(&["y"], &[], &["x"]).is_do_free());
    }

    #[test]
    fn free_vars() {
        assert_eq!(backdoor().free_vars(), ["x", "y"].iter().map(|s| s.to_string()).collect());
        assert_eq!(frontdoor("z", "x__1").free_vars().len(), 2);
    }

    #[test]
    fn canonical_product_and_sums() {
        let (a, b, c) = (Expr::p(&["a"], &[], &[]), Expr::p(&["b"], &[], &[]), Expr::p(&["c"], &[], &[]));
        let nested = Expr::Product(vec![Expr::Product(vec![a.clone(), b.clone()]), c.clone()]);
        assert_eq!(nested.canonicalize(), Expr::Product(vec![a, b, c]));

        let body = Expr::p(&["w", "z"], &[], &[]);
        let nested = Expr::sum(&["z"], Expr::sum(&["w"], body.clone()));
        assert_eq!(nested.canonicalize(), Expr::sum(&["w", "z"], body));
    }

    #[test]
    fn alpha_equivalent_frontdoor_variants_agree() {
        let a = frontdoor("z", "x__1").canonicalize();
        let b = frontdoor("z__4", "x__3").canonicalize();
        assert_eq!(a, b);
        assert_eq!(a, frontdoor("z", "x__1"));
    }

    #[test]
    fn validation() {
        assert!(ProbTerm::new(&["y"], &["y"], &[]).is_err());
        assert!(ProbTerm::new::<&str>(&[], &[], &[]).is_err());
        let shadow = Expr::product(vec![Expr::p(&["z"], &[], &[]), Expr::sum(&["z"], Expr::p(&["z"], &[], &[]))]);
        assert!(shadow.validate().is_err());
        assert!(frontdoor("z", "x__1").validate().is_ok());
    }
}
