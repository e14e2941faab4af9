use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::{base_name, render_text, Expr, ProbTerm};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::scm::{Assignment, DiscreteModel, JointDistribution, Prob};

type DoKey = Vec<(NodeId, usize)>;
type TableCache<P> = RefCell<HashMap<(DoKey, Vec<NodeId>), Rc<JointDistribution<P>>>>;

/// Evaluates expressions against one model, caching the interventional
/// joints and marginal tables it computes.
pub struct Evaluator<'m, P: Prob> {
    model: &'m DiscreteModel,
    joints: RefCell<HashMap<DoKey, Rc<JointDistribution<P>>>>,
    tables: TableCache<P>,
}

/// One-shot evaluation; see [`Evaluator`] for repeated queries.
pub fn evaluate<P: Prob>(e: &Expr, model: &DiscreteModel, binding: &Assignment) -> Result<P> {
    Evaluator::new(model).eval(e, binding)
}

impl<'m, P: Prob> Evaluator<'m, P> {
    pub fn new(model: &'m DiscreteModel) -> Self {
        Evaluator { model, joints: RefCell::new(HashMap::new()), tables: RefCell::new(HashMap::new()) }
    }

    pub fn model(&self) -> &DiscreteModel {
        self.model
    }

    fn var(&self, name: &str) -> Result<NodeId> {
        self.model.graph().id(base_name(name))
    }

    /// Value of `e` with its free variables set by `binding` (value indices).
    /// Extra bindings are ignored.
    pub fn eval(&self, e: &Expr, binding: &Assignment) -> Result<P> {
        for v in e.all_vars() {
            self.var(&v)?;
        }
        let mut env: HashMap<String, usize> = HashMap::new();
        for (name, value) in binding {
            let id = self.var(name)?;
            if *value >= self.model.domains()[id].len() {
                return Err(Error::Model(format!("value index {value} out of range for {name}")));
            }
            env.insert(name.clone(), *value);
        }
        if let Some(missing) = e.free_vars().into_iter().find(|v| !env.contains_key(v)) {
            return Err(Error::Expr(format!("free variable `{missing}` is not bound")));
        }
        self.go(e, &mut env)
    }

    fn go(&self, e: &Expr, env: &mut HashMap<String, usize>) -> Result<P> {
        match e {
            Expr::Prob(t) => self.term(t, env),
            Expr::Product(fs) => {
                let mut acc = P::one();
                for f in fs {
                    acc = acc * self.go(f, env)?;
                }
                Ok(acc)
            }
            Expr::Quotient(a, b) => {
                let num = self.go(a, env)?;
                let den = self.go(b, env)?;
                if den.is_zero() {
                    return Err(Error::Positivity(format!("denominator {} is 0", render_text(b))));
                }
                Ok(num / den)
            }
            Expr::Sum { vars, body } => {
                let sizes: Vec<usize> =
                    vars.iter().map(|v| self.var(v).map(|id| self.model.domains()[id].len())).collect::<Result<_>>()?;
                let saved: Vec<Option<usize>> = vars.iter().map(|v| env.get(v).copied()).collect();
                let total: usize = sizes.iter().product();
                let mut acc = P::zero();
                for mut cell in 0..total {
                    for (v, &s) in vars.iter().zip(&sizes).rev() {
                        env.insert(v.clone(), cell % s);
                        cell /= s;
                    }
                    acc = acc + self.go(body, env)?;
                }
                for (v, old) in vars.iter().zip(saved) {
                    match old {
                        Some(x) => env.insert(v.clone(), x),
                        None => env.remove(v),
                    };
                }
                Ok(acc)
            }
        }
    }

    fn joint(&self, key: &DoKey) -> Result<Rc<JointDistribution<P>>> {
        if let Some(j) = self.joints.borrow().get(key) {
            return Ok(j.clone());
        }
        let g = self.model.graph();
        let assignment: Assignment = key.iter().map(|&(v, x)| (g.name(v).to_string(), x)).collect();
        let j = Rc::new(self.model.intervene(&assignment)?.joint::<P>()?);
        self.joints.borrow_mut().insert(key.clone(), j.clone());
        Ok(j)
    }

    fn table(&self, key: &DoKey, vars: &[NodeId]) -> Result<Rc<JointDistribution<P>>> {
        let k = (key.clone(), vars.to_vec());
        if let Some(t) = self.tables.borrow().get(&k) {
            return Ok(t.clone());
        }
        let g = self.model.graph();
        let names: Vec<&str> = vars.iter().map(|&v| g.name(v)).collect();
        let t = Rc::new(self.joint(key)?.marginal(&names)?);
        self.tables.borrow_mut().insert(k, t.clone());
        Ok(t)
    }

    fn resolve(&self, names: &[String], env: &HashMap<String, usize>, t: &ProbTerm) -> Result<Vec<(NodeId, usize)>> {
        let mut out: Vec<(NodeId, usize)> = Vec::with_capacity(names.len());
        for n in names {
            let id = self.var(n)?;
            let val = *env.get(n).ok_or_else(|| Error::Expr(format!("variable `{n}` of {t} is not bound")))?;
            if out.iter().any(|&(o, _)| o == id) {
                return Err(Error::Expr(format!("{t} refers to {} twice", base_name(n))));
            }
            out.push((id, val));
        }
        out.sort_unstable();
        Ok(out)
    }

    fn term(&self, t: &ProbTerm, env: &HashMap<String, usize>) -> Result<P> {
        let key = self.resolve(&t.interventions, env, t)?;
        let given = self.resolve(&t.given, env, t)?;
        let mut all = self.resolve(&t.targets, env, t)?;
        all.extend(&given);
        all.sort_unstable();
        if all.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Expr(format!("{t} refers to one variable twice")));
        }
        let ids: Vec<NodeId> = all.iter().map(|&(v, _)| v).collect();
        let vals: Vec<usize> = all.iter().map(|&(_, x)| x).collect();
        let num = self.table(&key, &ids)?.get(&vals).clone();
        if given.is_empty() {
            return Ok(num);
        }
        let gids: Vec<NodeId> = given.iter().map(|&(v, _)| v).collect();
        let gvals: Vec<usize> = given.iter().map(|&(_, x)| x).collect();
        let den = self.table(&key, &gids)?.get(&gvals).clone();
        if den.is_zero() {
            let g = self.model.graph();
            let event: Vec<String> =
                given.iter().map(|&(v, x)| format!("{}={}", g.name(v), self.model.domains()[v][x])).collect();
            let cond = if key.is_empty() {
                String::new()
            } else {
                let d: Vec<String> =
                    key.iter().map(|&(v, x)| format!("{}={}", g.name(v), self.model.domains()[v][x])).collect();
                format!("|do({})", d.join(","))
            };
            return Err(Error::Positivity(format!("p({}{cond}) = 0 in term {t}", event.join(","))));
        }
        Ok(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::scm::{parse_model, ratio, Rational};

    const CONFOUNDER: &str = "\
var z
var x
var y
edge z -> x
edge z -> y
edge x -> y
cpt z : 1/2 1/2
cpt x | z=0 : 3/4 1/4
cpt x | z=1 : 1/4 3/4
cpt y | z=0,x=0 : 9/10 1/10
cpt y | z=0,x=1 : 1/2 1/2
cpt y | z=1,x=0 : 7/10 3/10
cpt y | z=1,x=1 : 1/10 9/10
";

    fn bind(pairs: &[(&str, usize)]) -> Assignment {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn coin() {
        let m = parse_model("var y\ncpt y : 1/2 1/2\n").unwrap();
        let v: Rational = evaluate(&parse_expr("p(y)").unwrap(), &m, &bind(&[("y", 1)])).unwrap();
        assert_eq!(v, ratio(1, 2));
    }

    #[test]
    fn adjustment_formula_gives_seven_tenths() {
        let m = parse_model(CONFOUNDER).unwrap();
        let b = bind(&[("x", 1), ("y", 1)]);
        let adj: Rational = evaluate(&parse_expr("sum_z p(y|x,z) p(z)").unwrap(), &m, &b).unwrap();
        assert_eq!(adj, ratio(7, 10));
        let oracle: Rational = evaluate(&parse_expr("p(y|do(x))").unwrap(), &m, &b).unwrap();
        assert_eq!(oracle, ratio(7, 10));
        let naive: Rational = evaluate(&parse_expr("p(y|x)").unwrap(), &m, &b).unwrap();
        assert_ne!(naive, ratio(7, 10));
    }

    #[test]
    fn quotient_is_conditional() {
        let m = parse_model(CONFOUNDER).unwrap();
        let ev = Evaluator::<Rational>::new(&m);
        for y in 0..2 {
            for z in 0..2 {
                let b = bind(&[("y", y), ("z", z)]);
                let q = ev.eval(&parse_expr("p(y,z)/p(z)").unwrap(), &b).unwrap();
                let c = ev.eval(&parse_expr("p(y|z)").unwrap(), &b).unwrap();
                assert_eq!(q, c);
            }
        }
    }

    #[test]
    fn positivity_names_the_term() {
        let m = parse_model("var w\nvar y\nedge w -> y\ncpt w : 1 0\ncpt y | w=0 : 1/2 1/2\ncpt y | w=1 : 1/2 1/2\n")
            .unwrap();
        let err = evaluate::<Rational>(&parse_expr("p(y|w)").unwrap(), &m, &bind(&[("y", 0), ("w", 1)])).unwrap_err();
        assert_eq!(err, Error::Positivity("p(w=1) = 0 in term p(y|w)".into()));
    }

    #[test]
    fn unbound_and_unknown() {
        let m = parse_model(CONFOUNDER).unwrap();
        assert!(evaluate::<Rational>(&parse_expr("p(y)").unwrap(), &m, &vec![]).is_err());
        assert!(evaluate::<Rational>(&parse_expr("p(q)").unwrap(), &m, &bind(&[("y", 0)])).is_err());
    }
}
