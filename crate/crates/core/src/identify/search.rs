//! Bounded derivation search over `p(y | do(x), w)` terms.
//!
//! A term is solved once its intervention set is empty. Every other term is
//! rewritten by one primitive step (a guarded rule, a marginalization, a
//! chain-rule split or the definition of a conditional), whose child terms
//! are solved recursively. The back-door and front-door shortcuts are
//! prebuilt chains of primitive steps, so their cost is their length.
//!
//! `solve(t, b)` returns a cheapest solution of cost at most `b`. It depends
//! on nothing but `(t, b)`, which makes the memo table exact.

use std::collections::HashMap;
use std::rc::Rc;

use serde::Serialize;

use super::criteria::{find_backdoor_sets, find_frontdoor_sets};
use super::rules::{rule1_guard, rule2_guard, rule3_guard, Guard};
use crate::error::{Error, Result};
use crate::expr::{Expr, ProbTerm};
use crate::graph::{CausalGraph, NodeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleTag {
    Rule1,
    Rule2,
    Rule3,
    Marginalize,
    Chain,
    Quotient,
}

impl RuleTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleTag::Rule1 => "rule1",
            RuleTag::Rule2 => "rule2",
            RuleTag::Rule3 => "rule3",
            RuleTag::Marginalize => "marginalize",
            RuleTag::Chain => "chain",
            RuleTag::Quotient => "quotient",
        }
    }
}

/// `p(y | do(x), w)` over observed variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub y: NodeSet,
    pub x: NodeSet,
    pub w: NodeSet,
}

fn union(a: &NodeSet, b: &NodeSet) -> NodeSet {
    a.union(b).copied().collect()
}

fn minus(a: &NodeSet, b: &NodeSet) -> NodeSet {
    a.difference(b).copied().collect()
}

impl Term {
    pub fn new(y: NodeSet, x: NodeSet, w: NodeSet) -> Term {
        Term { y, x, w }
    }

    pub fn leaf(&self, g: &CausalGraph) -> Expr {
        Expr::p(&g.names(&self.y), &g.names(&self.w), &g.names(&self.x))
    }
}

#[derive(Debug, Clone)]
enum Move {
    /// Drop these observations.
    Rule1(NodeSet),
    /// Drop these interventions.
    Rule2(NodeSet),
    /// Turn these interventions into observations.
    Rule3(NodeSet),
    /// Turn these observations into interventions.
    Rule3Rev(NodeSet),
    /// `p(y|.) = sum_v p(y,v|.)`.
    Marg(NodeSet),
    /// `p(a,b|.) = p(a|b,.) p(b|.)` with the given head `a`.
    Chain(NodeSet),
    /// `p(y|w,.) = p(y,w|.) / p(w|.)`.
    Quotient,
}

#[derive(Debug)]
struct Applied {
    tag: RuleTag,
    guard: Option<Guard>,
    template: Expr,
    children: Vec<Term>,
}

/// One rewrite in a solution tree.
#[derive(Debug)]
pub struct SolStep {
    pub rule: RuleTag,
    pub guard: Option<Guard>,
    /// The rewritten form of the term, with each child as a leaf.
    pub template: Expr,
    pub children: Vec<Rc<Solution>>,
}

#[derive(Debug)]
pub struct Solution {
    pub term: Term,
    pub cost: u32,
    /// `None` for a term without interventions.
    pub step: Option<SolStep>,
}

#[derive(Default)]
struct Memo {
    best: Option<Rc<Solution>>,
    /// No solution costs this much or less.
    failed: Option<u32>,
}

fn subsets(s: &NodeSet) -> Vec<NodeSet> {
    let items: Vec<usize> = s.iter().copied().collect();
    let mut out: Vec<NodeSet> = (1u64..1 << items.len())
        .map(|m| items.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &v)| v).collect())
        .collect();
    out.sort_by(|a: &NodeSet, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out
}

/// Subsets of `y` above this size are not split by the chain rule.
const CHAIN_LIMIT: usize = 8;

pub struct Search<'g> {
    g: &'g CausalGraph,
    memo: HashMap<Term, Memo>,
    moves: HashMap<Term, Rc<Vec<Applied>>>,
    macros: HashMap<Term, Rc<Vec<Rc<Solution>>>>,
    expansions: u64,
}

impl<'g> Search<'g> {
    pub fn new(g: &'g CausalGraph) -> Self {
        Search { g, memo: HashMap::new(), moves: HashMap::new(), macros: HashMap::new(), expansions: 0 }
    }

    /// Number of (term, budget) pairs expanded so far.
    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    fn base(&self, t: Term) -> Rc<Solution> {
        debug_assert!(t.x.is_empty());
        Rc::new(Solution { term: t, cost: 0, step: None })
    }

    fn apply(&self, t: &Term, mv: &Move) -> Result<Option<Applied>> {
        let g = self.g;
        let rewrite = |tag, guard: Guard, child: Term| {
            Ok(guard.holds.then(|| Applied { tag, guard: Some(guard), template: child.leaf(g), children: vec![child] }))
        };
        match mv {
            Move::Rule1(s) => {
                let w = minus(&t.w, s);
                let guard = rule1_guard(g, &t.x, &t.y, s, &w)?;
                rewrite(RuleTag::Rule1, guard, Term::new(t.y.clone(), t.x.clone(), w))
            }
            Move::Rule2(s) => {
                let x = minus(&t.x, s);
                let guard = rule2_guard(g, &x, &t.y, s, &t.w)?;
                rewrite(RuleTag::Rule2, guard, Term::new(t.y.clone(), x, t.w.clone()))
            }
            Move::Rule3(s) => {
                let x = minus(&t.x, s);
                let guard = rule3_guard(g, &x, &t.y, s, &t.w)?;
                rewrite(RuleTag::Rule3, guard, Term::new(t.y.clone(), x, union(&t.w, s)))
            }
            Move::Rule3Rev(s) => {
                let w = minus(&t.w, s);
                let guard = rule3_guard(g, &t.x, &t.y, s, &w)?;
                rewrite(RuleTag::Rule3, guard, Term::new(t.y.clone(), union(&t.x, s), w))
            }
            Move::Marg(v) => {
                let child = Term::new(union(&t.y, v), t.x.clone(), t.w.clone());
                Ok(Some(Applied {
                    tag: RuleTag::Marginalize,
                    guard: None,
                    template: Expr::sum(&g.names(v), child.leaf(g)),
                    children: vec![child],
                }))
            }
            Move::Chain(a) => {
                let b = minus(&t.y, a);
                let head = Term::new(a.clone(), t.x.clone(), union(&t.w, &b));
                let tail = Term::new(b, t.x.clone(), t.w.clone());
                Ok(Some(Applied {
                    tag: RuleTag::Chain,
                    guard: None,
                    template: Expr::product(vec![head.leaf(g), tail.leaf(g)]),
                    children: vec![head, tail],
                }))
            }
            Move::Quotient => {
                let num = Term::new(union(&t.y, &t.w), t.x.clone(), NodeSet::new());
                let den = Term::new(t.w.clone(), t.x.clone(), NodeSet::new());
                Ok(Some(Applied {
                    tag: RuleTag::Quotient,
                    guard: None,
                    template: Expr::quotient(num.leaf(g), den.leaf(g)),
                    children: vec![num, den],
                }))
            }
        }
    }

    fn moves(&mut self, t: &Term) -> Result<Rc<Vec<Applied>>> {
        if let Some(m) = self.moves.get(t) {
            return Ok(m.clone());
        }
        let g = self.g;
        let mut list = Vec::new();
        for s in subsets(&t.x) {
            list.push(Move::Rule2(s.clone()));
            list.push(Move::Rule3(s));
        }
        for s in subsets(&t.w) {
            list.push(Move::Rule1(s));
        }
        let mentioned = union(&union(&t.y, &t.x), &t.w);
        let relevant = union(&g.ancestors(&mentioned), &mentioned);
        for v in g.observed() {
            if relevant.contains(&v) && !mentioned.contains(&v) {
                list.push(Move::Marg(NodeSet::from([v])));
            }
        }
        if t.y.len() >= 2 && t.y.len() <= CHAIN_LIMIT {
            for a in subsets(&t.y) {
                if a.len() < t.y.len() {
                    list.push(Move::Chain(a));
                }
            }
        }
        for s in subsets(&t.w) {
            list.push(Move::Rule3Rev(s));
        }
        if !t.w.is_empty() {
            list.push(Move::Quotient);
        }
        let mut applied = Vec::new();
        for mv in &list {
            if let Some(a) = self.apply(t, mv)? {
                applied.push(a);
            }
        }
        let applied = Rc::new(applied);
        self.moves.insert(t.clone(), applied.clone());
        Ok(applied)
    }

    fn node(&self, t: &Term, mv: Move, children: Vec<Rc<Solution>>) -> Result<Option<Rc<Solution>>> {
        let Some(a) = self.apply(t, &mv)? else {
            return Ok(None);
        };
        if a.children.len() != children.len() || a.children.iter().zip(&children).any(|(c, s)| c != &s.term) {
            return Err(Error::Internal(format!("shortcut step does not fit {}", t.leaf(self.g))));
        }
        Ok(Some(Rc::new(Solution {
            term: t.clone(),
            cost: 1 + children.iter().map(|c| c.cost).sum::<u32>(),
            step: Some(SolStep { rule: a.tag, guard: a.guard, template: a.template, children }),
        })))
    }

    fn backdoor(&self, t: &Term) -> Result<Option<Rc<Solution>>> {
        let z = match find_backdoor_sets(self.g, &t.x, &t.y) {
            Ok(sets) => match sets.into_iter().next() {
                Some(z) => z,
                None => return Ok(None),
            },
            Err(Error::ScaleGuard { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let e = NodeSet::new();
        if z.is_empty() {
            let leaf = self.base(Term::new(t.y.clone(), e.clone(), t.x.clone()));
            return self.node(t, Move::Rule3(t.x.clone()), vec![leaf]);
        }
        let joint = Term::new(union(&t.y, &z), t.x.clone(), e.clone());
        let head = Term::new(t.y.clone(), t.x.clone(), z.clone());
        let tail = Term::new(z.clone(), t.x.clone(), e.clone());
        let Some(h) = self.node(
            &head,
            Move::Rule3(t.x.clone()),
            vec![self.base(Term::new(t.y.clone(), e.clone(), union(&t.x, &z)))],
        )?
        else {
            return Ok(None);
        };
        let Some(tl) =
            self.node(&tail, Move::Rule2(t.x.clone()), vec![self.base(Term::new(z.clone(), e.clone(), e.clone()))])?
        else {
            return Ok(None);
        };
        let Some(ch) = self.node(&joint, Move::Chain(t.y.clone()), vec![h, tl])? else {
            return Ok(None);
        };
        self.node(t, Move::Marg(z), vec![ch])
    }

    fn frontdoor(&self, t: &Term) -> Result<Option<Rc<Solution>>> {
        let z = match find_frontdoor_sets(self.g, &t.x, &t.y) {
            Ok(sets) => match sets.into_iter().next() {
                Some(z) => z,
                None => return Ok(None),
            },
            Err(Error::ScaleGuard { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let (x, y, e) = (&t.x, &t.y, NodeSet::new());
        let steps = || -> Result<Option<Rc<Solution>>> {
            // p(y|do(z)) = sum_x p(y|x,do(z)) p(x|do(z)) = sum_x p(y|x,z) p(x)
            let yx_z = Term::new(union(y, x), z.clone(), e.clone());
            let y_xz = Term::new(y.clone(), z.clone(), x.clone());
            let x_z = Term::new(x.clone(), z.clone(), e.clone());
            let a = self.node(
                &y_xz,
                Move::Rule3(z.clone()),
                vec![self.base(Term::new(y.clone(), e.clone(), union(x, &z)))],
            )?;
            let b =
                self.node(&x_z, Move::Rule2(z.clone()), vec![self.base(Term::new(x.clone(), e.clone(), e.clone()))])?;
            let (Some(a), Some(b)) = (a, b) else { return Ok(None) };
            let Some(c) = self.node(&yx_z, Move::Chain(y.clone()), vec![a, b])? else { return Ok(None) };
            let y_doz = Term::new(y.clone(), z.clone(), e.clone());
            let Some(d) = self.node(&y_doz, Move::Marg(x.clone()), vec![c])? else { return Ok(None) };
            // p(y|z,do(x)) = p(y|do(z),do(x)) = p(y|do(z))
            let y_zx = Term::new(y.clone(), union(x, &z), e.clone());
            let Some(f) = self.node(&y_zx, Move::Rule2(x.clone()), vec![d])? else { return Ok(None) };
            let y_z_dox = Term::new(y.clone(), x.clone(), z.clone());
            let Some(h) = self.node(&y_z_dox, Move::Rule3Rev(z.clone()), vec![f])? else { return Ok(None) };
            // p(z|do(x)) = p(z|x)
            let z_dox = Term::new(z.clone(), x.clone(), e.clone());
            let Some(k) =
                self.node(&z_dox, Move::Rule3(x.clone()), vec![self.base(Term::new(z.clone(), e.clone(), x.clone()))])?
            else {
                return Ok(None);
            };
            let yz = Term::new(union(y, &z), x.clone(), e.clone());
            let Some(m) = self.node(&yz, Move::Chain(y.clone()), vec![h, k])? else { return Ok(None) };
            self.node(t, Move::Marg(z.clone()), vec![m])
        };
        steps()
    }

    fn shortcuts(&mut self, t: &Term) -> Result<Rc<Vec<Rc<Solution>>>> {
        if let Some(m) = self.macros.get(t) {
            return Ok(m.clone());
        }
        let mut out = Vec::new();
        if t.w.is_empty() {
            out.extend(self.backdoor(t)?);
            out.extend(self.frontdoor(t)?);
        }
        let out = Rc::new(out);
        self.macros.insert(t.clone(), out.clone());
        Ok(out)
    }

    /// A cheapest solution of `t` costing at most `budget`.
    pub fn solve(&mut self, t: &Term, budget: u32) -> Result<Option<Rc<Solution>>> {
        if t.x.is_empty() {
            return Ok(Some(self.base(t.clone())));
        }
        if let Some(m) = self.memo.get(t) {
            if let Some(s) = &m.best {
                return Ok((s.cost <= budget).then(|| s.clone()));
            }
            if m.failed.is_some_and(|f| f >= budget) {
                return Ok(None);
            }
        }
        if budget == 0 {
            return Ok(None);
        }
        self.expansions += 1;
        let mut best: Option<Rc<Solution>> = None;
        let limit = |best: &Option<Rc<Solution>>| best.as_ref().map_or(budget, |s| s.cost - 1);
        for s in self.shortcuts(t)?.iter() {
            if s.cost <= limit(&best) {
                best = Some(s.clone());
            }
        }
        let moves = self.moves(t)?;
        for a in moves.iter() {
            let cap = limit(&best);
            if cap == 0 {
                break;
            }
            let mut left = cap - 1;
            let mut kids = Vec::with_capacity(a.children.len());
            for c in &a.children {
                match self.solve(c, left)? {
                    Some(s) => {
                        left -= s.cost;
                        kids.push(s);
                    }
                    None => break,
                }
            }
            if kids.len() == a.children.len() {
                best = Some(Rc::new(Solution {
                    term: t.clone(),
                    cost: cap - left,
                    step: Some(SolStep {
                        rule: a.tag,
                        guard: a.guard.clone(),
                        template: a.template.clone(),
                        children: kids,
                    }),
                }));
            }
        }
        let entry = self.memo.entry(t.clone()).or_default();
        match &best {
            Some(s) => entry.best = Some(s.clone()),
            None => entry.failed = Some(entry.failed.map_or(budget, |f| f.max(budget))),
        }
        Ok(best)
    }
}

/// One rewrite of the running expression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivationStep {
    pub rule: RuleTag,
    pub guard: Option<Guard>,
    pub before: Expr,
    pub after: Expr,
}

/// Display form: non-sum factors first within each product, then canonical.
pub fn tidy(e: &Expr) -> Expr {
    fn order(e: &Expr) -> Expr {
        match e {
            Expr::Prob(_) => e.clone(),
            Expr::Sum { vars, body } => Expr::sum(vars, order(body)),
            Expr::Product(fs) => {
                let fs: Vec<Expr> = fs.iter().map(order).collect();
                let (mut plain, sums): (Vec<Expr>, Vec<Expr>) =
                    fs.into_iter().partition(|f| !matches!(f, Expr::Sum { .. }));
                plain.extend(sums);
                Expr::product(plain)
            }
            Expr::Quotient(a, b) => Expr::quotient(order(a), order(b)),
        }
    }
    order(&e.canonicalize()).canonicalize()
}

fn replace_leaf(e: &Expr, target: &ProbTerm, with: &Expr, done: &mut bool) -> Expr {
    if *done {
        return e.clone();
    }
    match e {
        Expr::Prob(t) if t == target => {
            *done = true;
            with.clone()
        }
        Expr::Prob(_) => e.clone(),
        Expr::Sum { vars, body } => {
            Expr::Sum { vars: vars.clone(), body: Box::new(replace_leaf(body, target, with, done)) }
        }
        Expr::Product(fs) => Expr::Product(fs.iter().map(|f| replace_leaf(f, target, with, done)).collect()),
        Expr::Quotient(a, b) => {
            let a = replace_leaf(a, target, with, done);
            let b = replace_leaf(b, target, with, done);
            Expr::quotient(a, b)
        }
    }
}

/// Replays a solution as a sequence of whole-expression rewrites and returns
/// the final formula with the steps. Later factors are rewritten first.
pub fn replay(g: &CausalGraph, root: &Solution) -> Result<(Expr, Vec<DerivationStep>)> {
    fn go(g: &CausalGraph, s: &Solution, cur: &mut Expr, steps: &mut Vec<DerivationStep>) -> Result<()> {
        let Some(step) = &s.step else { return Ok(()) };
        let Expr::Prob(target) = s.term.leaf(g) else { unreachable!() };
        let mut done = false;
        let next = replace_leaf(cur, &target, &step.template, &mut done);
        if !done {
            return Err(Error::Internal(format!("derivation lost the term {target}")));
        }
        steps.push(DerivationStep {
            rule: step.rule,
            guard: step.guard.clone(),
            before: tidy(cur),
            after: tidy(&next),
        });
        *cur = next;
        for c in step.children.iter().rev() {
            go(g, c, cur, steps)?;
        }
        Ok(())
    }
    let mut cur = root.term.leaf(g);
    let mut steps = Vec::new();
    go(g, root, &mut cur, &mut steps)?;
    Ok((tidy(&cur), steps))
}
