//! Text format for discrete models: the graph DSL plus `domain` and `cpt`
//! lines.
//!
//! ```text
//! var Z
//! var X
//! edge Z -> X
//! domain X lo hi          # values default to 0 1
//! cpt Z : 1/2 1/2
//! cpt X | Z=0 : 3/4 1/4
//! cpt X | Z=1 : 1/4 3/4
//! ```

use std::collections::HashMap;

use super::{fmt_rational, parse_rational, DiscreteModel, Mechanism, Rational};
use crate::error::{Error, Result};
use crate::graph::dsl::{parse_document, to_dsl};
use crate::graph::valid_name;

fn default_domain() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

pub fn parse_model(text: &str) -> Result<DiscreteModel> {
    let (graph, extras) = parse_document(text)?;
    let n = graph.len();
    let mut domains: Vec<Option<Vec<String>>> = vec![None; n];
    for ex in extras.iter().filter(|e| e.keyword == "domain") {
        let toks: Vec<&str> = ex.rest.split_whitespace().collect();
        let Some((&name, values)) = toks.split_first() else {
            return Err(Error::parse(ex.line, "domain", "expected `domain <var> <values...>`"));
        };
        let id = graph.id(name).map_err(|_| Error::parse(ex.line, name, "unknown variable"))?;
        if domains[id].is_some() {
            return Err(Error::parse(ex.line, name, "domain declared twice"));
        }
        if values.len() < 2 {
            return Err(Error::parse(ex.line, name, "a domain needs at least two values"));
        }
        for (k, v) in values.iter().enumerate() {
            if !valid_name(v) && v.parse::<u64>().is_err() {
                return Err(Error::parse(ex.line, *v, "invalid domain value"));
            }
            if values[..k].contains(v) {
                return Err(Error::parse(ex.line, *v, "repeated domain value"));
            }
        }
        domains[id] = Some(values.iter().map(|s| s.to_string()).collect());
    }
    let domains: Vec<Vec<String>> = domains.into_iter().map(|d| d.unwrap_or_else(default_domain)).collect();

    // child -> parent assignment -> (line, row)
    let mut rows: Vec<HashMap<usize, (usize, Vec<Rational>)>> = vec![HashMap::new(); n];
    for ex in extras.iter().filter(|e| e.keyword == "cpt") {
        let (head, probs) = ex
            .rest
            .split_once(':')
            .ok_or_else(|| Error::parse(ex.line, "cpt", "expected `:` before the probabilities"))?;
        let (child, cond) = match head.split_once('|') {
            Some((c, rest)) => (c.trim(), rest.trim()),
            None => (head.trim(), ""),
        };
        let c = graph.id(child).map_err(|_| Error::parse(ex.line, child, "unknown variable"))?;
        let parents = graph.parents(c);
        let mut values: Vec<Option<usize>> = vec![None; parents.len()];
        for part in cond.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (p, v) =
                part.split_once('=').ok_or_else(|| Error::parse(ex.line, part, "expected `<parent>=<value>`"))?;
            let (p, v) = (p.trim(), v.trim());
            let pid = graph.id(p).map_err(|_| Error::parse(ex.line, p, "unknown variable"))?;
            let slot = parents
                .iter()
                .position(|&q| q == pid)
                .ok_or_else(|| Error::parse(ex.line, p, format!("not a parent of {child}")))?;
            if values[slot].is_some() {
                return Err(Error::parse(ex.line, p, "parent assigned twice"));
            }
            let vi = domains[pid]
                .iter()
                .position(|d| d == v)
                .ok_or_else(|| Error::parse(ex.line, v, format!("not in the domain of {p}")))?;
            values[slot] = Some(vi);
        }
        if let Some(k) = values.iter().position(Option::is_none) {
            return Err(Error::parse(ex.line, graph.name(parents[k]), "parent value missing"));
        }
        let row: Vec<Rational> = probs
            .split_whitespace()
            .map(|t| parse_rational(t).map_err(|_| Error::parse(ex.line, t, "invalid probability")))
            .collect::<Result<_>>()?;
        if row.len() != domains[c].len() {
            return Err(Error::parse(
                ex.line,
                child,
                format!("expected {} probabilities, found {}", domains[c].len(), row.len()),
            ));
        }
        let index = parents.iter().zip(&values).fold(0, |acc, (&p, v)| acc * domains[p].len() + v.unwrap());
        if let Some((prev, _)) = rows[c].insert(index, (ex.line, row)) {
            return Err(Error::parse(ex.line, child, format!("row already given on line {prev}")));
        }
    }

    let mut mechanisms = Vec::with_capacity(n);
    for (c, mut table) in rows.into_iter().enumerate() {
        let parents = graph.parents(c);
        let count: usize = parents.iter().map(|&p| domains[p].len()).product();
        let mut out = Vec::with_capacity(count);
        for r in 0..count {
            match table.remove(&r) {
                Some((_, row)) => out.push(row),
                None => {
                    return Err(Error::Model(format!(
                        "missing cpt row for {}{}",
                        graph.name(c),
                        describe_row(&graph, &domains, c, r)
                    )))
                }
            }
        }
        mechanisms.push(Mechanism {
            child: graph.name(c).to_string(),
            parents: parents.iter().map(|&p| graph.name(p).to_string()).collect(),
            rows: out,
        });
    }
    DiscreteModel::new(graph, domains, mechanisms)
}

fn describe_row(g: &crate::CausalGraph, domains: &[Vec<String>], c: usize, mut r: usize) -> String {
    let parents = g.parents(c);
    if parents.is_empty() {
        return String::new();
    }
    let mut parts = vec![String::new(); parents.len()];
    for (k, &p) in parents.iter().enumerate().rev() {
        let d = domains[p].len();
        parts[k] = format!("{}={}", g.name(p), domains[p][r % d]);
        r /= d;
    }
    format!(" | {}", parts.join(","))
}

/// Inverse of [`parse_model`].
pub fn to_model_dsl(m: &DiscreteModel) -> String {
    let g = m.graph();
    let mut out = to_dsl(g);
    for (v, d) in m.domains().iter().enumerate() {
        if *d != default_domain() {
            out.push_str(&format!("domain {} {}\n", g.name(v), d.join(" ")));
        }
    }
    for (c, mech) in m.mechanisms().iter().enumerate() {
        for (r, row) in mech.rows.iter().enumerate() {
            let probs: Vec<String> = row.iter().map(fmt_rational).collect();
            out.push_str(&format!("cpt {}{} : {}\n", g.name(c), describe_row(g, m.domains(), c, r), probs.join(" ")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::ratio;

    const CONFOUNDER: &str = "\
var Z
var X
var Y
edge Z -> X
edge Z -> Y
edge X -> Y
cpt Z : 1/2 1/2
cpt X | Z=0 : 3/4 1/4
cpt X | Z=1 : 1/4 3/4
cpt Y | X=0, Z=0 : 0.9 0.1
cpt Y | Z=0, X=1 : 1/2 1/2
cpt Y | Z=1,X=0 : 7/10 3/10
cpt Y | Z=1,X=1 : 1/10 9/10
";

    #[test]
    fn parses_and_round_trips() {
        let m = parse_model(CONFOUNDER).unwrap();
        let d = m.do_marginal::<Rational, _>(&vec![("X".into(), 1)], &["Y"]).unwrap();
        assert_eq!(d.get(&[1]), &ratio(7, 10));
        let text = to_model_dsl(&m);
        assert_eq!(parse_model(&text).unwrap(), m);
        assert!(text.contains("cpt Y | Z=1,X=0 : 7/10 3/10\n"));
    }

    #[test]
    fn named_domains() {
        let m = parse_model("var A\ndomain A lo mid hi\ncpt A : 1/3 1/3 1/3\n").unwrap();
        assert_eq!(m.domain("A").unwrap(), &["lo", "mid", "hi"]);
        assert!(to_model_dsl(&m).contains("domain A lo mid hi\n"));
    }

    #[test]
    fn errors() {
        let missing = CONFOUNDER.replace("cpt X | Z=1 : 1/4 3/4\n", "");
        assert_eq!(parse_model(&missing).unwrap_err(), Error::Model("missing cpt row for X | Z=1".into()));
        let bad_sum = CONFOUNDER.replace("cpt Z : 1/2 1/2", "cpt Z : 1/2 1/3");
        assert!(matches!(parse_model(&bad_sum), Err(Error::Model(_))));
        let not_parent = CONFOUNDER.replace("cpt X | Z=0", "cpt X | Y=0");
        assert!(matches!(parse_model(&not_parent), Err(Error::Parse { line: 8, .. })));
        let bad_value = CONFOUNDER.replace("cpt X | Z=0", "cpt X | Z=2");
        assert!(matches!(parse_model(&bad_value), Err(Error::Parse { line: 8, .. })));
        let dup = format!("{CONFOUNDER}cpt Z : 1/2 1/2\n");
        assert!(matches!(parse_model(&dup), Err(Error::Parse { line: 14, .. })));
    }
}
