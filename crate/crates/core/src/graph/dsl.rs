//! Line-oriented graph DSL and its JSON mirror.
//!
//! ```text
//! # front-door graph
//! var X
//! var Z
//! var Y
//! var U latent
//! edge U -> X
//! edge U -> Y
//! edge X -> Z -> Y
//! arc A <-> B        # expands into a fresh latent parent of A and B
//! ```

use serde::{Deserialize, Serialize};

use super::{valid_name, CausalGraph, GraphBuilder, Observability};
use crate::error::{Error, Result};

/// A non-graph directive (`domain`, `cpt`) kept for the model parser.
#[derive(Debug, Clone)]
pub(crate) struct ExtraLine {
    pub line: usize,
    pub keyword: String,
    pub rest: String,
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub(crate) fn parse_document(text: &str) -> Result<(CausalGraph, Vec<ExtraLine>)> {
    let mut builder = GraphBuilder::new();
    let mut declared: Vec<String> = Vec::new();
    let mut refs: Vec<(usize, String)> = Vec::new();
    let mut extras = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let keyword = toks.next().unwrap_or_default();
        let rest: Vec<&str> = toks.collect();
        match keyword {
            "var" => {
                let name = *rest.first().ok_or_else(|| Error::parse(line_no, keyword, "expected a variable name"))?;
                if !valid_name(name) {
                    return Err(Error::parse(line_no, name, "invalid variable name"));
                }
                if declared.iter().any(|d| d == name) {
                    return Err(Error::parse(line_no, name, "duplicate variable"));
                }
                let obs = match rest.get(1).copied() {
                    None | Some("observed") => Observability::Observed,
                    Some("latent") => Observability::Latent,
                    Some(other) => return Err(Error::parse(line_no, other, "expected `latent` or `observed`")),
                };
                if let Some(extra) = rest.get(2) {
                    return Err(Error::parse(line_no, *extra, "unexpected token"));
                }
                builder.add_var(name, obs);
                declared.push(name.to_string());
            }
            "edge" => {
                // edge A -> B [-> C ...]
                if rest.len() < 3 || rest.len().is_multiple_of(2) {
                    let tok = rest.last().copied().unwrap_or(keyword);
                    return Err(Error::parse(line_no, tok, "expected `edge <tail> -> <head>`"));
                }
                for (k, tok) in rest.iter().enumerate() {
                    if k % 2 == 1 && *tok != "->" {
                        return Err(Error::parse(line_no, *tok, "expected `->`"));
                    }
                    if k % 2 == 0 {
                        refs.push((line_no, tok.to_string()));
                    }
                }
                for w in rest.chunks(2).collect::<Vec<_>>().windows(2) {
                    builder.add_edge(w[0][0], w[1][0]);
                }
            }
            "arc" => {
                if rest.len() != 3 || rest[1] != "<->" {
                    let tok = rest.get(1).copied().unwrap_or(keyword);
                    return Err(Error::parse(line_no, tok, "expected `arc <a> <-> <b>`"));
                }
                refs.push((line_no, rest[0].to_string()));
                refs.push((line_no, rest[2].to_string()));
                builder.add_arc(rest[0], rest[2]);
            }
            "domain" | "cpt" => extras.push(ExtraLine {
                line: line_no,
                keyword: keyword.to_string(),
                rest: line[keyword.len()..].trim().to_string(),
            }),
            other => return Err(Error::parse(line_no, other, "unknown directive")),
        }
    }
    for (line, name) in &refs {
        if !declared.iter().any(|d| d == name) {
            return Err(Error::parse(*line, name.clone(), "unknown variable"));
        }
    }
    Ok((builder.build()?, extras))
}

/// Parses the graph DSL; `domain` and `cpt` lines of a model file are skipped.
pub fn parse_graph(text: &str) -> Result<CausalGraph> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return parse_graph_json(trimmed);
    }
    parse_document(text).map(|(g, _)| g)
}

pub fn to_dsl(g: &CausalGraph) -> String {
    let mut out = String::new();
    for v in g.variables() {
        out.push_str("var ");
        out.push_str(&v.name);
        if v.is_latent() {
            out.push_str(" latent");
        }
        out.push('\n');
    }
    for (t, h) in g.named_edges() {
        out.push_str(&format!("edge {t} -> {h}\n"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarJson {
    pub name: String,
    #[serde(default)]
    pub latent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vars: Vec<VarJson>,
    pub edges: Vec<(String, String)>,
}

impl From<&CausalGraph> for GraphJson {
    fn from(g: &CausalGraph) -> Self {
        GraphJson {
            vars: g.variables().iter().map(|v| VarJson { name: v.name.clone(), latent: v.is_latent() }).collect(),
            edges: g.named_edges(),
        }
    }
}

impl TryFrom<GraphJson> for CausalGraph {
    type Error = Error;

    fn try_from(j: GraphJson) -> Result<Self> {
        let vars = j
            .vars
            .into_iter()
            .map(|v| super::Variable {
                name: v.name,
                observability: if v.latent { Observability::Latent } else { Observability::Observed },
            })
            .collect();
        CausalGraph::new(vars, j.edges)
    }
}

pub fn parse_graph_json(text: &str) -> Result<CausalGraph> {
    let j: GraphJson = serde_json::from_str(text)
        .map_err(|e| Error::parse(e.line(), format!("column {}", e.column()), e.to_string()))?;
    CausalGraph::try_from(j)
}

pub fn to_json(g: &CausalGraph) -> String {
    serde_json::to_string(&GraphJson::from(g)).expect("graph serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRONT_DOOR: &str = "\
# front-door
var X
var Z
var Y
var U latent   # confounder
edge U -> X
edge U -> Y
edge X -> Z -> Y
";

    #[test]
    fn parses_front_door() {
        let g = parse_graph(FRONT_DOOR).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.is_latent(g.id("U").unwrap()));
        assert_eq!(g.edge_count(), 4);
        let again = parse_graph(&to_dsl(&g)).unwrap();
        assert_eq!(again, g);
        let j = parse_graph(&to_json(&g)).unwrap();
        assert_eq!(j, g);
    }

    #[test]
    fn json_mirror_shape() {
        let g = parse_graph("var A\nvar B latent\nedge B -> A\n").unwrap();
        assert_eq!(
            to_json(&g),
            r#"{"vars":[{"name":"A","latent":false},{"name":"B","latent":true}],"edges":[["B","A"]]}"#
        );
    }

    #[test]
    fn arc_directive() {
        let g = parse_graph("var X\nvar Y\nedge X -> Y\narc X <-> Y\n").unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.is_latent(2));
    }

    #[test]
    fn parse_errors_carry_line_and_token() {
        let err = parse_graph("var X\nedge X -> Q\n").unwrap_err();
        assert_eq!(err, Error::parse(2, "Q", "unknown variable"));
        let err = parse_graph("var X\nvar Y\nedge X => Y\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, ref token, .. } if token == "=>"));
        let err = parse_graph("var X\nnode Y\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, ref token, .. } if token == "node"));
        let err = parse_graph("var X shy\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, ref token, .. } if token == "shy"));
        let err = parse_graph("var X\nvar X\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
