//! d-separation, observational equivalence and equivalence-class patterns.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::paths::{guard, search_paths, Junction};
use crate::graph::{all_paths, check_disjoint, CausalGraph, NodeId, NodeSet, Path, PATH_NODE_LIMIT};

/// Node-count limit for brute-force pattern enumeration.
pub const PATTERN_NODE_LIMIT: usize = 7;

/// `(X _||_ Y | Z)` over variable names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Statement {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
}

impl Statement {
    pub fn new(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Self {
        Statement { x: g.names(x), y: g.names(y), z: g.names(z) }
    }

    pub fn resolve(&self, g: &CausalGraph) -> Result<(NodeSet, NodeSet, NodeSet)> {
        Ok((g.set(&self.x)?, g.set(&self.y)?, g.set(&self.z)?))
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _||_ {} |", self.x.join(","), self.y.join(","))?;
        if !self.z.is_empty() {
            write!(f, " {}", self.z.join(","))?;
        }
        Ok(())
    }
}

fn blocked_at(kind: Junction, m: NodeId, z: &NodeSet, opened: &NodeSet) -> bool {
    match kind {
        Junction::Chain | Junction::Fork => z.contains(&m),
        Junction::Collider => !opened.contains(&m),
    }
}

/// Colliders in this set are open: the conditioning set and its ancestors.
fn collider_openers(g: &CausalGraph, z: &NodeSet) -> NodeSet {
    let mut a = g.ancestors(z);
    a.extend(z.iter().copied());
    a
}

pub fn path_blocked(g: &CausalGraph, path: &Path, z: &NodeSet) -> Result<bool> {
    if z.contains(&path.start()) || z.contains(&path.end()) {
        return Err(Error::InvalidQuery(format!("path endpoint in conditioning set: {}", path.render(g))));
    }
    let opened = collider_openers(g, z);
    Ok(path.junctions().any(|(m, kind)| blocked_at(kind, m, z, &opened)))
}

fn check_query(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidQuery("X and Y must be nonempty".into()));
    }
    for s in [x, y, z] {
        if let Some(&bad) = s.iter().find(|&&v| v >= g.len()) {
            return Err(Error::UnknownVariable(format!("#{bad}")));
        }
    }
    check_disjoint(g, &[("X", x), ("Y", y), ("Z", z)])
}

/// Reachability over (node, direction) states: linear in the number of edges.
pub fn d_separated(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<bool> {
    check_query(g, x, y, z)?;
    Ok(!reachable(g, x, z).iter().any(|v| y.contains(v)))
}

/// Nodes d-connected to `x` given `z` (excluding `x` and members of `z`).
pub fn reachable(g: &CausalGraph, x: &NodeSet, z: &NodeSet) -> NodeSet {
    let opened = collider_openers(g, z);
    // visited[v][0]: arrived travelling up (from a child); [1]: down (from a parent)
    let mut visited = vec![[false; 2]; g.len()];
    let mut queue: VecDeque<(NodeId, usize)> = x.iter().map(|&v| (v, 0)).collect();
    let mut out = NodeSet::new();
    while let Some((v, dir)) = queue.pop_front() {
        if visited[v][dir] {
            continue;
        }
        visited[v][dir] = true;
        let in_z = z.contains(&v);
        if !in_z && !x.contains(&v) {
            out.insert(v);
        }
        if dir == 0 {
            if !in_z {
                queue.extend(g.parents(v).iter().map(|&p| (p, 0)));
                queue.extend(g.children(v).iter().map(|&c| (c, 1)));
            }
        } else {
            if !in_z {
                queue.extend(g.children(v).iter().map(|&c| (c, 1)));
            }
            if opened.contains(&v) {
                queue.extend(g.parents(v).iter().map(|&p| (p, 0)));
            }
        }
    }
    out
}

/// Exhaustive oracle: every simple path between X and Y is checked.
pub fn d_separated_by_paths(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<bool> {
    check_query(g, x, y, z)?;
    for &a in x {
        for &b in y {
            for p in all_paths(g, a, b)? {
                if !path_blocked(g, &p, z)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// A simple open path from some `x` to some `y`, if the sets are d-connected.
pub fn open_path(g: &CausalGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<Option<Path>> {
    check_query(g, x, y, z)?;
    if d_separated(g, x, y, z)? {
        return Ok(None);
    }
    let opened = collider_openers(g, z);
    for &a in x {
        let mut found = None;
        search_paths(
            g,
            a,
            |nodes, fwd| {
                let k = nodes.len();
                let last = nodes[k - 1];
                if x.contains(&last) {
                    return false;
                }
                if k >= 3 {
                    let m = nodes[k - 2];
                    if y.contains(&m) {
                        return false;
                    }
                    let kind = match (fwd[k - 3], fwd[k - 2]) {
                        (true, false) => Junction::Collider,
                        (false, true) => Junction::Fork,
                        _ => Junction::Chain,
                    };
                    if blocked_at(kind, m, z, &opened) {
                        return false;
                    }
                }
                true
            },
            |nodes, _| {
                let last = *nodes.last().unwrap();
                if y.contains(&last) {
                    found = Some(nodes.to_vec());
                    return false;
                }
                true
            },
        );
        if let Some(nodes) = found {
            return Path::new(g, nodes).map(Some);
        }
    }
    Err(Error::Internal("reachability reported a connection but no open path was found".into()))
}

/// Every singleton-pair statement `(a _||_ b | Z)` that holds in `g`, with
/// `Z` ranging over subsets of the remaining (observed, if flagged) variables.
/// Ordered by pair, then by `Z` cardinality, then lexicographically.
pub fn implied_independencies(g: &CausalGraph, observed_only: bool) -> Result<Vec<Statement>> {
    guard(g, "implied independencies", PATH_NODE_LIMIT)?;
    let pool: Vec<NodeId> = (0..g.len()).filter(|&v| !observed_only || !g.is_latent(v)).collect();
    let mut out = Vec::new();
    for (i, &a) in pool.iter().enumerate() {
        for &b in &pool[i + 1..] {
            let rest: Vec<NodeId> = pool.iter().copied().filter(|&v| v != a && v != b).collect();
            let mut subsets: Vec<NodeSet> = (0u32..1 << rest.len())
                .map(|mask| rest.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &v)| v).collect())
                .collect();
            subsets.sort_by(|p, q| (p.len(), p).cmp(&(q.len(), q)));
            let (sa, sb) = (NodeSet::from([a]), NodeSet::from([b]));
            for z in subsets {
                if d_separated(g, &sa, &sb, &z)? {
                    out.push(Statement::new(g, &sa, &sb, &z));
                }
            }
        }
    }
    Ok(out)
}

/// Why two graphs are not observationally equivalent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distinction {
    /// Adjacency present in exactly one graph; the flag says which (true: first).
    Skeleton(String, String, bool),
    /// ν-structure present in exactly one graph.
    VStructure(String, String, String, bool),
}

impl fmt::Display for Distinction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |first: &bool| if *first { "first" } else { "second" };
        match self {
            Distinction::Skeleton(a, b, first) => write!(f, "skeleton edge {a}-{b} only in {} graph", side(first)),
            Distinction::VStructure(i, m, j, first) => {
                write!(f, "v-structure ({i},{m},{j}) only in {} graph", side(first))
            }
        }
    }
}

fn named_skeleton(g: &CausalGraph) -> BTreeSet<(String, String)> {
    g.skeleton()
        .into_iter()
        .map(|(a, b)| {
            let (a, b) = (g.name(a).to_string(), g.name(b).to_string());
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

fn named_v_structures(g: &CausalGraph) -> BTreeSet<(String, String, String)> {
    g.v_structures()
        .into_iter()
        .map(|(i, m, j)| {
            let (i, m, j) = (g.name(i).to_string(), g.name(m).to_string(), g.name(j).to_string());
            if i <= j {
                (i, m, j)
            } else {
                (j, m, i)
            }
        })
        .collect()
}

/// First skeleton or ν-structure difference, or `None` when equivalent.
pub fn equivalence_witness(g1: &CausalGraph, g2: &CausalGraph) -> Result<Option<Distinction>> {
    let n1: BTreeSet<&str> = g1.variables().iter().map(|v| v.name.as_str()).collect();
    let n2: BTreeSet<&str> = g2.variables().iter().map(|v| v.name.as_str()).collect();
    if n1 != n2 {
        let diff: Vec<&str> = n1.symmetric_difference(&n2).copied().collect();
        return Err(Error::InvalidQuery(format!("graphs have different variables: {}", diff.join(","))));
    }
    let (s1, s2) = (named_skeleton(g1), named_skeleton(g2));
    if let Some((a, b)) = s1.difference(&s2).next() {
        return Ok(Some(Distinction::Skeleton(a.clone(), b.clone(), true)));
    }
    if let Some((a, b)) = s2.difference(&s1).next() {
        return Ok(Some(Distinction::Skeleton(a.clone(), b.clone(), false)));
    }
    let (v1, v2) = (named_v_structures(g1), named_v_structures(g2));
    if let Some((i, m, j)) = v1.difference(&v2).next() {
        return Ok(Some(Distinction::VStructure(i.clone(), m.clone(), j.clone(), true)));
    }
    if let Some((i, m, j)) = v2.difference(&v1).next() {
        return Ok(Some(Distinction::VStructure(i.clone(), m.clone(), j.clone(), false)));
    }
    Ok(None)
}

pub fn observationally_equivalent(g1: &CausalGraph, g2: &CausalGraph) -> Result<bool> {
    equivalence_witness(g1, g2).map(|w| w.is_none())
}

/// Partially directed representation of an observational-equivalence class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartiallyDirectedGraph {
    pub variables: Vec<String>,
    /// (tail, head) pairs ordered by declaration index.
    pub directed: Vec<(NodeId, NodeId)>,
    /// (a, b) pairs with `a < b`.
    pub undirected: Vec<(NodeId, NodeId)>,
    /// Number of DAGs in the class.
    pub members: usize,
}

impl PartiallyDirectedGraph {
    pub fn render(&self) -> String {
        let n = |i: NodeId| self.variables[i].as_str();
        let mut parts: Vec<String> = self.directed.iter().map(|&(t, h)| format!("{}->{}", n(t), n(h))).collect();
        parts.extend(self.undirected.iter().map(|&(a, b)| format!("{}--{}", n(a), n(b))));
        parts.join("  ")
    }
}

/// Brute-force orientation enumeration over the skeleton of `g`.
pub fn pattern(g: &CausalGraph) -> Result<PartiallyDirectedGraph> {
    guard(g, "pattern enumeration", PATTERN_NODE_LIMIT)?;
    let skeleton: Vec<(NodeId, NodeId)> = g.skeleton().into_iter().collect();
    let target = g.v_structures();
    let k = skeleton.len();
    // fixed[e]: Some(direction) while every member agreed so far
    let mut agreed: Vec<Option<bool>> = vec![None; k];
    let mut members = 0usize;
    for mask in 0u64..(1u64 << k) {
        let edges: Vec<(String, String)> = skeleton
            .iter()
            .enumerate()
            .map(|(e, &(a, b))| {
                let (t, h) = if mask & (1 << e) == 0 { (a, b) } else { (b, a) };
                (g.name(t).to_string(), g.name(h).to_string())
            })
            .collect();
        let Ok(candidate) = CausalGraph::new(g.variables().to_vec(), edges) else {
            continue;
        };
        if candidate.v_structures() != target {
            continue;
        }
        for (e, slot) in agreed.iter_mut().enumerate() {
            let dir = mask & (1 << e) == 0;
            *slot = match (members, *slot) {
                (0, _) => Some(dir),
                (_, Some(d)) if d == dir => Some(d),
                _ => None,
            };
        }
        members += 1;
    }
    if members == 0 {
        return Err(Error::Internal("graph is not a member of its own class".into()));
    }
    let mut directed = Vec::new();
    let mut undirected = Vec::new();
    for (e, &(a, b)) in skeleton.iter().enumerate() {
        match agreed[e] {
            Some(true) => directed.push((a, b)),
            Some(false) => directed.push((b, a)),
            None => undirected.push((a, b)),
        }
    }
    directed.sort_unstable();
    Ok(PartiallyDirectedGraph {
        variables: g.variables().iter().map(|v| v.name.clone()).collect(),
        directed,
        undirected,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    fn g(text: &str) -> CausalGraph {
        parse_graph(text).unwrap()
    }

    fn s(g: &CausalGraph, names: &[&str]) -> NodeSet {
        g.set(names).unwrap()
    }

    /// Fig. 3 shapes: (a) X -> A <- C -> Y with A -> B, (b) X <- C -> Y.
    #[test]
    fn path_blocking_examples() {
        let a = g("var X\nvar A\nvar B\nvar C\nvar Y\nedge X -> A\nedge C -> A\nedge A -> B\nedge C -> Y\n");
        let p = Path::new(&a, vec![0, 1, 3, 4]).unwrap();
        assert!(!path_blocked(&a, &p, &s(&a, &["B"])).unwrap());

        let b = g("var X\nvar C\nvar Y\nedge C -> X\nedge C -> Y\n");
        let p = Path::new(&b, vec![0, 1, 2]).unwrap();
        assert!(path_blocked(&b, &p, &s(&b, &["C"])).unwrap());

        let col = g("var X\nvar M\nvar Y\nedge X -> M\nedge Y -> M\n");
        let p = Path::new(&col, vec![0, 1, 2]).unwrap();
        assert!(path_blocked(&col, &p, &NodeSet::new()).unwrap());
        assert!(path_blocked(&col, &p, &s(&col, &["X"])).is_err());
    }

    #[test]
    fn d_separation_examples() {
        let chain = g("var X\nvar Z\nvar Y\nedge X -> Z -> Y\n");
        assert!(d_separated(&chain, &s(&chain, &["X"]), &s(&chain, &["Y"]), &s(&chain, &["Z"])).unwrap());
        assert!(!d_separated(&chain, &s(&chain, &["X"]), &s(&chain, &["Y"]), &NodeSet::new()).unwrap());

        let fd = g("var X\nvar Z\nvar Y\nvar U latent\nedge U -> X\nedge U -> Y\nedge X -> Z -> Y\n");
        assert!(d_separated(&fd, &s(&fd, &["Z"]), &s(&fd, &["U"]), &s(&fd, &["X"])).unwrap());

        let overlap = d_separated(&chain, &s(&chain, &["X"]), &s(&chain, &["X"]), &NodeSet::new());
        assert!(matches!(overlap, Err(Error::Overlap(_))));
    }

    #[test]
    fn conditioning_on_a_collider_opens_it() {
        let col = g("var X\nvar M\nvar Y\nvar D\nedge X -> M\nedge Y -> M\nedge M -> D\n");
        let (x, y) = (s(&col, &["X"]), s(&col, &["Y"]));
        assert!(d_separated(&col, &x, &y, &NodeSet::new()).unwrap());
        assert!(!d_separated(&col, &x, &y, &s(&col, &["M"])).unwrap());
        assert!(!d_separated(&col, &x, &y, &s(&col, &["D"])).unwrap());
        let path = open_path(&col, &x, &y, &s(&col, &["D"])).unwrap().unwrap();
        assert_eq!(path.render(&col), "X->M<-Y");
        assert!(open_path(&col, &x, &y, &NodeSet::new()).unwrap().is_none());
    }

    #[test]
    fn implied_independency_examples() {
        let xy = g("var X\nvar Y\nedge X -> Y\n");
        assert!(implied_independencies(&xy, false).unwrap().is_empty());

        let col = g("var X\nvar Z\nvar Y\nedge X -> Z\nedge Y -> Z\n");
        let r: Vec<String> = implied_independencies(&col, false).unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(r, ["X _||_ Y |"]);

        let fork = g("var X\nvar Z\nvar Y\nedge Z -> X\nedge Z -> Y\n");
        let r: Vec<String> = implied_independencies(&fork, false).unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(r, ["X _||_ Y | Z"]);
    }

    #[test]
    fn equivalence_examples() {
        let fwd = g("var X\nvar Y\nedge X -> Y\n");
        let bwd = g("var X\nvar Y\nedge Y -> X\n");
        assert!(observationally_equivalent(&fwd, &bwd).unwrap());

        let chain = g("var X\nvar Z\nvar Y\nedge X -> Z -> Y\n");
        let fork = g("var X\nvar Z\nvar Y\nedge Z -> X\nedge Z -> Y\n");
        let col = g("var X\nvar Z\nvar Y\nedge X -> Z\nedge Y -> Z\n");
        assert!(observationally_equivalent(&chain, &fork).unwrap());
        assert!(!observationally_equivalent(&chain, &col).unwrap());
        assert_eq!(
            equivalence_witness(&chain, &col).unwrap(),
            Some(Distinction::VStructure("X".into(), "Z".into(), "Y".into(), false))
        );
        let other = g("var A\nvar B\n");
        assert!(observationally_equivalent(&fwd, &other).is_err());
    }

    #[test]
    fn pattern_examples() {
        let col = g("var X\nvar Z\nvar Y\nedge X -> Z\nedge Y -> Z\n");
        let p = pattern(&col).unwrap();
        assert_eq!(p.render(), "X->Z  Y->Z");
        assert_eq!(p.members, 1);

        let chain = g("var X\nvar Z\nvar Y\nedge X -> Z -> Y\n");
        let p = pattern(&chain).unwrap();
        assert!(p.directed.is_empty());
        assert_eq!(p.undirected.len(), 2);
        assert_eq!(p.members, 3);

        let single = g("var X\nvar Y\nedge X -> Y\n");
        assert_eq!(pattern(&single).unwrap().render(), "X--Y");

        let big = g("var A\nvar B\nvar C\nvar D\nvar E\nvar F\nvar G\nvar H\n");
        assert!(matches!(pattern(&big), Err(Error::ScaleGuard { .. })));
    }
}
