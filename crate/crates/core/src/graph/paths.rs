//! Explicit path enumeration. Exponential, so it is guarded by a node-count
//! limit and used as an oracle; production queries go through reachability.

use std::fmt;

use super::{CausalGraph, NodeId};
use crate::error::{Error, Result};

pub const PATH_NODE_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Junction {
    Chain,
    Fork,
    Collider,
}

/// A simple path of length at least one. `forward[k]` is true when the edge
/// between `nodes[k]` and `nodes[k + 1]` points towards `nodes[k + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<NodeId>,
    forward: Vec<bool>,
}

impl Path {
    pub fn new(g: &CausalGraph, nodes: Vec<NodeId>) -> Result<Path> {
        if nodes.len() < 2 {
            return Err(Error::InvalidQuery("a path needs at least one edge".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if !nodes.iter().all(|n| seen.insert(*n)) {
            return Err(Error::InvalidQuery("a path may not repeat a node".into()));
        }
        let mut forward = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            if g.has_edge(w[0], w[1]) {
                forward.push(true);
            } else if g.has_edge(w[1], w[0]) {
                forward.push(false);
            } else {
                return Err(Error::InvalidQuery(format!("{} and {} are not adjacent", g.name(w[0]), g.name(w[1]))));
            }
        }
        Ok(Path { nodes, forward })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeId {
        self.nodes[self.nodes.len() - 1]
    }

    /// Interior nodes with their junction kind, in path order.
    pub fn junctions(&self) -> impl Iterator<Item = (NodeId, Junction)> + '_ {
        (1..self.nodes.len() - 1).map(move |k| {
            let into_m_from_prev = self.forward[k - 1];
            let out_of_m_to_next = self.forward[k];
            let kind = match (into_m_from_prev, out_of_m_to_next) {
                (true, false) => Junction::Collider,
                (false, true) => Junction::Fork,
                _ => Junction::Chain,
            };
            (self.nodes[k], kind)
        })
    }

    /// True when the first edge points into the start node.
    pub fn enters_start(&self) -> bool {
        !self.forward[0]
    }

    pub fn render(&self, g: &CausalGraph) -> String {
        let mut s = g.name(self.nodes[0]).to_string();
        for (k, &fwd) in self.forward.iter().enumerate() {
            s.push_str(if fwd { "->" } else { "<-" });
            s.push_str(g.name(self.nodes[k + 1]));
        }
        s
    }

    pub fn display<'a>(&'a self, g: &'a CausalGraph) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Path, &'a CausalGraph);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0.render(self.1))
            }
        }
        D(self, g)
    }
}

pub(crate) fn guard(g: &CausalGraph, operation: &'static str, limit: usize) -> Result<()> {
    if g.len() > limit {
        Err(Error::ScaleGuard { operation, nodes: g.len(), limit })
    } else {
        Ok(())
    }
}

fn neighbours(g: &CausalGraph, v: NodeId) -> Vec<(NodeId, bool)> {
    let mut out: Vec<(NodeId, bool)> =
        g.children(v).iter().map(|&c| (c, true)).chain(g.parents(v).iter().map(|&p| (p, false))).collect();
    out.sort_unstable();
    out
}

/// Depth-first enumeration of simple paths from `from`; `accept_step` sees the
/// partial path (nodes, directions) after each extension and prunes on false.
pub(crate) fn search_paths<F, G>(g: &CausalGraph, from: NodeId, mut accept_step: F, mut emit: G)
where
    F: FnMut(&[NodeId], &[bool]) -> bool,
    G: FnMut(&[NodeId], &[bool]) -> bool,
{
    let mut nodes = vec![from];
    let mut forward = Vec::new();
    let mut on_path = vec![false; g.len()];
    on_path[from] = true;
    let mut stack: Vec<(Vec<(NodeId, bool)>, usize)> = vec![(neighbours(g, from), 0)];
    while let Some((nbrs, idx)) = stack.last_mut() {
        if *idx >= nbrs.len() {
            stack.pop();
            if let Some(v) = nodes.pop() {
                on_path[v] = false;
            }
            forward.pop();
            continue;
        }
        let (next, fwd) = nbrs[*idx];
        *idx += 1;
        if on_path[next] {
            continue;
        }
        nodes.push(next);
        forward.push(fwd);
        if !accept_step(&nodes, &forward) {
            nodes.pop();
            forward.pop();
            continue;
        }
        if !emit(&nodes, &forward) {
            return;
        }
        on_path[next] = true;
        stack.push((neighbours(g, next), 0));
    }
}

/// Every simple path between `a` and `b` (oracle scale only).
pub fn all_paths(g: &CausalGraph, a: NodeId, b: NodeId) -> Result<Vec<Path>> {
    guard(g, "path enumeration", PATH_NODE_LIMIT)?;
    if a == b {
        return Err(Error::InvalidQuery("path endpoints must differ".into()));
    }
    let mut out = Vec::new();
    search_paths(
        g,
        a,
        |nodes, _| {
            // never walk through the target
            nodes[..nodes.len() - 1].iter().all(|&n| n != b)
        },
        |nodes, fwd| {
            if *nodes.last().unwrap() == b {
                out.push(Path { nodes: nodes.to_vec(), forward: fwd.to_vec() });
            }
            true
        },
    );
    Ok(out)
}

/// Latent-interior, collider-free paths joining two observed variables.
pub fn confounding_arcs(g: &CausalGraph) -> Result<Vec<Path>> {
    guard(g, "confounding arcs", PATH_NODE_LIMIT)?;
    let mut out = Vec::new();
    for a in 0..g.len() {
        if g.is_latent(a) {
            continue;
        }
        search_paths(
            g,
            a,
            |nodes, fwd| {
                // the node we just left becomes interior: it must be latent and not a collider
                let k = nodes.len();
                k < 3 || (g.is_latent(nodes[k - 2]) && !(fwd[k - 3] && !fwd[k - 2]))
            },
            |nodes, fwd| {
                let last = *nodes.last().unwrap();
                if nodes.len() >= 3 && !g.is_latent(last) && last > a {
                    out.push(Path { nodes: nodes.to_vec(), forward: fwd.to_vec() });
                }
                true
            },
        );
    }
    out.sort_by(|p, q| (p.start(), p.end(), &p.nodes).cmp(&(q.start(), q.end(), &q.nodes)));
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CausalGraph;

    fn fd() -> CausalGraph {
        CausalGraph::builder()
            .observed("X")
            .observed("Z")
            .observed("Y")
            .latent("U")
            .edge("U", "X")
            .edge("U", "Y")
            .edge("X", "Z")
            .edge("Z", "Y")
            .build()
            .unwrap()
    }

    #[test]
    fn path_junctions() {
        let g = fd();
        let p = Path::new(&g, vec![0, 3, 2, 1]).unwrap();
        assert_eq!(p.render(&g), "X<-U->Y<-Z");
        let kinds: Vec<_> = p.junctions().map(|(_, k)| k).collect();
        assert_eq!(kinds, [Junction::Fork, Junction::Collider]);
        assert!(p.enters_start());
        assert!(Path::new(&g, vec![0]).is_err());
        assert!(Path::new(&g, vec![0, 2]).is_err());
    }

    #[test]
    fn enumerate_paths() {
        let g = fd();
        let paths: Vec<_> = all_paths(&g, 0, 2).unwrap().iter().map(|p| p.render(&g)).collect();
        assert_eq!(paths, ["X->Z->Y", "X<-U->Y"]);
    }

    #[test]
    fn confounding_arc_examples() {
        let g = fd();
        let arcs: Vec<_> = confounding_arcs(&g).unwrap().iter().map(|p| p.render(&g)).collect();
        assert_eq!(arcs, ["X<-U->Y"]);

        let observed = CausalGraph::builder()
            .observed("A")
            .observed("B")
            .observed("C")
            .edge("A", "B")
            .edge("C", "B")
            .build()
            .unwrap();
        assert!(confounding_arcs(&observed).unwrap().is_empty());

        let g = CausalGraph::builder()
            .observed("X")
            .observed("Y")
            .latent("U1")
            .latent("U2")
            .edge("U1", "X")
            .edge("U1", "U2")
            .edge("U2", "Y")
            .build()
            .unwrap();
        let arcs: Vec<_> = confounding_arcs(&g).unwrap().iter().map(|p| p.render(&g)).collect();
        assert_eq!(arcs, ["X<-U1->U2->Y"]);

        // a latent collider does not form an arc
        let g = CausalGraph::builder()
            .observed("X")
            .observed("Y")
            .latent("U")
            .edge("X", "U")
            .edge("Y", "U")
            .build()
            .unwrap();
        assert!(confounding_arcs(&g).unwrap().is_empty());
    }
}
