//! Causal DAGs over named variables with observed/latent labels.
//!
//! Nodes are addressed by [`NodeId`], the position of the variable in
//! declaration order. Every set or list returned here is ordered by that
//! index, which makes all downstream output reproducible.

pub(crate) mod dsl;
pub(crate) mod paths;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dsl::{parse_graph, parse_graph_json, to_dsl, to_json, GraphJson, VarJson};
pub use paths::{all_paths, confounding_arcs, Junction, Path, PATH_NODE_LIMIT};

pub type NodeId = usize;
pub type NodeSet = BTreeSet<NodeId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observability {
    Observed,
    Latent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub observability: Observability,
}

impl Variable {
    pub fn is_latent(&self) -> bool {
        self.observability == Observability::Latent
    }
}

/// Names are nonempty tokens of ASCII letters, digits and underscores.
pub fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Immutable, validated DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    vars: Vec<Variable>,
    index: HashMap<String, NodeId>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
}

#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    vars: Vec<Variable>,
    edges: Vec<(String, String)>,
    arcs: Vec<(String, String)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(mut self, name: &str, observability: Observability) -> Self {
        self.add_var(name, observability);
        self
    }

    pub fn observed(self, name: &str) -> Self {
        self.var(name, Observability::Observed)
    }

    pub fn latent(self, name: &str) -> Self {
        self.var(name, Observability::Latent)
    }

    pub fn edge(mut self, tail: &str, head: &str) -> Self {
        self.add_edge(tail, head);
        self
    }

    /// Declares a confounding arc `a <-> b`. It is expanded into a fresh
    /// latent node with edges into both endpoints at build time.
    pub fn arc(mut self, a: &str, b: &str) -> Self {
        self.add_arc(a, b);
        self
    }

    pub fn add_var(&mut self, name: &str, observability: Observability) {
        self.vars.push(Variable { name: name.to_string(), observability });
    }

    pub fn add_edge(&mut self, tail: &str, head: &str) {
        self.edges.push((tail.to_string(), head.to_string()));
    }

    pub fn add_arc(&mut self, a: &str, b: &str) {
        self.arcs.push((a.to_string(), b.to_string()));
    }

    pub fn build(mut self) -> Result<CausalGraph> {
        let arcs = std::mem::take(&mut self.arcs);
        for (a, b) in arcs {
            let mut name = format!("U_{a}_{b}");
            let mut k = 1;
            while self.vars.iter().any(|v| v.name == name) {
                k += 1;
                name = format!("U_{a}_{b}_{k}");
            }
            self.add_var(&name, Observability::Latent);
            self.add_edge(&name, &a);
            self.add_edge(&name, &b);
        }
        CausalGraph::new(self.vars, self.edges)
    }
}

impl CausalGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    pub fn new(vars: Vec<Variable>, edges: Vec<(String, String)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(vars.len());
        for (i, v) in vars.iter().enumerate() {
            if !valid_name(&v.name) {
                return Err(Error::InvalidName(v.name.clone()));
            }
            if index.insert(v.name.clone(), i).is_some() {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        let n = vars.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (t, h) in &edges {
            let ti = *index.get(t).ok_or_else(|| Error::UnknownVariable(t.clone()))?;
            let hi = *index.get(h).ok_or_else(|| Error::UnknownVariable(h.clone()))?;
            if ti == hi {
                return Err(Error::SelfLoop(t.clone()));
            }
            if children[ti].contains(&hi) {
                return Err(Error::DuplicateEdge(t.clone(), h.clone()));
            }
            children[ti].push(hi);
            parents[hi].push(ti);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let topo = kahn(&parents, &children).map_err(|v| Error::Cycle(vars[v].name.clone()))?;
        Ok(CausalGraph { vars, index, parents, children, topo })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.vars[id].name
    }

    pub fn is_latent(&self, id: NodeId) -> bool {
        self.vars[id].is_latent()
    }

    pub fn id(&self, name: &str) -> Result<NodeId> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn set<S: AsRef<str>>(&self, names: &[S]) -> Result<NodeSet> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    pub fn names(&self, set: &NodeSet) -> Vec<String> {
        set.iter().map(|&i| self.vars[i].name.clone()).collect()
    }

    pub fn observed(&self) -> NodeSet {
        (0..self.len()).filter(|&i| !self.is_latent(i)).collect()
    }

    pub fn all_nodes(&self) -> NodeSet {
        (0..self.len()).collect()
    }

    /// Edges ordered by (tail, head) declaration index.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (t, hs) in self.children.iter().enumerate() {
            for &h in hs {
                out.push((t, h));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, tail: NodeId, head: NodeId) -> bool {
        self.children[tail].binary_search(&head).is_ok()
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id]
    }

    /// Topological order with ties broken by declaration order.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Proper ancestors of the seed set (the seeds themselves are excluded).
    pub fn ancestors(&self, seeds: &NodeSet) -> NodeSet {
        self.closure(seeds, &self.parents)
    }

    /// Proper descendants of the seed set (the seeds themselves are excluded).
    pub fn descendants(&self, seeds: &NodeSet) -> NodeSet {
        self.closure(seeds, &self.children)
    }

    fn closure(&self, seeds: &NodeSet, step: &[Vec<NodeId>]) -> NodeSet {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<NodeId> = seeds.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &u in &step[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        (0..self.len()).filter(|i| seen[*i] && !seeds.contains(i)).collect()
    }

    /// Unordered adjacency pairs, stored as `(min, max)`.
    pub fn skeleton(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect()
    }

    /// Colliders `i -> m <- j` with `i` and `j` nonadjacent, stored with `i < j`.
    pub fn v_structures(&self) -> BTreeSet<(NodeId, NodeId, NodeId)> {
        let mut out = BTreeSet::new();
        for m in 0..self.len() {
            let pa = &self.parents[m];
            for (k, &i) in pa.iter().enumerate() {
                for &j in &pa[k + 1..] {
                    if !self.adjacent(i, j) {
                        out.insert((i, m, j));
                    }
                }
            }
        }
        out
    }

    /// Removes edges into `cut_incoming` and edges out of `cut_outgoing`.
    pub fn mutilate(&self, cut_incoming: &NodeSet, cut_outgoing: &NodeSet) -> CausalGraph {
        let mut parents = self.parents.clone();
        let mut children = self.children.clone();
        for &v in cut_incoming {
            for &p in &self.parents[v] {
                children[p].retain(|&c| c != v);
            }
            parents[v].clear();
        }
        for &v in cut_outgoing {
            for &c in &self.children[v] {
                parents[c].retain(|&p| p != v);
            }
            children[v].clear();
        }
        // Edge removal cannot create a cycle.
        let topo = kahn(&parents, &children).expect("subgraph of a DAG is acyclic");
        CausalGraph { vars: self.vars.clone(), index: self.index.clone(), parents, children, topo }
    }

    /// Name-based convenience wrapper around [`CausalGraph::mutilate`].
    pub fn mutilate_named<S: AsRef<str>>(&self, cut_incoming: &[S], cut_outgoing: &[S]) -> Result<CausalGraph> {
        Ok(self.mutilate(&self.set(cut_incoming)?, &self.set(cut_outgoing)?))
    }

    /// Members of `z` that are not ancestors of any member of `w` once the
    /// edges into `x` have been removed.
    pub fn z_hat(&self, x: &NodeSet, z: &NodeSet, w: &NodeSet) -> Result<NodeSet> {
        check_disjoint(self, &[("X", x), ("Z", z), ("W", w)])?;
        let cut = self.mutilate(x, &NodeSet::new());
        let anc = cut.ancestors(w);
        Ok(z.iter().copied().filter(|v| !anc.contains(v)).collect())
    }

    /// Adds one edge, failing if it would break acyclicity or already exists.
    pub fn with_edge(&self, tail: NodeId, head: NodeId) -> Result<CausalGraph> {
        let mut edges = self.named_edges();
        edges.push((self.name(tail).to_string(), self.name(head).to_string()));
        CausalGraph::new(self.vars.clone(), edges)
    }

    /// Replaces `tail -> head` with `tail -> name -> head` for a new observed node.
    pub fn splice_observed(&self, tail: NodeId, head: NodeId, name: &str) -> Result<CausalGraph> {
        if !self.has_edge(tail, head) {
            return Err(Error::InvalidQuery(format!("no edge {} -> {} to splice", self.name(tail), self.name(head))));
        }
        let mut vars = self.vars.clone();
        vars.push(Variable { name: name.to_string(), observability: Observability::Observed });
        let mut edges: Vec<_> = self
            .edges()
            .into_iter()
            .filter(|&e| e != (tail, head))
            .map(|(t, h)| (self.name(t).to_string(), self.name(h).to_string()))
            .collect();
        edges.push((self.name(tail).to_string(), name.to_string()));
        edges.push((name.to_string(), self.name(head).to_string()));
        CausalGraph::new(vars, edges)
    }

    pub fn named_edges(&self) -> Vec<(String, String)> {
        self.edges().into_iter().map(|(t, h)| (self.name(t).to_string(), self.name(h).to_string())).collect()
    }

    pub fn fmt_set(&self, set: &NodeSet) -> String {
        self.names(set).join(",")
    }
}

impl fmt::Display for CausalGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_dsl(self))
    }
}

fn kahn(parents: &[Vec<NodeId>], children: &[Vec<NodeId>]) -> std::result::Result<Vec<NodeId>, NodeId> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<NodeId> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&i| indeg[i] > 0).unwrap_or(0))
    }
}

/// Rejects any pair of overlapping sets, naming the shared variables.
pub fn check_disjoint(g: &CausalGraph, sets: &[(&str, &NodeSet)]) -> Result<()> {
    for (i, (na, a)) in sets.iter().enumerate() {
        for (nb, b) in &sets[i + 1..] {
            let common: NodeSet = a.intersection(b).copied().collect();
            if !common.is_empty() {
                return Err(Error::Overlap(format!("{na} and {nb} share {}", g.fmt_set(&common))));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> CausalGraph {
        CausalGraph::builder().observed("X").observed("Z").observed("Y").edge("X", "Z").edge("Z", "Y").build().unwrap()
    }

    pub(crate) fn front_door() -> CausalGraph {
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

    fn names(g: &CausalGraph, ids: &[NodeId]) -> Vec<String> {
        ids.iter().map(|&i| g.name(i).to_string()).collect()
    }

    #[test]
    fn topological_order_examples() {
        let g = chain();
        assert_eq!(names(&g, g.topological_order()), ["X", "Z", "Y"]);

        let g = CausalGraph::builder().observed("B").observed("A").build().unwrap();
        assert_eq!(names(&g, g.topological_order()), ["B", "A"]);

        let g = front_door();
        let order = names(&g, g.topological_order());
        let pos = |n: &str| order.iter().position(|v| v == n).unwrap();
        assert!(pos("U") < pos("X") && pos("X") < pos("Z") && pos("Z") < pos("Y"));
    }

    #[test]
    fn construction_errors() {
        let cyc = CausalGraph::builder().observed("A").observed("B").edge("A", "B").edge("B", "A").build();
        assert!(matches!(cyc, Err(Error::Cycle(_))));
        let self_loop = CausalGraph::builder().observed("A").edge("A", "A").build();
        assert_eq!(self_loop, Err(Error::SelfLoop("A".into())));
        let dup = CausalGraph::builder().observed("A").observed("B").edge("A", "B").edge("A", "B").build();
        assert!(matches!(dup, Err(Error::DuplicateEdge(..))));
        let unknown = CausalGraph::builder().observed("A").edge("A", "Q").build();
        assert_eq!(unknown, Err(Error::UnknownVariable("Q".into())));
        let twice = CausalGraph::builder().observed("A").latent("A").build();
        assert_eq!(twice, Err(Error::DuplicateVariable("A".into())));
        let bad = CausalGraph::builder().observed("a-b").build();
        assert!(matches!(bad, Err(Error::InvalidName(_))));
    }

    #[test]
    fn parents_ancestors_descendants() {
        let g = chain();
        let (x, z, y) = (g.id("X").unwrap(), g.id("Z").unwrap(), g.id("Y").unwrap());
        assert_eq!(g.parents(y), &[z]);
        assert_eq!(g.descendants(&NodeSet::from([x])), NodeSet::from([z, y]));

        let loyalty = CausalGraph::builder()
            .latent("U")
            .observed("Z")
            .observed("X")
            .observed("Y")
            .edge("U", "Z")
            .edge("Z", "X")
            .edge("X", "Y")
            .edge("U", "Y")
            .build()
            .unwrap();
        let anc = loyalty.ancestors(&loyalty.set(&["Y"]).unwrap());
        assert_eq!(loyalty.names(&anc), ["U", "Z", "X"]);
        assert_eq!(loyalty.id("nope"), Err(Error::UnknownVariable("nope".into())));
    }

    #[test]
    fn skeleton_and_v_structures() {
        let g = front_door();
        let sk: Vec<_> = g.skeleton().into_iter().map(|(a, b)| format!("{}-{}", g.name(a), g.name(b))).collect();
        assert_eq!(sk, ["X-Z", "X-U", "Z-Y", "Y-U"]);

        let collider = CausalGraph::builder()
            .observed("X")
            .observed("Z")
            .observed("Y")
            .edge("X", "Z")
            .edge("Y", "Z")
            .build()
            .unwrap();
        assert_eq!(collider.v_structures(), BTreeSet::from([(0, 1, 2)]));
        let shielded = collider.with_edge(0, 2).unwrap();
        assert!(shielded.v_structures().is_empty());
        assert!(chain().v_structures().is_empty());
    }

    #[test]
    fn mutilation() {
        let g = chain();
        let cut = g.mutilate_named(&["Z"], &[]).unwrap();
        assert_eq!(cut.named_edges(), [("Z".to_string(), "Y".to_string())]);
        assert_eq!(g.edge_count(), 2);

        let fd = front_door();
        let cut = fd.mutilate_named(&[] as &[&str], &["X"]).unwrap();
        let edges: Vec<_> = cut.named_edges().into_iter().map(|(a, b)| format!("{a}->{b}")).collect();
        assert_eq!(edges, ["Z->Y", "U->X", "U->Y"]);

        let g = CausalGraph::builder()
            .observed("X")
            .observed("Y")
            .observed("Z")
            .edge("X", "Y")
            .edge("Y", "Z")
            .build()
            .unwrap();
        let cut = g.mutilate_named(&["Y"], &["Y"]).unwrap();
        assert_eq!(cut.edge_count(), 0);
        assert!(g.mutilate_named(&["Q"], &[]).is_err());
    }

    #[test]
    fn z_hat_examples() {
        let g = chain();
        let z = g.set(&["Z"]).unwrap();
        assert_eq!(g.z_hat(&NodeSet::new(), &z, &NodeSet::new()).unwrap(), z);

        let zw = CausalGraph::builder().observed("Z").observed("W").edge("Z", "W").build().unwrap();
        let r = zw.z_hat(&NodeSet::new(), &zw.set(&["Z"]).unwrap(), &zw.set(&["W"]).unwrap()).unwrap();
        assert!(r.is_empty());

        let fd = front_door();
        let r = fd.z_hat(&fd.set(&["X"]).unwrap(), &fd.set(&["Z"]).unwrap(), &NodeSet::new()).unwrap();
        assert_eq!(fd.names(&r), ["Z"]);

        let overlap = fd.z_hat(&fd.set(&["X"]).unwrap(), &fd.set(&["X"]).unwrap(), &NodeSet::new());
        assert!(matches!(overlap, Err(Error::Overlap(_))));
    }

    #[test]
    fn arc_expands_to_latent_node() {
        let g = CausalGraph::builder().observed("X").observed("Y").edge("X", "Y").arc("X", "Y").build().unwrap();
        let u = g.id("U_X_Y").unwrap();
        assert!(g.is_latent(u));
        assert_eq!(g.children(u), &[0, 1]);
    }

    #[test]
    fn splice_and_add_edge() {
        let g = chain();
        let s = g.splice_observed(0, 1, "M").unwrap();
        assert_eq!(s.len(), 4);
        assert!(!s.has_edge(0, 1));
        assert!(s.has_edge(0, 3) && s.has_edge(3, 1));
        assert!(matches!(g.with_edge(2, 0), Err(Error::Cycle(_))));
    }
}
