//! Directed causal graphs and the pure queries over them: parents, children,
//! ancestors, descendants, acyclicity with topological order, d-separation,
//! and the four-way edge classification relative to a node module.
//!
//! Path queries run by exhaustive enumeration; graphs here are desk-scale.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{EngineError, Result};

/// Whether a node is determined inside the model or drawn from outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Endogenous,
    Exogenous,
}

/// Identifier of a node: its kind plus its position in the corresponding
/// node vector. The derived order (endogenous first, then exogenous, each by
/// index) is the canonical node order everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: usize,
}

impl NodeId {
    pub fn endo(index: usize) -> Self {
        NodeId { kind: NodeKind::Endogenous, index }
    }

    pub fn exo(index: usize) -> Self {
        NodeId { kind: NodeKind::Exogenous, index }
    }

    pub fn is_endogenous(&self) -> bool {
        self.kind == NodeKind::Endogenous
    }
}

/// Directed graph over node ids. Endpoints must be declared nodes and
/// self-loops are rejected; everything else (including cycles) is legal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    nodes: BTreeSet<NodeId>,
    edges: BTreeSet<(NodeId, NodeId)>,
}

/// The four-way partition of a graph's edges relative to a module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeClassification {
    /// Both endpoints inside the module.
    pub interior: BTreeSet<(NodeId, NodeId)>,
    /// Both endpoints outside the module.
    pub exterior: BTreeSet<(NodeId, NodeId)>,
    /// Source outside, target inside.
    pub incoming: BTreeSet<(NodeId, NodeId)>,
    /// Source inside, target outside.
    pub outgoing: BTreeSet<(NodeId, NodeId)>,
}

impl CausalGraph {
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        let nodes: BTreeSet<NodeId> = nodes.into_iter().collect();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(EngineError::UnknownEdge(a, b));
            }
            if !nodes.contains(&a) {
                return Err(EngineError::UnknownNode(a));
            }
            if !nodes.contains(&b) {
                return Err(EngineError::UnknownNode(b));
            }
            set.insert((a, b));
        }
        Ok(CausalGraph { nodes, edges: set })
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.contains(&(from, to))
    }

    fn check_node(&self, n: NodeId) -> Result<()> {
        if self.nodes.contains(&n) {
            Ok(())
        } else {
            Err(EngineError::UnknownNode(n))
        }
    }

    /// All nodes with an edge into `n`.
    pub fn parents(&self, n: NodeId) -> Result<BTreeSet<NodeId>> {
        self.check_node(n)?;
        Ok(self
            .edges
            .iter()
            .filter(|(_, t)| *t == n)
            .map(|(s, _)| *s)
            .collect())
    }

    /// All nodes with an edge out of `n`.
    pub fn children(&self, n: NodeId) -> Result<BTreeSet<NodeId>> {
        self.check_node(n)?;
        Ok(self
            .edges
            .iter()
            .filter(|(s, _)| *s == n)
            .map(|(_, t)| *t)
            .collect())
    }

    /// Transitive closure against edge direction, generalized to sets by
    /// union. Irreflexive: a node is not its own ancestor unless it lies on
    /// a directed cycle through itself.
    pub fn ancestors(&self, seed: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>> {
        self.closure(seed, false)
    }

    /// Transitive closure along edge direction; irreflexive like `ancestors`.
    pub fn descendants(&self, seed: &BTreeSet<NodeId>) -> Result<BTreeSet<NodeId>> {
        self.closure(seed, true)
    }

    fn closure(&self, seed: &BTreeSet<NodeId>, forward: bool) -> Result<BTreeSet<NodeId>> {
        for n in seed {
            self.check_node(*n)?;
        }
        let mut out = BTreeSet::new();
        let mut frontier: Vec<NodeId> = seed.iter().copied().collect();
        while let Some(n) = frontier.pop() {
            let next = if forward {
                self.children(n)?
            } else {
                self.parents(n)?
            };
            for m in next {
                if out.insert(m) {
                    frontier.push(m);
                }
            }
        }
        Ok(out)
    }

    /// Returns a topological order when the graph is acyclic, `None` when it
    /// has a directed cycle. Ties break by canonical node order.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let mut indegree: BTreeMap<NodeId, usize> =
            self.nodes.iter().map(|n| (*n, 0)).collect();
        for (_, t) in &self.edges {
            *indegree.get_mut(t).unwrap() += 1;
        }
        let mut ready: BTreeSet<NodeId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.iter().next().copied() {
            ready.remove(&n);
            order.push(n);
            for (s, t) in &self.edges {
                if *s == n {
                    let d = indegree.get_mut(t).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(*t);
                    }
                }
            }
        }
        if order.len() == self.nodes.len() {
            Some(order)
        } else {
            None
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Standard d-separation: true iff every undirected path between `a` and
    /// `b` is blocked by `c`. A chain or fork node blocks when it is in `c`;
    /// a collider blocks when neither it nor any of its descendants is in
    /// `c`. Requires an acyclic graph and pairwise disjoint sets.
    pub fn d_separated(
        &self,
        a: &BTreeSet<NodeId>,
        b: &BTreeSet<NodeId>,
        c: &BTreeSet<NodeId>,
    ) -> Result<bool> {
        if !self.is_acyclic() {
            return Err(EngineError::CyclicGraph);
        }
        for n in a.iter().chain(b).chain(c) {
            self.check_node(*n)?;
        }
        if a.intersection(b).next().is_some()
            || a.intersection(c).next().is_some()
            || b.intersection(c).next().is_some()
        {
            return Err(EngineError::OverlappingSets);
        }
        // Descendant sets of potential colliders, computed once.
        let mut desc: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for n in &self.nodes {
            let mut seed = BTreeSet::new();
            seed.insert(*n);
            desc.insert(*n, self.descendants(&seed)?);
        }
        for start in a {
            let mut path = alloc::vec![*start];
            if self.some_active_path(&mut path, b, c, &desc) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Depth-first enumeration of simple undirected paths from the tail of
    /// `path`, returning true as soon as one path into `b` is active given
    /// `c`.
    fn some_active_path(
        &self,
        path: &mut Vec<NodeId>,
        b: &BTreeSet<NodeId>,
        c: &BTreeSet<NodeId>,
        desc: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    ) -> bool {
        let last = *path.last().unwrap();
        let mut neighbours: Vec<NodeId> = Vec::new();
        for (s, t) in &self.edges {
            if *s == last && !path.contains(t) {
                neighbours.push(*t);
            }
            if *t == last && !path.contains(s) {
                neighbours.push(*s);
            }
        }
        for next in neighbours {
            path.push(next);
            let ok = if b.contains(&next) {
                path_active(path, c, desc, self)
            } else {
                self.some_active_path(path, b, c, desc)
            };
            path.pop();
            if ok {
                return true;
            }
        }
        false
    }

    /// Partitions the edge set relative to `module`.
    pub fn classify_edges(&self, module: &BTreeSet<NodeId>) -> Result<EdgeClassification> {
        for n in module {
            self.check_node(*n)?;
        }
        let mut out = EdgeClassification {
            interior: BTreeSet::new(),
            exterior: BTreeSet::new(),
            incoming: BTreeSet::new(),
            outgoing: BTreeSet::new(),
        };
        for e in &self.edges {
            let (s_in, t_in) = (module.contains(&e.0), module.contains(&e.1));
            match (s_in, t_in) {
                (true, true) => out.interior.insert(*e),
                (false, false) => out.exterior.insert(*e),
                (false, true) => out.incoming.insert(*e),
                (true, false) => out.outgoing.insert(*e),
            };
        }
        Ok(out)
    }
}

/// Checks whether a concrete undirected path is active (unblocked) given
/// the conditioning set.
fn path_active(
    path: &[NodeId],
    c: &BTreeSet<NodeId>,
    desc: &BTreeMap<NodeId, BTreeSet<NodeId>>,
    g: &CausalGraph,
) -> bool {
    for k in 1..path.len().saturating_sub(1) {
        let (prev, mid, next) = (path[k - 1], path[k], path[k + 1]);
        let collider = g.has_edge(prev, mid) && g.has_edge(next, mid);
        if collider {
            let opens = c.contains(&mid) || desc[&mid].iter().any(|d| c.contains(d));
            if !opens {
                return false;
            }
        } else if c.contains(&mid) {
            return false;
        }
    }
    true
}
