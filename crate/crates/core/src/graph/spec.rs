//! Graph descriptions and the parity-projection rewrite rule.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphError {
    SelfLoop(usize),
    UnknownVertex(usize),
    /// Lattice dimensions below the supported minimum.
    TooSmall,
    /// Sheets cannot be fused (no shared interior link sites).
    IncompatibleSheets,
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::SelfLoop(v) => write!(f, "self-loop on vertex {v}"),
            GraphError::UnknownVertex(v) => write!(f, "edge references unknown vertex {v}"),
            GraphError::TooSmall => write!(f, "lattice dimensions too small"),
            GraphError::IncompatibleSheets => {
                write!(f, "consecutive sheets share no interior link sites")
            }
        }
    }
}

/// Primary/dual sublattice role of a cluster-state qubit: face sites have two
/// odd coordinates, edge sites one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sublattice {
    Face,
    Edge,
}

/// Simple undirected graph over vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphSpec {
    vertices: BTreeSet<usize>,
    edges: BTreeSet<(usize, usize)>,
}

impl GraphSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph on vertices 0..n with no edges.
    pub fn with_vertices(n: usize) -> Self {
        GraphSpec { vertices: (0..n).collect(), edges: BTreeSet::new() }
    }

    pub fn add_vertex(&mut self, v: usize) {
        self.vertices.insert(v);
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        for v in [a, b] {
            if !self.vertices.contains(&v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        self.edges.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.edges.remove(&(a.min(b), a.max(b)));
    }

    /// Removes a vertex together with its incident edges.
    pub fn remove_vertex(&mut self, v: usize) {
        self.vertices.remove(&v);
        self.edges.retain(|&(a, b)| a != v && b != v);
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn vertices(&self) -> &BTreeSet<usize> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    /// Induced subgraph on a vertex subset, with vertices renamed by `rename`.
    pub fn induced<F>(&self, keep: &BTreeSet<usize>, mut rename: F) -> GraphSpec
    where
        F: FnMut(usize) -> usize,
    {
        let mut names: BTreeMap<usize, usize> = BTreeMap::new();
        let mut out = GraphSpec::new();
        for &v in keep {
            let n = rename(v);
            names.insert(v, n);
            out.add_vertex(n);
        }
        for &(a, b) in &self.edges {
            if let (Some(&na), Some(&nb)) = (names.get(&a), names.get(&b)) {
                out.add_edge(na, nb).expect("vertices added above");
            }
        }
        out
    }
}

/// Rewrites a graph for a parity projection on `(q1, q2)`: the inheritor
/// takes over the pair's combined connections and the other vertex keeps a
/// single dangling bond to the inheritor.
///
/// Connections held by *both* vertices cancel rather than merge (symmetric
/// difference): a common neighbor ends up disconnected from the pair, which is
/// what the tableau dictates; for the disjoint neighborhoods arising in the
/// construction schedules this coincides with the plain union.
pub fn pp_graph_rule(
    g: &GraphSpec,
    q1: usize,
    q2: usize,
    inheritor: usize,
) -> Result<GraphSpec, GraphError> {
    if q1 == q2 {
        return Err(GraphError::SelfLoop(q1));
    }
    for v in [q1, q2] {
        if !g.vertices().contains(&v) {
            return Err(GraphError::UnknownVertex(v));
        }
    }
    assert!(inheritor == q1 || inheritor == q2, "inheritor must be one of the pair");
    let other = if inheritor == q1 { q2 } else { q1 };

    let n1 = g.neighbors(q1);
    let n2 = g.neighbors(q2);
    let inherited: Vec<usize> = n1
        .symmetric_difference(&n2)
        .copied()
        .filter(|v| *v != q1 && *v != q2)
        .collect();

    let mut out = g.clone();
    for v in n1 {
        out.remove_edge(q1, v);
    }
    for v in n2 {
        out.remove_edge(q2, v);
    }
    for v in inherited {
        out.add_edge(inheritor, v)?;
    }
    out.add_edge(inheritor, other)?;
    Ok(out)
}
