//! Immutable undirected graph in compressed sparse row form.

mod features;
pub mod io;

pub use features::FeatureMatrix;

use crate::error::{Error, Result};

/// Dense, zero-based node identifier.
pub type NodeId = u32;

/// An undirected pair of nodes. Canonical edges have `0 < 1`.
pub type Edge = (NodeId, NodeId);

/// Orders an edge so that the smaller endpoint comes first.
#[inline]
pub fn canonical(u: NodeId, v: NodeId) -> Edge {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Counts of input pairs discarded while building a [`Graph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Simple undirected graph with sorted, duplicate-free neighbor lists.
///
/// Invariants: adjacency is symmetric, there are no self loops, every
/// neighbor list is strictly increasing and `offsets[n] == 2 * num_edges`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    num_edges: usize,
}

impl Graph {
    /// Builds a graph over `num_nodes` nodes from arbitrary edge pairs.
    ///
    /// Mirrored pairs, repeated pairs and self loops are dropped and counted
    /// in the returned [`BuildStats`].
    pub fn from_edges(num_nodes: usize, edges: &[Edge]) -> Result<(Graph, BuildStats)> {
        if num_nodes > NodeId::MAX as usize {
            return Err(Error::invalid(format!("{num_nodes} nodes exceed the u32 id space")));
        }
        let mut stats = BuildStats::default();
        let mut canon = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= num_nodes {
                    return Err(Error::NodeOutOfRange {
                        node: w.into(),
                        num_nodes,
                    });
                }
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            canon.push(canonical(u, v));
        }
        canon.sort_unstable();
        let before = canon.len();
        canon.dedup();
        stats.duplicates = before - canon.len();
        if stats.self_loops > 0 || stats.duplicates > 0 {
            log::debug!(
                "graph build dropped {} self loops and {} duplicate pairs",
                stats.self_loops,
                stats.duplicates
            );
        }
        Ok((Self::from_canonical_sorted(num_nodes, &canon), stats))
    }

    /// `edges` must be canonical, sorted and duplicate-free.
    fn from_canonical_sorted(num_nodes: usize, edges: &[Edge]) -> Graph {
        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        let mut acc = 0;
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets[..num_nodes].to_vec();
        let mut neighbors = vec![0 as NodeId; acc];
        // Sorted (u, v) with u < v: pushing v into u and u into v in this
        // order leaves each list increasing.
        for &(u, v) in edges {
            neighbors[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
        }
        for &(u, v) in edges {
            neighbors[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        for i in 0..num_nodes {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Graph {
            offsets,
            neighbors,
            num_edges: edges.len(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    #[inline]
    pub fn check_node(&self, i: NodeId) -> Result<()> {
        if (i as usize) < self.num_nodes() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: i.into(),
                num_nodes: self.num_nodes(),
            })
        }
    }

    /// Sorted neighbor list of `i`.
    pub fn neighbors(&self, i: NodeId) -> Result<&[NodeId]> {
        self.check_node(i)?;
        Ok(self.adj(i))
    }

    /// Neighbor slice without the range check. Panics on an invalid id.
    #[inline]
    pub(crate) fn adj(&self, i: NodeId) -> &[NodeId] {
        let i = i as usize;
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: NodeId) -> Result<usize> {
        self.check_node(i)?;
        Ok(self.adj(i).len())
    }

    #[inline]
    pub(crate) fn deg(&self, i: NodeId) -> usize {
        let i = i as usize;
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Whether `{u, v}` is an edge. Out-of-range ids are simply not edges.
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        if u as usize >= self.num_nodes() || v as usize >= self.num_nodes() {
            return false;
        }
        let (a, b) = if self.deg(u) <= self.deg(v) { (u, v) } else { (v, u) };
        self.adj(a).binary_search(&b).is_ok()
    }

    /// Sorted intersection `N(i) ∩ N(j)`.
    pub fn intersect_neighbors(&self, i: NodeId, j: NodeId) -> Result<Vec<NodeId>> {
        self.check_node(i)?;
        self.check_node(j)?;
        let mut out = Vec::new();
        self.for_each_common(i, j, |k| out.push(k));
        Ok(out)
    }

    /// Visits every common neighbor of `i` and `j` in increasing order.
    #[inline]
    pub(crate) fn for_each_common(&self, i: NodeId, j: NodeId, mut f: impl FnMut(NodeId)) {
        let (a, b) = (self.adj(i), self.adj(j));
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    f(a[x]);
                    x += 1;
                    y += 1;
                }
            }
        }
    }

    /// Canonical edges `(u, v)` with `u < v`, in increasing order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.num_nodes() as NodeId).flat_map(move |u| {
            self.adj(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// A new graph on the same node set restricted to `edges`.
    pub fn with_edges(&self, edges: &[Edge]) -> Result<Graph> {
        Ok(Graph::from_edges(self.num_nodes(), edges)?.0)
    }
}
