// SPDX-License-Identifier: Apache-2.0

//! Immutable undirected graphs in compressed adjacency form.
//!
//! A [`Graph`] is always preprocessed: self-loops and duplicate edges are
//! dropped, nodes without edges do not exist, and node IDs are the dense range
//! `0..n`. The original (file) IDs are kept alongside for reporting only; all
//! computation happens on dense IDs.

mod io;
pub mod oracle;
mod partition;

pub use io::{CACHE_MAGIC, CACHE_VERSION};
pub use oracle::{degeneracy_order, exact_core_numbers, exact_triangle_count, CoreLabeling};
pub use partition::Partition;

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

/// Dense node identifier, `0..n`.
pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected two integer node IDs, found {content:?}")]
    Malformed { line: usize, content: String },
    #[error("graph is empty after removing self-loops, duplicates and isolated nodes")]
    Empty,
    #[error("graph has {0} nodes, more than fit in a 32-bit node ID")]
    TooLarge(usize),
    #[error("invalid binary graph cache: {0}")]
    BadCache(String),
    #[error("worker count {workers} must be between 1 and n = {n}")]
    WorkerCount { workers: usize, n: usize },
}

/// Undirected simple graph in CSR layout.
///
/// Invariants: no self-loops, no duplicates, no isolated nodes, every
/// adjacency list sorted ascending, and `u ∈ adj(v) ⇔ v ∈ adj(u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    original_ids: Vec<u64>,
}

impl Graph {
    /// Builds a graph from raw (possibly messy) edges over arbitrary IDs.
    ///
    /// Both `(u, v)` and `(v, u)` collapse into one undirected edge. Dense IDs
    /// are assigned in ascending order of original ID.
    pub fn from_edges<I>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut pairs: Vec<(u64, u64)> = edges
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        if pairs.is_empty() {
            return Err(GraphError::Empty);
        }

        let mut original_ids: Vec<u64> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
        original_ids.sort_unstable();
        original_ids.dedup();
        if original_ids.len() > NodeId::MAX as usize {
            return Err(GraphError::TooLarge(original_ids.len()));
        }
        let dense: HashMap<u64, NodeId> = original_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i as NodeId))
            .collect();

        let dense_pairs = pairs.iter().map(|(u, v)| (dense[u], dense[v]));
        Ok(Self::from_dense_pairs(original_ids, dense_pairs))
    }

    /// Builds a graph whose nodes are exactly `0..n` with identity original IDs.
    ///
    /// Used for fixtures; fails with [`GraphError::Empty`] if any node in
    /// `0..n` ends up isolated, because isolated nodes are not representable.
    pub fn from_dense_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let g = Self::from_edges(edges.iter().map(|&(u, v)| (u as u64, v as u64)))?;
        if g.n() != n {
            return Err(GraphError::Empty);
        }
        Ok(g)
    }

    /// `pairs` must be deduplicated, loop-free and use dense IDs.
    fn from_dense_pairs(
        original_ids: Vec<u64>,
        pairs: impl Iterator<Item = (NodeId, NodeId)> + Clone,
    ) -> Self {
        let n = original_ids.len();
        let mut degree = vec![0usize; n];
        for (u, v) in pairs.clone() {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0 as NodeId; offsets[n]];
        for (u, v) in pairs {
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Graph {
            offsets,
            neighbors,
            original_ids,
        }
    }

    pub fn n(&self) -> usize {
        self.original_ids.len()
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Sorted adjacency list of `v`.
    ///
    /// This is the raw private input of node `v`. Algorithm code running
    /// inside the simulated workers never calls this directly; it goes through
    /// [`crate::sim::WorkerContext::release`], which records a privacy charge.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n() as NodeId).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Original ID of dense node `v`, as it appeared in the input.
    pub fn original_id(&self, v: NodeId) -> u64 {
        self.original_ids[v as usize]
    }

    pub fn original_ids(&self) -> &[u64] {
        &self.original_ids
    }

    /// Every undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.n() as NodeId).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[NodeId]) {
        (&self.offsets, &self.neighbors)
    }

    pub(crate) fn from_raw_parts(
        offsets: Vec<usize>,
        neighbors: Vec<NodeId>,
        original_ids: Vec<u64>,
    ) -> Result<Self, GraphError> {
        let g = Graph {
            offsets,
            neighbors,
            original_ids,
        };
        g.validate().map_err(GraphError::BadCache)?;
        Ok(g)
    }

    /// Checks every structural invariant. Returns a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.n();
        if n == 0 {
            return Err("no nodes".into());
        }
        if self.offsets.len() != n + 1 || self.offsets[0] != 0 {
            return Err("offset array has wrong shape".into());
        }
        if *self.offsets.last().unwrap() != self.neighbors.len() {
            return Err("offsets do not cover the neighbor array".into());
        }
        if !self.neighbors.len().is_multiple_of(2) {
            return Err("odd number of adjacency entries".into());
        }
        for v in 0..n {
            if self.offsets[v] > self.offsets[v + 1] {
                return Err(format!("offsets decrease at node {v}"));
            }
        }
        for v in 0..n as NodeId {
            let adj = self.neighbors(v);
            if adj.is_empty() {
                return Err(format!("node {v} is isolated"));
            }
            for w in adj.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("adjacency of {v} is not strictly ascending"));
                }
            }
            for &u in adj {
                if u as usize >= n {
                    return Err(format!("node {v} has out-of-range neighbor {u}"));
                }
                if u == v {
                    return Err(format!("self-loop at {v}"));
                }
                if self.neighbors(u).binary_search(&v).is_err() {
                    return Err(format!("edge {v}-{u} is not symmetric"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preprocessing_drops_loops_and_duplicates() {
        let g = Graph::from_edges([(0, 1), (1, 2), (2, 0), (2, 2), (0, 1)]).unwrap();
        assert_eq!((g.n(), g.m()), (3, 3));
        g.validate().unwrap();
    }

    #[test]
    fn ids_are_remapped_in_ascending_order() {
        let g = Graph::from_edges([(100, 7), (7, 42)]).unwrap();
        assert_eq!(g.original_ids(), &[7, 42, 100]);
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert!(g.has_edge(2, 0));
        assert!(!g.has_edge(1, 2));
    }

    #[test]
    fn only_self_loops_is_empty() {
        assert!(matches!(Graph::from_edges([(5, 5)]), Err(GraphError::Empty)));
    }

    #[test]
    fn node_only_in_self_loop_is_dropped() {
        let g = Graph::from_edges([(1, 2), (3, 3)]).unwrap();
        assert_eq!(g.n(), 2);
    }

    #[test]
    fn edges_iterates_each_edge_once() {
        let g = Graph::from_dense_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let e: Vec<_> = g.edges().collect();
        assert_eq!(e, vec![(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]);
        assert_eq!(g.max_degree(), 3);
    }
}
