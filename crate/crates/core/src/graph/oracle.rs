// SPDX-License-Identifier: Apache-2.0

//! Exact, non-private graph statistics used as ground truth.

use serde::Serialize;

use super::{Graph, NodeId};

/// Exact core number of every node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoreLabeling {
    pub core: Vec<u32>,
}

impl CoreLabeling {
    /// Maximum core number, which equals the graph's degeneracy.
    pub fn degeneracy(&self) -> u32 {
        self.core.iter().copied().max().unwrap_or(0)
    }
}

/// Min-degree peeling in O(n + m) with bucketed degrees.
///
/// Returns the nodes in removal order together with each node's core number.
fn peel(g: &Graph) -> (Vec<NodeId>, Vec<u32>) {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n as NodeId).map(|v| g.degree(v)).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);

    // bin[d] = first slot of degree d in `order`
    let mut bin = vec![0usize; max_deg + 2];
    for &d in &degree {
        bin[d + 1] += 1;
    }
    for d in 1..bin.len() {
        bin[d] += bin[d - 1];
    }
    let mut order = vec![0 as NodeId; n];
    let mut pos = vec![0usize; n];
    let mut fill = bin.clone();
    for v in 0..n {
        let d = degree[v];
        pos[v] = fill[d];
        order[fill[d]] = v as NodeId;
        fill[d] += 1;
    }

    for i in 0..n {
        let v = order[i];
        for &u in g.neighbors(v) {
            let u = u as usize;
            if degree[u] > degree[v as usize] {
                let du = degree[u];
                let first = bin[du];
                let w = order[first];
                if w as usize != u {
                    order.swap(pos[u], first);
                    pos[w as usize] = pos[u];
                    pos[u] = first;
                }
                bin[du] += 1;
                degree[u] -= 1;
            }
        }
    }
    let core = degree.into_iter().map(|d| d as u32).collect();
    (order, core)
}

pub fn exact_core_numbers(g: &Graph) -> CoreLabeling {
    CoreLabeling { core: peel(g).1 }
}

/// Nodes in min-degree peeling order; orienting edges along it gives out-degree at most the degeneracy.
pub fn degeneracy_order(g: &Graph) -> Vec<NodeId> {
    peel(g).0
}

/// Exact number of triangles.
///
/// Edges are oriented along the degeneracy order and each triangle is found
/// once, at its earliest vertex, by merging sorted out-lists.
pub fn exact_triangle_count(g: &Graph) -> u64 {
    let n = g.n();
    let mut rank = vec![0usize; n];
    for (i, v) in degeneracy_order(g).into_iter().enumerate() {
        rank[v as usize] = i;
    }
    let out: Vec<Vec<NodeId>> = (0..n as NodeId)
        .map(|v| {
            g.neighbors(v)
                .iter()
                .copied()
                .filter(|&u| rank[u as usize] > rank[v as usize])
                .collect()
        })
        .collect();

    let mut total = 0u64;
    for v in 0..n {
        for &u in &out[v] {
            total += sorted_intersection_len(&out[v], &out[u as usize]);
        }
    }
    total
}

pub(crate) fn sorted_intersection_len(a: &[NodeId], b: &[NodeId]) -> u64 {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}
