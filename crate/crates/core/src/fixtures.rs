// SPDX-License-Identifier: Apache-2.0

//! Small deterministic graphs for tests, examples and desk-scale experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, NodeId};

fn build(n: usize, edges: &[(NodeId, NodeId)]) -> Graph {
    Graph::from_dense_edges(n, edges).expect("fixture has no isolated nodes")
}

pub fn complete(n: usize) -> Graph {
    let mut e = Vec::new();
    for u in 0..n as NodeId {
        for v in u + 1..n as NodeId {
            e.push((u, v));
        }
    }
    build(n, &e)
}

pub fn cycle(n: usize) -> Graph {
    let e: Vec<_> = (0..n as NodeId).map(|v| (v, (v + 1) % n as NodeId)).collect();
    build(n, &e)
}

pub fn path(n: usize) -> Graph {
    let e: Vec<_> = (1..n as NodeId).map(|v| (v - 1, v)).collect();
    build(n, &e)
}

/// Node 0 joined to `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    let e: Vec<_> = (1..=leaves as NodeId).map(|v| (0, v)).collect();
    build(leaves + 1, &e)
}

pub fn petersen() -> Graph {
    let mut e = Vec::new();
    for i in 0..5 {
        e.push((i, (i + 1) % 5));
        e.push((i, i + 5));
        e.push((i + 5, (i + 2) % 5 + 5));
    }
    build(10, &e)
}

/// A 4-degenerate graph with nodes of every core number 1..=4 and 15 triangles:
/// a K5, a K4 hanging off it, a triangle hanging off the K4 and two pendant paths.
pub fn layered_cores() -> Graph {
    let mut e = Vec::new();
    for u in 0..5 {
        for v in u + 1..5 {
            e.push((u, v));
        }
    }
    for u in 5..9 {
        for v in u + 1..9 {
            e.push((u, v));
        }
    }
    e.extend([(5, 0), (9, 10), (10, 11), (11, 9), (9, 5), (12, 9), (12, 13), (14, 0)]);
    build(15, &e)
}

/// Erdős–Rényi `G(n, p)`; isolated nodes are dropped, so the result may have fewer than `n` nodes.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = Vec::new();
    for u in 0..n as u64 {
        for v in u + 1..n as u64 {
            if rng.random::<f64>() < p {
                e.push((u, v));
            }
        }
    }
    if e.is_empty() {
        e.push((0, 1));
    }
    Graph::from_edges(e).expect("nonempty")
}

/// Chung–Lu graph with a power-law expected degree sequence.
///
/// Node `i` gets weight `∝ (i + i0)^(-1/(exponent-1))`, scaled so the mean
/// expected degree is `avg_degree`; the heaviest node is capped at
/// `max_degree`. Isolated nodes are dropped.
pub fn chung_lu(n: usize, avg_degree: f64, max_degree: f64, exponent: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = 1.0 / (exponent - 1.0);
    let raw: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-alpha)).collect();
    let sum: f64 = raw.iter().sum();
    let scale = avg_degree * n as f64 / sum;
    let w: Vec<f64> = raw.iter().map(|x| (x * scale).min(max_degree)).collect();
    let total: f64 = w.iter().sum();
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = (w[u] * w[v] / total).min(1.0);
            if rng.random::<f64>() < p {
                e.push((u as u64, v as u64));
            }
        }
    }
    if e.is_empty() {
        e.push((0, 1));
    }
    Graph::from_edges(e).expect("nonempty")
}

/// Random graph on at most `max_n` nodes with a random density, for property tests.
pub fn random_small(max_n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_5a11);
    let n = rng.random_range(2..=max_n);
    let p = rng.random_range(0.05..0.9);
    gnp(n, p, rng.random())
}
