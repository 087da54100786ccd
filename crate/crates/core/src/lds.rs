// SPDX-License-Identifier: Apache-2.0

//! The level data structure (LDS).
//!
//! Every node sits on a level, starting at 0. Levels are grouped into blocks
//! of `L` consecutive levels; group `g` has the cut `(1 + φ)^g`, and a node
//! climbs out of level `r` only if its (noisy) count of neighbors on level `r`
//! exceeds the cut of `r`'s group. The final level determines the core
//! estimate, and sorting by level gives a low out-degree ordering.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum LdsError {
    #[error("approximation parameter eta must be positive and finite, got {0}")]
    Eta(f64),
    #[error("graph must have at least one node")]
    EmptyGraph,
}

/// Geometry derived from `n` and the approximation parameter `η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LdsParams {
    pub n: usize,
    pub eta: f64,
    /// Cut base minus one, `η/5`.
    pub phi: f64,
    /// Levels per group, `max(1, ⌈⌈log_{1+φ} n⌉ / 4⌉)`.
    pub levels_per_group: u32,
    /// `(5 − 2η)·η/(η + 5)²`.
    pub lambda: f64,
    /// `⌈log_{1+φ} n⌉`.
    pub log_n: u32,
}

impl LdsParams {
    pub fn new(n: usize, eta: f64) -> Result<Self, LdsError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(LdsError::Eta(eta));
        }
        if n == 0 {
            return Err(LdsError::EmptyGraph);
        }
        let phi = eta / 5.0;
        let log_n = ceil_log(n as f64, 1.0 + phi);
        let levels_per_group = log_n.div_ceil(4).max(1);
        let lambda = (5.0 - 2.0 * eta) * eta / ((eta + 5.0) * (eta + 5.0));
        Ok(LdsParams {
            n,
            eta,
            phi,
            levels_per_group,
            lambda,
            log_n,
        })
    }

    /// Group of round (or level) `r`: `⌊r/L⌋`.
    pub fn group_index(&self, r: u32) -> u32 {
        r / self.levels_per_group
    }

    /// `(1 + φ)^g`.
    pub fn group_cut(&self, g: u32) -> f64 {
        group_cut(g, self.phi)
    }

    /// Core estimate of a node on `level`:
    /// `(2 + λ)·(1 + φ)^{max(⌊(level + 1)/L⌋ − 1, 0)}`.
    pub fn estimate(&self, level: u32) -> f64 {
        let exponent = ((level + 1) / self.levels_per_group).saturating_sub(1);
        (2.0 + self.lambda) * self.group_cut(exponent)
    }
}

pub fn group_cut(g: u32, phi: f64) -> f64 {
    (1.0 + phi).powi(g as i32)
}

/// `⌈log_base x⌉` for `x ≥ 1`, robust to floating-point error at exact powers.
fn ceil_log(x: f64, base: f64) -> u32 {
    if x <= 1.0 {
        return 0;
    }
    let mut k = (x.ln() / base.ln()).ceil().max(0.0) as u32;
    while k > 0 && base.powi(k as i32 - 1) >= x {
        k -= 1;
    }
    while base.powi(k as i32) < x {
        k += 1;
    }
    k
}

/// Per-node levels, mutated only by the coordinator between rounds.
#[derive(Clone, Debug)]
pub struct LevelDataStructure {
    levels: Vec<u32>,
    params: LdsParams,
}

impl LevelDataStructure {
    pub fn new(params: LdsParams) -> Self {
        LevelDataStructure {
            levels: vec![0; params.n],
            params,
        }
    }

    pub fn params(&self) -> &LdsParams {
        &self.params
    }

    pub fn level(&self, v: NodeId) -> u32 {
        self.levels[v as usize]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Moves `v` up exactly one level.
    pub fn level_increase(&mut self, v: NodeId) {
        self.levels[v as usize] += 1;
    }

    /// Immutable copy for publication to workers.
    pub fn snapshot(&self) -> Arc<[u32]> {
        self.levels.as_slice().into()
    }

    pub fn estimate_core_numbers(&self) -> Vec<f64> {
        self.levels.iter().map(|&l| self.params.estimate(l)).collect()
    }

    pub fn ordering(&self) -> Ordering {
        Ordering::from_levels(&self.levels)
    }
}

/// Total order on nodes: by level ascending, ties broken by node ID.
///
/// An edge `{u, v}` is oriented from `u` to `v` iff `rank[v] > rank[u]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ordering {
    /// Nodes in order.
    pub order: Vec<NodeId>,
    /// Position of each node in `order`.
    pub rank: Vec<u32>,
}

impl Ordering {
    pub fn from_levels(levels: &[u32]) -> Self {
        let mut order: Vec<NodeId> = (0..levels.len() as NodeId).collect();
        order.sort_by_key(|&v| (levels[v as usize], v));
        let mut rank = vec![0u32; levels.len()];
        for (i, &v) in order.iter().enumerate() {
            rank[v as usize] = i as u32;
        }
        Ordering { order, rank }
    }

    pub fn is_outgoing(&self, from: NodeId, to: NodeId) -> bool {
        self.rank[to as usize] > self.rank[from as usize]
    }

    /// Out-degree of every node of `g` under this orientation.
    pub fn out_degrees(&self, g: &crate::graph::Graph) -> Vec<usize> {
        (0..g.n() as NodeId)
            .map(|v| g.neighbors(v).iter().filter(|&&u| self.is_outgoing(v, u)).count())
            .collect()
    }
}
