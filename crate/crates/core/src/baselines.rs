// SPDX-License-Identifier: Apache-2.0

//! Comparison algorithms.
//!
//! * [`kcore_baseline`]: the level data structure without degree
//!   thresholding or bias terms, so every node may climb through all
//!   `4·⌈log_{1+φ} n⌉² − 1` levels and its noise is scaled accordingly.
//! * [`kcore_rr`]: randomized response on the whole adjacency matrix, then
//!   peeling of the noisy graph with degrees corrected for the flips.
//! * [`tcount_rr`]: randomized response, then the unbiased triangle count
//!   `Σ_{j<k<l} t_jk·t_kl·t_jl` over debiased bits `t`, in closed form.
//!
//! The RR-based baselines materialize an `n × n` bit matrix and refuse
//! graphs above [`RR_NODE_LIMIT`] nodes.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::dp::{debias_weights, flip_probability, BudgetLedger, LedgerReport, LedgerViolation, NoiseStream};
use crate::graph::{Graph, NodeId};
use crate::kcore::{finish, run_kcore, KcoreConfig, KcoreError, KcoreOutput, LevelBias};
use crate::sim::{RoundStats, Runtime, SimError};
use crate::triangle::{rr_round, NoisyEdgeMatrix};

pub const KCORE_RR_LABEL: &str = "kcore_rr.rr";
pub const TCOUNT_RR_LABEL: &str = "tcount_rr.rr";

/// Node limit for materializing a randomized-response graph.
pub const RR_NODE_LIMIT: usize = 100_000;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid baseline configuration: {0}")]
    Config(String),
    #[error("graph with {n} nodes exceeds the {limit}-node randomized-response guard")]
    OomGuard { n: usize, limit: usize },
    #[error(transparent)]
    Kcore(#[from] KcoreError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ledger(#[from] LedgerViolation),
}

/// Settings shared by the RR baselines.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RrConfig {
    pub eps: f64,
    pub workers: usize,
    pub seed: u64,
    /// When false, randomized response keeps every bit.
    pub noise: bool,
}

impl Default for RrConfig {
    fn default() -> Self {
        RrConfig {
            eps: 1.0,
            workers: 1,
            seed: 0,
            noise: true,
        }
    }
}

/// The k-CoreD configuration of the threshold-free baseline.
pub fn baseline_config(cfg: &KcoreConfig) -> KcoreConfig {
    KcoreConfig {
        thresholding: false,
        bias: 0.0,
        level_bias: LevelBias::Off,
        ..cfg.clone()
    }
}

pub fn kcore_baseline(g: &Graph, cfg: &KcoreConfig) -> Result<KcoreOutput, BaselineError> {
    kcore_baseline_until(g, cfg, None)
}

pub fn kcore_baseline_until(
    g: &Graph,
    cfg: &KcoreConfig,
    deadline: Option<Instant>,
) -> Result<KcoreOutput, BaselineError> {
    let cfg = baseline_config(cfg);
    let mut rt = Runtime::new(g, cfg.workers)?.with_deadline(deadline);
    let run = run_kcore(&mut rt, &cfg)?;
    Ok(finish(rt, run, cfg.eps)?)
}

#[derive(Debug)]
pub struct RrOutput<T> {
    pub result: T,
    pub stats: RoundStats,
    pub ledger: BudgetLedger,
    pub report: LedgerReport,
}

fn rr_matrix<'g>(
    g: &'g Graph,
    cfg: &RrConfig,
    label: &'static str,
    deadline: Option<Instant>,
) -> Result<(NoisyEdgeMatrix, Runtime<'g>), BaselineError> {
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(BaselineError::Config(format!("eps must be positive, got {}", cfg.eps)));
    }
    if g.n() > RR_NODE_LIMIT {
        return Err(BaselineError::OomGuard {
            n: g.n(),
            limit: RR_NODE_LIMIT,
        });
    }
    let mut rt = Runtime::new(g, cfg.workers)?.with_deadline(deadline);
    let stream = cfg.noise.then(|| NoiseStream::new(cfg.seed));
    let m = rr_round(&mut rt, label, cfg.eps, stream, true)?.expect("stored matrix");
    Ok((m, rt))
}

fn audit<T>(rt: Runtime<'_>, result: T, eps: f64) -> Result<RrOutput<T>, BaselineError> {
    // post-processing happens outside rounds, so check the clock once more
    rt.check_deadline()?;
    let stats = rt.stats();
    let ledger = rt.into_ledger();
    let report = ledger.assert_within(eps)?;
    Ok(RrOutput {
        result,
        stats,
        ledger,
        report,
    })
}

/// Adjacency lists of the graph encoded by a noisy matrix.
pub fn noisy_adjacency(m: &NoisyEdgeMatrix) -> Vec<Vec<NodeId>> {
    let n = m.n();
    let mut adj = vec![Vec::new(); n];
    for j in 0..n as NodeId {
        for i in m.row(j).iter_ones() {
            let k = j + 1 + i as NodeId;
            adj[j as usize].push(k);
            adj[k as usize].push(j);
        }
    }
    adj
}

/// Induced degree corrected for randomized response:
/// `(d − (s − 1)·q)/(1 − 2q)` among `s` remaining nodes, flip probability `q`.
pub fn corrected_degree(noisy_degree: usize, remaining: usize, q: f64) -> f64 {
    (noisy_degree as f64 - (remaining as f64 - 1.0) * q) / (1.0 - 2.0 * q)
}

/// Peels the noisy graph by minimum degree. Each node's estimate is the
/// largest corrected degree seen at any removal up to and including its
/// own, clamped at 0.
pub fn rr_peel(adj: &[Vec<NodeId>], q: f64) -> Vec<f64> {
    let n = adj.len();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, NodeId)>> =
        (0..n as NodeId).map(|v| Reverse((degree[v as usize], v))).collect();
    let mut estimate = vec![0.0; n];
    let mut running: f64 = 0.0;
    let mut remaining = n;
    while let Some(Reverse((d, v))) = heap.pop() {
        if removed[v as usize] || d != degree[v as usize] {
            continue;
        }
        running = running.max(corrected_degree(d, remaining, q));
        estimate[v as usize] = running.max(0.0);
        removed[v as usize] = true;
        remaining -= 1;
        for &u in &adj[v as usize] {
            if !removed[u as usize] {
                degree[u as usize] -= 1;
                heap.push(Reverse((degree[u as usize], u)));
            }
        }
    }
    estimate
}

/// RR peeling baseline; returns one core estimate per node.
pub fn kcore_rr(g: &Graph, cfg: &RrConfig) -> Result<RrOutput<Vec<f64>>, BaselineError> {
    kcore_rr_until(g, cfg, None)
}

pub fn kcore_rr_until(
    g: &Graph,
    cfg: &RrConfig,
    deadline: Option<Instant>,
) -> Result<RrOutput<Vec<f64>>, BaselineError> {
    let (m, rt) = rr_matrix(g, cfg, KCORE_RR_LABEL, deadline)?;
    let q = if cfg.noise { flip_probability(cfg.eps) } else { 0.0 };
    let estimates = rr_peel(&noisy_adjacency(&m), q);
    audit(rt, estimates, cfg.eps)
}

/// Sufficient statistics of a noisy graph for the RR triangle estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NoisyCounts {
    pub n: u64,
    pub edges: u64,
    /// `Σ_v C(d_v, 2)`: paths of length two, by center.
    pub wedges: u64,
    pub triangles: u64,
}

impl NoisyCounts {
    pub fn of(m: &NoisyEdgeMatrix) -> Self {
        let n = m.n();
        let words = n.div_ceil(64);
        // full symmetric rows as aligned bitsets
        let mut rows = vec![0u64; n * words];
        let mut degree = vec![0u64; n];
        for j in 0..n {
            for i in m.row(j as NodeId).iter_ones() {
                let k = j + 1 + i;
                rows[j * words + k / 64] |= 1 << (k % 64);
                rows[k * words + j / 64] |= 1 << (j % 64);
                degree[j] += 1;
                degree[k] += 1;
            }
        }
        let mut triangles = 0u64;
        for j in 0..n {
            let rj = &rows[j * words..(j + 1) * words];
            for i in m.row(j as NodeId).iter_ones() {
                let k = j + 1 + i;
                let rk = &rows[k * words..(k + 1) * words];
                // common neighbors l > k
                let first = (k + 1) / 64;
                for w in first..words {
                    let mut x = rj[w] & rk[w];
                    if w == first {
                        x &= u64::MAX.checked_shl(((k + 1) % 64) as u32).unwrap_or(0);
                    }
                    triangles += x.count_ones() as u64;
                }
            }
        }
        NoisyCounts {
            n: n as u64,
            edges: degree.iter().sum::<u64>() / 2,
            wedges: degree.iter().map(|&d| d * d.saturating_sub(1) / 2).sum(),
            triangles,
        }
    }

    fn triples(&self) -> u64 {
        let n = self.n;
        if n < 3 {
            0
        } else {
            n * (n - 1) * (n - 2) / 6
        }
    }

    /// `a³T + a²c·W + a·c²·(n−2)·E + c³·C(n,3)`: the sum over all triples of
    /// `Π (a·y + c)` over the triple's three pair bits.
    pub fn polynomial(&self, a: f64, c: f64) -> f64 {
        a * a * a * self.triangles as f64
            + a * a * c * self.wedges as f64
            + a * c * c * (self.n.saturating_sub(2) * self.edges) as f64
            + c * c * c * self.triples() as f64
    }

    /// [`NoisyCounts::polynomial`] in exact integer arithmetic.
    pub fn polynomial_i128(&self, a: i128, c: i128) -> i128 {
        a * a * a * self.triangles as i128
            + a * a * c * self.wedges as i128
            + a * c * c * (self.n.saturating_sub(2) * self.edges) as i128
            + c * c * c * self.triples() as i128
    }
}

/// RR triangle-counting baseline; returns `Δ̃` and the noisy statistics.
pub fn tcount_rr(g: &Graph, cfg: &RrConfig) -> Result<RrOutput<(f64, NoisyCounts)>, BaselineError> {
    tcount_rr_until(g, cfg, None)
}

pub fn tcount_rr_until(
    g: &Graph,
    cfg: &RrConfig,
    deadline: Option<Instant>,
) -> Result<RrOutput<(f64, NoisyCounts)>, BaselineError> {
    let (m, rt) = rr_matrix(g, cfg, TCOUNT_RR_LABEL, deadline)?;
    let counts = NoisyCounts::of(&m);
    let (a, c) = if cfg.noise { debias_weights(cfg.eps) } else { (1.0, 0.0) };
    audit(rt, (counts.polynomial(a, c), counts), cfg.eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::{exact_core_numbers, exact_triangle_count};

    fn direct_sum_i128(m: &NoisyEdgeMatrix, a: i128, c: i128) -> i128 {
        let n = m.n() as NodeId;
        let t = |j, k| a * m.get(j, k) as i128 + c;
        let mut s = 0;
        for j in 0..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    s += t(j, k) * t(k, l) * t(j, l);
                }
            }
        }
        s
    }

    #[test]
    fn counts_of_small_graphs() {
        let c = NoisyCounts::of(&NoisyEdgeMatrix::exact(&fixtures::complete(5)));
        assert_eq!((c.edges, c.wedges, c.triangles), (10, 30, 10));
        let c = NoisyCounts::of(&NoisyEdgeMatrix::exact(&fixtures::star(4)));
        assert_eq!((c.edges, c.wedges, c.triangles), (4, 6, 0));
    }

    #[test]
    fn triangle_count_crosses_word_boundaries() {
        let g = fixtures::gnp(150, 0.2, 4);
        let c = NoisyCounts::of(&NoisyEdgeMatrix::exact(&g));
        assert_eq!(c.triangles, exact_triangle_count(&g));
    }

    #[test]
    fn polynomial_equals_direct_sum() {
        for seed in 0..100 {
            let g = fixtures::random_small(40, seed);
            let m = NoisyEdgeMatrix::exact(&g);
            let counts = NoisyCounts::of(&m);
            for (a, c) in [(3, -2), (1, 0), (5, 7)] {
                assert_eq!(counts.polynomial_i128(a, c), direct_sum_i128(&m, a, c), "seed {seed}");
            }
            let (a, c) = debias_weights(1.0);
            let direct: f64 = {
                let n = m.n() as NodeId;
                let t = |j, k| a * m.get(j, k) as u8 as f64 + c;
                let mut s = 0.0;
                for j in 0..n {
                    for k in j + 1..n {
                        for l in k + 1..n {
                            s += t(j, k) * t(k, l) * t(j, l);
                        }
                    }
                }
                s
            };
            let closed = counts.polynomial(a, c);
            assert!((closed - direct).abs() <= 1e-9 * direct.abs().max(1.0), "{closed} vs {direct}");
        }
    }

    #[test]
    fn large_eps_recovers_exact_values() {
        let g = fixtures::gnp(40, 0.3, 2);
        let cfg = RrConfig {
            eps: 50.0,
            ..RrConfig::default()
        };
        let t = exact_triangle_count(&g) as f64;
        let (est, _) = tcount_rr(&g, &cfg).unwrap().result;
        assert!((est - t).abs() < 1e-6 * t, "{est} vs {t}");
        let est = kcore_rr(&g, &cfg).unwrap().result;
        let exact = exact_core_numbers(&g).core;
        for (e, k) in est.iter().zip(&exact) {
            assert!((e - *k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_kcore_rr_is_exact_peeling() {
        let g = fixtures::layered_cores();
        let cfg = RrConfig {
            noise: false,
            ..RrConfig::default()
        };
        let est = kcore_rr(&g, &cfg).unwrap().result;
        let exact: Vec<f64> = exact_core_numbers(&g).core.iter().map(|&k| k as f64).collect();
        assert_eq!(est, exact);
    }

    #[test]
    fn guard_trips_above_limit() {
        // the guard is checked before any allocation that depends on n
        let big = Graph::from_dense_edges(
            RR_NODE_LIMIT + 2,
            &(0..(RR_NODE_LIMIT as NodeId + 2) / 2).map(|i| (2 * i, 2 * i + 1)).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(matches!(
            tcount_rr(&big, &RrConfig::default()),
            Err(BaselineError::OomGuard { .. })
        ));
    }

    #[test]
    fn baseline_uses_full_budget_for_level_moves() {
        let g = fixtures::gnp(50, 0.2, 6);
        let out = kcore_baseline(&g, &KcoreConfig::default()).unwrap();
        assert_eq!(out.run.num_rounds, crate::kcore::baseline_rounds(&out.run.params));
        assert!(out.report.max_pair_charge <= 1.0 + 1e-12);
        assert_eq!(out.ledger.summary().get(crate::kcore::THRESHOLD_LABEL), None);
    }

    #[test]
    fn rr_ledgers_charge_eps_once_per_pair() {
        let g = fixtures::petersen();
        let out = kcore_rr(&g, &RrConfig::default()).unwrap();
        assert!((out.report.max_pair_charge - 1.0).abs() < 1e-12);
        let out = tcount_rr(&g, &RrConfig { eps: 0.5, ..RrConfig::default() }).unwrap();
        assert!((out.report.max_pair_charge - 0.5).abs() < 1e-12);
    }
}
