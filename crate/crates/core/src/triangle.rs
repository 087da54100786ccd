// SPDX-License-Identifier: Apache-2.0

//! EdgeOrient: private triangle counting on a low out-degree orientation.
//!
//! The budget ε is split four ways. k-CoreD (at ε/4) yields an ordering `Z`
//! that orients every edge towards its later endpoint. Every node then
//! publishes its row of the upper-triangular adjacency matrix through
//! randomized response, and a noisy bound `d̃max` on out-degrees. Finally,
//! each node looks at pairs of its first `d̃max` out-neighbors, sums the
//! debiased noisy bits of the edges closing those pairs, and adds Laplace
//! noise scaled to the `2·d̃max` sensitivity of that sum.
//!
//! Each triangle has exactly one apex with both other corners as
//! out-neighbors, so without noise the total is the exact triangle count:
//!
//! ```
//! use ledp_core::{fixtures, graph::exact_triangle_count};
//! use ledp_core::triangle::{triangle_coordinator, TriangleConfig};
//!
//! let g = fixtures::layered_cores();
//! let out = triangle_coordinator(&g, &TriangleConfig::noiseless()).unwrap();
//! assert_eq!(out.run.estimate, exact_triangle_count(&g) as f64);
//! ```

use std::time::Instant;

use bitvec::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dp::{
    debias_edge_bit, flip_probability, randomized_response_row, BudgetLedger, Charge, GeomParam,
    LaplaceParam, LedgerReport, LedgerViolation, NoiseContext, NoiseStream, Scope, Stage,
};
use crate::graph::{Graph, NodeId};
use crate::kcore::{run_kcore, KcoreConfig, KcoreError, KcoreRun, LevelBias};
use crate::sim::{packed_bytes, Payload, Publication, RoundStats, Runtime, SimError, WorkerContext};
use crate::sum::ExactSum;

pub const RR_LABEL: &str = "triangle.rr";
pub const MAX_OUT_LABEL: &str = "triangle.max_out";
pub const COUNT_LABEL: &str = "triangle.count";

/// Largest graph whose noisy matrix is stored; beyond it, use streaming.
pub const MATRIX_NODE_LIMIT: usize = 100_000;

#[derive(Debug, Error)]
pub enum TriangleError {
    #[error("invalid triangle configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kcore(#[from] KcoreError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ledger(#[from] LedgerViolation),
    #[error("no worker reported a maximum out-degree")]
    EmptyReport,
    #[error("a {n}-node noisy edge matrix exceeds the {MATRIX_NODE_LIMIT}-node limit; enable row streaming")]
    MatrixTooLarge { n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleConfig {
    pub eps: f64,
    pub workers: usize,
    pub seed: u64,
    /// When false, RR keeps every bit, debiasing is the identity and no
    /// geometric or Laplace noise is drawn.
    pub noise: bool,
    /// k-CoreD settings for the ordering stage.
    pub fraction: f64,
    pub bias: f64,
    pub eta: f64,
    pub level_bias: LevelBias,
    /// Recompute noisy bits on demand instead of storing the matrix.
    pub streaming: bool,
}

impl Default for TriangleConfig {
    fn default() -> Self {
        let k = KcoreConfig::default();
        TriangleConfig {
            eps: 1.0,
            workers: 1,
            seed: 0,
            noise: true,
            fraction: k.fraction,
            bias: k.bias,
            eta: k.eta,
            level_bias: k.level_bias,
            streaming: false,
        }
    }
}

impl TriangleConfig {
    pub fn noiseless() -> Self {
        let k = KcoreConfig::noiseless();
        TriangleConfig {
            noise: false,
            bias: k.bias,
            level_bias: k.level_bias,
            ..Self::default()
        }
    }

    /// Budget of each of the four stages.
    pub fn stage_eps(&self) -> f64 {
        self.eps / 4.0
    }

    pub fn kcore_config(&self) -> KcoreConfig {
        KcoreConfig {
            eps: self.stage_eps(),
            fraction: self.fraction,
            bias: self.bias,
            eta: self.eta,
            workers: self.workers,
            seed: self.seed,
            noise: self.noise,
            thresholding: true,
            level_bias: self.level_bias,
            trace: false,
        }
    }
}

/// Position of the unordered pair `{j, k}`, `j < k`, in the row-major upper triangle.
pub fn upper_index(n: usize, j: NodeId, k: NodeId) -> usize {
    debug_assert!(j < k && (k as usize) < n);
    let (j, k) = (j as usize, k as usize);
    j * n - j * (j + 1) / 2 + (k - j - 1)
}

/// Number of bits in the upper triangle of an `n × n` matrix.
pub fn upper_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Bit-packed upper triangle of randomized-response outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoisyEdgeMatrix {
    n: usize,
    bits: BitVec<u64, Lsb0>,
}

impl NoisyEdgeMatrix {
    pub fn from_bits(n: usize, bits: BitVec<u64, Lsb0>) -> Self {
        assert_eq!(bits.len(), upper_len(n), "upper triangle of {n} nodes");
        NoisyEdgeMatrix { n, bits }
    }

    /// The true adjacency, as published with infinite budget.
    pub fn exact(g: &Graph) -> Self {
        let n = g.n();
        let mut bits = bitvec![u64, Lsb0; 0; upper_len(n)];
        for (u, v) in g.edges() {
            bits.set(upper_index(n, u, v), true);
        }
        NoisyEdgeMatrix { n, bits }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `X_{j,k}` for `j ≠ k`, in either order.
    pub fn get(&self, j: NodeId, k: NodeId) -> bool {
        assert_ne!(j, k, "diagonal entries do not exist");
        let (lo, hi) = if j < k { (j, k) } else { (k, j) };
        self.bits[upper_index(self.n, lo, hi)]
    }

    /// Bits `X_{j,k}` for `k = j+1, …, n−1`.
    pub fn row(&self, j: NodeId) -> &BitSlice<u64, Lsb0> {
        let j = j as usize;
        let start = j * self.n - j * (j + 1) / 2;
        &self.bits[start..start + (self.n - j - 1)]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn packed_bytes(&self) -> u64 {
        packed_bytes(self.bits.len() as u64)
    }
}

/// Recomputes published bits from the counter-based noise stream.
///
/// Gives bit-for-bit the matrix the RR round would have stored. It reads
/// the private graph on behalf of the published matrix, so it lives with
/// the coordinator and is only handed to workers as public state.
#[derive(Clone, Copy)]
pub struct StreamingEdges<'g> {
    graph: &'g Graph,
    stream: Option<NoiseStream>,
    flip: f64,
}

impl StreamingEdges<'_> {
    pub fn get(&self, j: NodeId, k: NodeId) -> bool {
        assert_ne!(j, k, "diagonal entries do not exist");
        let (lo, hi) = if j < k { (j, k) } else { (k, j) };
        let bit = self.graph.has_edge(lo, hi);
        match self.stream {
            None => bit,
            Some(s) => {
                let u = s.uniform_at(rr_context(lo), (hi - lo - 1) as u64);
                bit ^ (u < self.flip)
            }
        }
    }
}

/// The published noisy edges, stored or streamed.
pub enum NoisyEdges<'g> {
    Stored(NoisyEdgeMatrix),
    Streaming(StreamingEdges<'g>),
}

impl NoisyEdges<'_> {
    pub fn get(&self, j: NodeId, k: NodeId) -> bool {
        match self {
            NoisyEdges::Stored(m) => m.get(j, k),
            NoisyEdges::Streaming(s) => s.get(j, k),
        }
    }
}

fn rr_context(v: NodeId) -> NoiseContext {
    NoiseContext::new(Stage::RandomizedResponse, v, 0)
}

/// Concatenated RR rows of a worker's nodes, in node order.
pub struct RrRows {
    pub bits: BitVec<u64, Lsb0>,
    pub logical_bits: u64,
}

impl Payload for RrRows {
    fn logical_bytes(&self) -> u64 {
        packed_bytes(self.logical_bits)
    }
}

struct RrTask {
    label: &'static str,
    eps: f64,
    stream: Option<NoiseStream>,
    store: bool,
}

fn rr_worker(ctx: &mut WorkerContext<'_>, _: &mut (), p: &RrTask) -> RrRows {
    let n = ctx.n();
    let charge = Charge::new(p.label, p.eps, Scope::Upper);
    let mut bits = BitVec::new();
    let mut logical_bits = 0;
    for v in ctx.nodes() {
        let row_len = n - v as usize - 1;
        logical_bits += row_len as u64;
        let private = ctx.release(v, charge, |adj| {
            if !p.store {
                return None;
            }
            let mut row = bitvec![u64, Lsb0; 0; row_len];
            for &j in adj.iter().filter(|&&j| j > v) {
                row.set((j - v - 1) as usize, true);
            }
            Some(row)
        });
        if let Some(row) = private {
            match p.stream {
                Some(s) => bits.extend_from_bitslice(&randomized_response_row(
                    &row,
                    p.eps,
                    &mut s.rng(rr_context(v)),
                )),
                None => bits.extend_from_bitslice(&row),
            }
        }
    }
    RrRows { bits, logical_bits }
}

/// One randomized-response round over the upper triangle, published.
///
/// Returns the assembled matrix, or `None` when `store` is off and the
/// bits are to be recomputed on demand. `stream: None` keeps every bit.
pub(crate) fn rr_round(
    rt: &mut Runtime<'_>,
    label: &'static str,
    eps: f64,
    stream: Option<NoiseStream>,
    store: bool,
) -> Result<Option<NoisyEdgeMatrix>, SimError> {
    let n = rt.n();
    let mut units = rt.worker_states(|_| ());
    let task = RrTask {
        label,
        eps,
        stream,
        store,
    };
    let rows = rt.run_round(&mut units, |ctx, st| rr_worker(ctx, st, &task))?;
    rt.publish(Publication::NoisyEdges, packed_bytes(upper_len(n) as u64));
    if !store {
        return Ok(None);
    }
    let mut bits = BitVec::with_capacity(upper_len(n));
    for r in rows {
        bits.extend_from_bitslice(&r.bits);
    }
    Ok(Some(NoisyEdgeMatrix::from_bits(n, bits)))
}

/// Out-neighbors of `v` under `rank`, ascending by node ID.
pub fn out_neighbors<'a>(
    adj: &'a [NodeId],
    rank: &'a [u32],
    v: NodeId,
) -> impl Iterator<Item = NodeId> + 'a {
    let rv = rank[v as usize];
    adj.iter().copied().filter(move |&j| rank[j as usize] > rv)
}

struct MaxOutTask<'a> {
    eps: f64,
    rank: &'a [u32],
    stream: Option<NoiseStream>,
}

fn max_outdegree_worker(ctx: &mut WorkerContext<'_>, _: &mut (), p: &MaxOutTask<'_>) -> i64 {
    let charge = Charge::new(MAX_OUT_LABEL, p.eps, Scope::Outgoing);
    let geom = GeomParam::new(p.eps).expect("positive stage budget");
    let mut max = 0i64;
    for v in ctx.nodes() {
        let out = ctx.release(v, charge, |adj| out_neighbors(adj, p.rank, v).count());
        let b = p
            .stream
            .map_or(0, |s| s.geom(NoiseContext::new(Stage::MaxOutDegree, v, 0), geom));
        max = max.max(out as i64 + b);
    }
    max
}

/// `max(⌈max(maxes) + 12·ln(n)/ε⌉, 1)`, with the full ε.
pub fn dmax_aggregate(maxes: &[i64], n: usize, eps: f64) -> Result<u64, TriangleError> {
    dmax_with_log(maxes, (n as f64).ln(), eps)
}

/// [`dmax_aggregate`] with `ln n` supplied directly.
pub fn dmax_with_log(maxes: &[i64], ln_n: f64, eps: f64) -> Result<u64, TriangleError> {
    let max = *maxes.iter().max().ok_or(TriangleError::EmptyReport)?;
    Ok((max as f64 + 12.0 * ln_n / eps).ceil().max(1.0) as u64)
}

/// Counts index pairs `i1 < i2` among `out` and how many of them have `edge` set.
pub fn count_pairs(out: &[NodeId], mut edge: impl FnMut(NodeId, NodeId) -> bool) -> (u64, u64) {
    let mut ones = 0;
    for (i, &j) in out.iter().enumerate() {
        for &k in &out[i + 1..] {
            ones += edge(j, k) as u64;
        }
    }
    let len = out.len() as u64;
    (ones, len * len.saturating_sub(1) / 2)
}

struct CountTask<'a, 'g> {
    eps: f64,
    rank: &'a [u32],
    edges: &'a NoisyEdges<'g>,
    dmax: u64,
    stream: Option<NoiseStream>,
}

fn triangle_count_worker(ctx: &mut WorkerContext<'_>, _: &mut (), p: &CountTask<'_, '_>) -> ExactSum {
    let charge = Charge::new(COUNT_LABEL, p.eps, Scope::Outgoing);
    let laplace = LaplaceParam::new(p.eps / (2.0 * p.dmax as f64)).expect("positive scale");
    let (w1, w0) = match p.stream {
        Some(_) => (debias_edge_bit(true, p.eps), debias_edge_bit(false, p.eps)),
        None => (1.0, 0.0),
    };
    let mut partial = ExactSum::new();
    let mut out = Vec::new();
    for v in ctx.nodes() {
        out.clear();
        ctx.release(v, charge, |adj| {
            out.extend(out_neighbors(adj, p.rank, v).take(p.dmax as usize));
        });
        let (ones, pairs) = count_pairs(&out, |j, k| p.edges.get(j, k));
        partial.add(ones as f64 * w1);
        partial.add((pairs - ones) as f64 * w0);
        if let Some(s) = p.stream {
            partial.add(s.laplace(NoiseContext::new(Stage::TriangleLaplace, v, 0), laplace));
        }
    }
    partial
}

#[derive(Clone, Debug, Serialize)]
pub struct TriangleRun {
    /// `Δ̃`; may be negative.
    pub estimate: f64,
    pub dmax: u64,
    /// Each worker's partial sum, rounded for reporting.
    pub partials: Vec<f64>,
    pub noisy_edge_ones: Option<usize>,
    pub kcore: KcoreRun,
}

#[derive(Debug)]
pub struct TriangleOutput {
    pub run: TriangleRun,
    pub stats: RoundStats,
    pub ledger: BudgetLedger,
    pub report: LedgerReport,
}

fn validate(g: &Graph, cfg: &TriangleConfig) -> Result<(), TriangleError> {
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        return Err(TriangleError::Config(format!(
            "eps must be positive and finite, got {}",
            cfg.eps
        )));
    }
    if !cfg.streaming && g.n() > MATRIX_NODE_LIMIT {
        return Err(TriangleError::MatrixTooLarge { n: g.n() });
    }
    Ok(())
}

/// Runs the four stages on `rt`, which must simulate `g`.
pub fn run_triangle<'g>(
    rt: &mut Runtime<'g>,
    g: &'g Graph,
    cfg: &TriangleConfig,
) -> Result<TriangleRun, TriangleError> {
    validate(g, cfg)?;
    assert_eq!(rt.n(), g.n(), "runtime simulates a different graph");
    let n = g.n();
    let eps4 = cfg.stage_eps();
    let stream = cfg.noise.then(|| NoiseStream::new(cfg.seed));

    let kcore = run_kcore(rt, &cfg.kcore_config())?;
    let rank = kcore.ordering.rank.clone();
    rt.publish(Publication::Ordering, 8 * n as u64);
    rt.ledger_mut().set_orientation(rank.clone());

    let stored = rr_round(rt, RR_LABEL, eps4, stream, !cfg.streaming)?;
    let edges = match stored {
        Some(m) => NoisyEdges::Stored(m),
        None => NoisyEdges::Streaming(StreamingEdges {
            graph: g,
            stream,
            flip: flip_probability(eps4),
        }),
    };
    let mut units = rt.worker_states(|_| ());

    let task = MaxOutTask {
        eps: eps4,
        rank: &rank,
        stream,
    };
    let maxes = rt.run_round(&mut units, |ctx, st| max_outdegree_worker(ctx, st, &task))?;
    let dmax = dmax_aggregate(&maxes, n, cfg.eps)?;
    rt.publish(Publication::MaxOutDegree, 8);

    let task = CountTask {
        eps: eps4,
        rank: &rank,
        edges: &edges,
        dmax,
        stream,
    };
    let sums = rt.run_round(&mut units, |ctx, st| triangle_count_worker(ctx, st, &task))?;
    let mut total = ExactSum::new();
    for s in &sums {
        total.merge(s);
    }

    Ok(TriangleRun {
        estimate: total.value(),
        dmax,
        partials: sums.iter().map(ExactSum::value).collect(),
        noisy_edge_ones: match &edges {
            NoisyEdges::Stored(m) => Some(m.count_ones()),
            NoisyEdges::Streaming(_) => None,
        },
        kcore,
    })
}

pub fn triangle_coordinator(g: &Graph, cfg: &TriangleConfig) -> Result<TriangleOutput, TriangleError> {
    triangle_coordinator_until(g, cfg, None)
}

/// [`triangle_coordinator`] that gives up at `deadline`.
pub fn triangle_coordinator_until(
    g: &Graph,
    cfg: &TriangleConfig,
    deadline: Option<Instant>,
) -> Result<TriangleOutput, TriangleError> {
    let mut rt = Runtime::new(g, cfg.workers)?.with_deadline(deadline);
    let run = run_triangle(&mut rt, g, cfg)?;
    let stats = rt.stats();
    let ledger = rt.into_ledger();
    let report = ledger.assert_within(cfg.eps)?;
    Ok(TriangleOutput {
        run,
        stats,
        ledger,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::exact_triangle_count;

    #[test]
    fn upper_index_is_row_major_and_dense() {
        let n = 6;
        let mut expect = 0;
        for j in 0..n as NodeId {
            for k in j + 1..n as NodeId {
                assert_eq!(upper_index(n, j, k), expect);
                expect += 1;
            }
        }
        assert_eq!(expect, upper_len(n));
    }

    #[test]
    fn row_of_node_two_in_four_covers_only_three() {
        assert_eq!(upper_index(4, 2, 3), upper_len(4) - 1);
    }

    #[test]
    fn dmax_examples() {
        assert_eq!(dmax_with_log(&[3, 5, 2], 4.0, 1.0).unwrap(), 53);
        assert_eq!(dmax_aggregate(&[0], 3, 1.0).unwrap(), 14);
        let slack = |eps| dmax_with_log(&[0], 4.0, eps).unwrap();
        assert_eq!(slack(1.0), 2 * slack(2.0));
        assert!(matches!(dmax_aggregate(&[], 3, 1.0), Err(TriangleError::EmptyReport)));
        assert_eq!(dmax_with_log(&[-40], 1.0, 1.0).unwrap(), 1);
    }

    #[test]
    fn truncation_inspects_three_pairs() {
        let out: Vec<NodeId> = (1..=5).collect();
        let truncated: Vec<NodeId> = out.iter().copied().take(3).collect();
        let mut seen = 0;
        let (ones, pairs) = count_pairs(&truncated, |_, _| {
            seen += 1;
            true
        });
        assert_eq!((ones, pairs, seen), (3, 3, 3));
    }

    #[test]
    fn out_neighbors_follow_rank() {
        let rank = [0, 1, 2];
        assert_eq!(out_neighbors(&[1], &rank, 0).collect::<Vec<_>>(), vec![1]);
        assert_eq!(out_neighbors(&[0, 2], &rank, 1).collect::<Vec<_>>(), vec![2]);
        assert_eq!(out_neighbors(&[1], &rank, 2).count(), 0);
    }

    #[test]
    fn noiseless_single_triangle_has_one_apex() {
        let g = fixtures::complete(3);
        let out = triangle_coordinator(&g, &TriangleConfig::noiseless()).unwrap();
        assert_eq!(out.run.estimate, 1.0);
        assert_eq!(out.run.kcore.ordering.order, vec![0, 1, 2]);
        let g = fixtures::cycle(4);
        let out = triangle_coordinator(&g, &TriangleConfig::noiseless()).unwrap();
        assert_eq!(out.run.estimate, 0.0);
    }

    #[test]
    fn noiseless_matrix_is_the_adjacency() {
        let g = fixtures::petersen();
        let mut rt = Runtime::new(&g, 3).unwrap();
        let run = run_triangle(&mut rt, &g, &TriangleConfig::noiseless()).unwrap();
        assert_eq!(run.noisy_edge_ones, Some(g.m()));
    }

    #[test]
    fn publishes_each_artifact_once() {
        let g = fixtures::gnp(30, 0.3, 2);
        let mut rt = Runtime::new(&g, 4).unwrap();
        run_triangle(&mut rt, &g, &TriangleConfig::default()).unwrap();
        for kind in [Publication::Ordering, Publication::NoisyEdges, Publication::MaxOutDegree] {
            assert_eq!(rt.public().count(kind), 1, "{kind:?}");
        }
    }

    #[test]
    fn streaming_equals_stored() {
        let g = fixtures::gnp(40, 0.25, 5);
        let base = TriangleConfig {
            seed: 11,
            workers: 3,
            ..TriangleConfig::default()
        };
        let stored = triangle_coordinator(&g, &base).unwrap();
        let streamed = triangle_coordinator(
            &g,
            &TriangleConfig {
                streaming: true,
                ..base
            },
        )
        .unwrap();
        assert_eq!(stored.run.estimate.to_bits(), streamed.run.estimate.to_bits());
        assert_eq!(stored.stats.bytes, streamed.stats.bytes);
    }

    #[test]
    fn ledger_sums_to_exactly_eps() {
        let g = fixtures::gnp(40, 0.2, 8);
        let out = triangle_coordinator(&g, &TriangleConfig::default()).unwrap();
        assert!(out.report.max_pair_charge <= 1.0 * (1.0 + 1e-12));
        assert!(out.report.max_pair_charge > 0.9);
    }

    #[test]
    fn noiseless_matches_oracle_on_fixtures() {
        for g in [fixtures::complete(6), fixtures::petersen(), fixtures::gnp(50, 0.3, 1)] {
            let out = triangle_coordinator(&g, &TriangleConfig::noiseless()).unwrap();
            assert_eq!(out.run.estimate, exact_triangle_count(&g) as f64);
        }
    }
}
