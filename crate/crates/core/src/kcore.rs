// SPDX-License-Identifier: Apache-2.0

//! k-CoreD: private k-core decomposition with degree thresholding.
//!
//! The coordinator first asks every node for a noisy, biased estimate of its
//! degree and turns it into a *threshold*, the highest level the node may
//! reach. It then runs synchronous level-moving rounds: in round `r`, every
//! still-active node on level `r` compares a noisy count of its level-`r`
//! neighbors against the group cut and either moves up or retires for good.
//!
//! ```
//! use ledp_core::{fixtures, kcore::{kcore_coordinator, KcoreConfig}};
//!
//! let g = fixtures::complete(6);
//! let out = kcore_coordinator(&g, &KcoreConfig::noiseless()).unwrap();
//! assert!(out.run.estimates.iter().all(|&c| c > 1.0));
//! assert!(out.report.max_pair_charge <= 1.0);
//! ```

use std::sync::Arc;
use std::time::Instant;

use bitvec::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dp::{
    BudgetLedger, Charge, DpError, GeomParam, LedgerReport, LedgerViolation, NoiseContext,
    NoiseStream, Scope, Stage,
};
use crate::graph::{Graph, NodeId};
use crate::lds::{LdsError, LdsParams, LevelDataStructure, Ordering};
use crate::sim::{packed_bytes, Payload, Publication, RoundStats, Runtime, SimError, WorkerContext};

pub const THRESHOLD_LABEL: &str = "kcore.threshold";
pub const LEVEL_MOVE_LABEL: &str = "kcore.level_move";

#[derive(Debug, Error)]
pub enum KcoreError {
    #[error("invalid k-core configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lds(#[from] LdsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Ledger(#[from] LedgerViolation),
}

/// How the level-moving bias term `6e^s/(e^{2s} − 1)³` is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LevelBias {
    /// The formula as is. For small `s` it dwarfs both the neighbor count
    /// and the noise, so active nodes climb until their thresholds stop them.
    Literal,
    /// The formula, capped at the cut of the last group the run can reach.
    /// With the cap, promotions are decided mostly by noise.
    Capped,
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KcoreConfig {
    /// Total privacy budget ε.
    pub eps: f64,
    /// Fraction `f` of ε spent on thresholding; the rest goes to level moving.
    pub fraction: f64,
    /// Multiplier `b` of the thresholding bias.
    pub bias: f64,
    pub eta: f64,
    pub workers: usize,
    pub seed: u64,
    /// When false, every noise draw is replaced by 0 (a debugging mode).
    pub noise: bool,
    /// When false, every node gets the same threshold: the baseline round count.
    pub thresholding: bool,
    pub level_bias: LevelBias,
    /// Keep the level array after every round.
    pub trace: bool,
}

impl Default for KcoreConfig {
    fn default() -> Self {
        KcoreConfig {
            eps: 1.0,
            fraction: 0.8,
            bias: 8.0,
            eta: 3.625,
            workers: 1,
            seed: 0,
            noise: true,
            thresholding: true,
            level_bias: LevelBias::Literal,
            trace: false,
        }
    }
}

impl KcoreConfig {
    /// Noise and both bias terms switched off.
    pub fn noiseless() -> Self {
        KcoreConfig {
            noise: false,
            bias: 0.0,
            level_bias: LevelBias::Off,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), KcoreError> {
        let bad = |m: String| Err(KcoreError::Config(m));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive and finite, got {}", self.eps));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return bad(format!("fraction must lie in (0, 1), got {}", self.fraction));
        }
        if !(self.bias >= 0.0 && self.bias.is_finite()) {
            return bad(format!("bias must be non-negative, got {}", self.bias));
        }
        if self.workers == 0 {
            return bad("at least one worker is required".into());
        }
        Ok(())
    }

    /// `(ε₁, ε₂)`. Without thresholding the whole budget goes to level moving.
    pub fn split(&self) -> (f64, f64) {
        if self.thresholding {
            (self.fraction * self.eps, (1.0 - self.fraction) * self.eps)
        } else {
            (0.0, self.eps)
        }
    }
}

/// `⌈log₂ x⌉`, defined as 0 for `x ≤ 1`.
pub fn ceil_log2(x: f64) -> u32 {
    if x.is_nan() || x <= 1.0 {
        return 0;
    }
    let mut k = x.log2().ceil() as u32;
    while k > 0 && 2f64.powi(k as i32 - 1) >= x {
        k -= 1;
    }
    while 2f64.powi(k as i32) < x {
        k += 1;
    }
    k
}

/// The thresholding subtrahend `b·2e^{ε₁}/(e^{2ε₁} − 1)`, i.e. `b/sinh ε₁`.
pub fn threshold_bias(eps1: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        b / eps1.sinh()
    }
}

/// Threshold of a node from its degree and the drawn noise.
///
/// `d̃ = deg + noise`, then `d̃ + 1 − min(subtrahend, d̃)`, then `⌈log₂ d̃⌉·L`.
pub fn noisy_threshold(degree: usize, noise: i64, subtrahend: f64, levels_per_group: u32) -> u32 {
    let d = degree as f64 + noise as f64;
    let d = d + 1.0 - subtrahend.min(d);
    ceil_log2(d) * levels_per_group
}

/// The level-moving bias `6e^s/(e^{2s} − 1)³`.
pub fn level_bias(s: f64) -> f64 {
    6.0 * s.exp() / (2.0 * s).exp_m1().powi(3)
}

/// Move iff `U + X + B` exceeds the group cut.
pub fn should_move(same_level: usize, noise: i64, bias: f64, cut: f64) -> bool {
    same_level as f64 + noise as f64 + bias > cut
}

/// Upper bound on rounds, `4·⌈log_{1+φ} n⌉·⌈log₂ D̃⌉ − 1`, with `⌈log₂ D̃⌉`
/// recovered from the maximum threshold.
pub fn round_cap(params: &LdsParams, max_threshold: u32) -> u64 {
    let log_d = (max_threshold / params.levels_per_group) as u64;
    (4 * params.log_n as u64 * log_d).saturating_sub(1)
}

/// Round count of the threshold-free baseline, `4·⌈log_{1+φ} n⌉² − 1`.
pub fn baseline_rounds(params: &LdsParams) -> u32 {
    let l = params.log_n as u64;
    (4 * l * l).saturating_sub(1).max(1).min(u32::MAX as u64) as u32
}

#[derive(Clone, Copy, Debug)]
struct NodeState {
    threshold: u32,
    active: bool,
}

/// Per-worker private state: thresholds never leave the worker.
pub struct KcoreWorker {
    start: NodeId,
    nodes: Vec<NodeState>,
}

impl KcoreWorker {
    fn state(&mut self, v: NodeId) -> &mut NodeState {
        &mut self.nodes[(v - self.start) as usize]
    }
}

/// A worker's per-round answer: one bit per owned node.
pub struct LevelBits {
    pub start: NodeId,
    pub bits: BitVec<u64, Lsb0>,
    pub bias_cap_hits: u64,
}

impl Payload for LevelBits {
    fn logical_bytes(&self) -> u64 {
        packed_bytes(self.bits.len() as u64)
    }
}

struct ThresholdTask {
    eps1: f64,
    subtrahend: f64,
    levels_per_group: u32,
    noise: Option<NoiseStream>,
}

fn degree_threshold_worker(ctx: &mut WorkerContext<'_>, st: &mut KcoreWorker, p: &ThresholdTask) -> u64 {
    let charge = Charge::new(THRESHOLD_LABEL, p.eps1 / 2.0, Scope::Incident);
    let geom = GeomParam::new(p.eps1 / 2.0).expect("positive eps1");
    let mut max = 0;
    for v in ctx.nodes() {
        let degree = ctx.release(v, charge, |adj| adj.len());
        let x = p
            .noise
            .map_or(0, |s| s.geom(NoiseContext::new(Stage::Threshold, v, 0), geom));
        let t = noisy_threshold(degree, x, p.subtrahend, p.levels_per_group);
        st.state(v).threshold = t;
        max = max.max(t);
    }
    max as u64
}

struct MoveTask<'a> {
    round: u32,
    levels: &'a [u32],
    eps2: f64,
    cut: f64,
    bias: LevelBias,
    bias_cap: f64,
    noise: Option<NoiseStream>,
}

fn level_moving_worker(ctx: &mut WorkerContext<'_>, st: &mut KcoreWorker, p: &MoveTask<'_>) -> LevelBits {
    let r = p.round;
    let mut bits = bitvec![u64, Lsb0; 0; st.nodes.len()];
    let mut bias_cap_hits = 0;
    for v in ctx.nodes() {
        let state = *st.state(v);
        if state.threshold == r {
            st.state(v).active = false;
        }
        if !st.state(v).active || p.levels[v as usize] != r {
            continue;
        }
        let s = p.eps2 / (2.0 * state.threshold as f64);
        let charge = Charge::new(LEVEL_MOVE_LABEL, s, Scope::Incident);
        let levels = p.levels;
        let u = ctx.release(v, charge, |adj| {
            adj.iter().filter(|&&j| levels[j as usize] == r).count()
        });
        let x = p.noise.map_or(0, |stream| {
            let geom = GeomParam::new(s).expect("positive level budget");
            stream.geom(NoiseContext::new(Stage::LevelMove, v, r), geom)
        });
        let b = match p.bias {
            LevelBias::Off => 0.0,
            LevelBias::Literal => level_bias(s),
            LevelBias::Capped => {
                let raw = level_bias(s);
                if raw > p.bias_cap {
                    bias_cap_hits += 1;
                    p.bias_cap
                } else {
                    raw
                }
            }
        };
        if should_move(u, x, b, p.cut) {
            bits.set((v - st.start) as usize, true);
        } else {
            st.state(v).active = false;
        }
    }
    LevelBits {
        start: st.start,
        bits,
        bias_cap_hits,
    }
}

/// Everything the coordinator learned, plus diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct KcoreRun {
    pub params: LdsParams,
    pub estimates: Vec<f64>,
    pub levels: Vec<u32>,
    pub ordering: Ordering,
    pub num_rounds: u32,
    pub max_threshold: u32,
    pub round_cap: u64,
    pub bias_cap: f64,
    pub bias_cap_hits: u64,
    /// Worker-private thresholds, exported for testing only.
    pub thresholds: Vec<u32>,
    /// Level array after each round, starting with the initial all-zero one.
    pub trace: Option<Vec<Vec<u32>>>,
}

/// Runs k-CoreD on an existing runtime, charging its ledger.
pub fn run_kcore(rt: &mut Runtime<'_>, cfg: &KcoreConfig) -> Result<KcoreRun, KcoreError> {
    cfg.validate()?;
    let params = LdsParams::new(rt.n(), cfg.eta)?;
    let l = params.levels_per_group;
    let (eps1, eps2) = cfg.split();
    let noise = cfg.noise.then(|| NoiseStream::new(cfg.seed));
    let mut states = rt.worker_states(|range| KcoreWorker {
        start: range.start,
        nodes: vec![
            NodeState {
                threshold: 0,
                active: true,
            };
            range.len()
        ],
    });

    let (num_rounds, max_threshold, cap) = if cfg.thresholding {
        let task = ThresholdTask {
            eps1,
            subtrahend: threshold_bias(eps1, cfg.bias),
            levels_per_group: l,
            noise,
        };
        let maxes = rt.run_round(&mut states, |ctx, st| degree_threshold_worker(ctx, st, &task))?;
        let max_threshold = maxes.into_iter().max().unwrap_or(0) as u32;
        let cap = round_cap(&params, max_threshold);
        ((max_threshold as u64).min(cap) as u32, max_threshold, cap)
    } else {
        let rounds = baseline_rounds(&params);
        for st in &mut states {
            st.nodes.iter_mut().for_each(|s| s.threshold = rounds);
        }
        (rounds, rounds, rounds as u64)
    };
    rt.publish(Publication::RoundCount, 8);

    let bias_cap = params.group_cut(params.group_index(num_rounds.saturating_sub(1)));
    let mut lds = LevelDataStructure::new(params);
    let mut snapshot: Arc<[u32]> = lds.snapshot();
    rt.publish_per_node(Publication::Levels, &snapshot);
    let mut trace = cfg.trace.then(|| vec![snapshot.to_vec()]);
    let mut bias_cap_hits = 0;

    for r in 0..num_rounds {
        let task = MoveTask {
            round: r,
            levels: &snapshot,
            eps2,
            cut: params.group_cut(params.group_index(r)),
            bias: cfg.level_bias,
            bias_cap,
            noise,
        };
        let outputs = rt.run_round(&mut states, |ctx, st| level_moving_worker(ctx, st, &task))?;
        for out in outputs {
            bias_cap_hits += out.bias_cap_hits;
            for i in out.bits.iter_ones() {
                lds.level_increase(out.start + i as NodeId);
            }
        }
        snapshot = lds.snapshot();
        rt.publish_per_node(Publication::Levels, &snapshot);
        if let Some(t) = trace.as_mut() {
            t.push(snapshot.to_vec());
        }
    }

    let thresholds = states
        .iter()
        .flat_map(|st| st.nodes.iter().map(|s| s.threshold))
        .collect();
    Ok(KcoreRun {
        params,
        estimates: lds.estimate_core_numbers(),
        levels: lds.levels().to_vec(),
        ordering: lds.ordering(),
        num_rounds,
        max_threshold,
        round_cap: cap,
        bias_cap,
        bias_cap_hits,
        thresholds,
        trace,
    })
}

/// Result of a standalone run, with the audited ledger.
#[derive(Debug)]
pub struct KcoreOutput {
    pub run: KcoreRun,
    pub stats: RoundStats,
    pub ledger: BudgetLedger,
    pub report: LedgerReport,
}

/// Builds a runtime, runs k-CoreD and checks the ledger against `cfg.eps`.
pub fn kcore_coordinator(g: &Graph, cfg: &KcoreConfig) -> Result<KcoreOutput, KcoreError> {
    kcore_coordinator_until(g, cfg, None)
}

/// [`kcore_coordinator`] that gives up at `deadline`.
pub fn kcore_coordinator_until(
    g: &Graph,
    cfg: &KcoreConfig,
    deadline: Option<Instant>,
) -> Result<KcoreOutput, KcoreError> {
    let mut rt = Runtime::new(g, cfg.workers)?.with_deadline(deadline);
    let run = run_kcore(&mut rt, cfg)?;
    finish(rt, run, cfg.eps)
}

pub(crate) fn finish(rt: Runtime<'_>, run: KcoreRun, eps: f64) -> Result<KcoreOutput, KcoreError> {
    let stats = rt.stats();
    let ledger = rt.into_ledger();
    let report = ledger.assert_within(eps)?;
    Ok(KcoreOutput {
        run,
        stats,
        ledger,
        report,
    })
}

/// Per-node `max(s, t)/min(s, t)` against exact cores, for quick checks.
pub fn max_factor(estimates: &[f64], cores: &[u32]) -> f64 {
    estimates
        .iter()
        .zip(cores)
        .map(|(&s, &t)| {
            let s = s.max(1.0);
            let t = t as f64;
            s.max(t) / s.min(t)
        })
        .fold(1.0, f64::max)
}
