// SPDX-License-Identifier: Apache-2.0

//! Repeated, seeded runs of one algorithm over an ε sweep, reported as tidy
//! rows with the columns
//! `algo,dataset,eps,f,b,eta,workers,seed,run,metric,value`.
//!
//! Every run emits a `status` row (`ok`, `TIMEOUT`, `SKIPPED(OOM-guard)` or
//! `ERROR`) followed by its numeric metrics. After the runs for one ε come
//! rows with `run = mean`, averaging each metric over the successful runs.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    kcore_baseline_until, kcore_rr_until, tcount_rr_until, BaselineError, RrConfig,
};
use crate::dp::{LedgerDump, LedgerReport, NoiseStream};
use crate::graph::{exact_core_numbers, exact_triangle_count, Graph};
use crate::kcore::{kcore_coordinator_until, KcoreConfig, KcoreError, LevelBias};
use crate::metrics::{approx_factors, theoretical_bounds, triangle_metrics, FactorSummary};
use crate::sim::{RoundStats, SimError};
use crate::triangle::{triangle_coordinator_until, TriangleConfig, TriangleError};

pub const CSV_HEADER: [&str; 11] = [
    "algo", "dataset", "eps", "f", "b", "eta", "workers", "seed", "run", "metric", "value",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Kcored,
    KcoreBaseline,
    KcoreRr,
    Tcount,
    TcountRr,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::Kcored,
        Algo::KcoreBaseline,
        Algo::KcoreRr,
        Algo::Tcount,
        Algo::TcountRr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Kcored => "kcored",
            Algo::KcoreBaseline => "kcore-baseline",
            Algo::KcoreRr => "kcore-rr",
            Algo::Tcount => "tcount",
            Algo::TcountRr => "tcount-rr",
        }
    }

    pub fn is_kcore(self) -> bool {
        matches!(self, Algo::Kcored | Algo::KcoreBaseline | Algo::KcoreRr)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algo::ALL.iter().map(|a| a.name()).collect();
                ExperimentError::Config(format!("unknown algorithm {s:?}, expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algo: Algo,
    pub dataset: String,
    pub eps: Vec<f64>,
    pub fraction: f64,
    pub bias: f64,
    pub eta: f64,
    pub workers: usize,
    pub seed: u64,
    pub runs: u64,
    /// Wall-clock limit per run.
    pub timeout: Option<Duration>,
    pub level_bias: LevelBias,
    pub streaming: bool,
    pub noise: bool,
    /// Keep per-node estimates, ledger dumps and level traces of each run.
    pub keep_estimates: bool,
    pub keep_ledger: bool,
    pub keep_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algo: Algo::Kcored,
            dataset: String::from("graph"),
            eps: vec![1.0],
            fraction: 0.8,
            bias: 8.0,
            eta: 3.625,
            workers: 8,
            seed: 0,
            runs: 5,
            timeout: Some(Duration::from_secs(4 * 3600)),
            level_bias: LevelBias::Literal,
            streaming: false,
            noise: true,
            keep_estimates: false,
            keep_ledger: false,
            keep_trace: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, g: &Graph) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.eps.is_empty() {
            return bad("at least one eps value is required".into());
        }
        if let Some(e) = self.eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return bad(format!("eps must be positive and finite, got {e}"));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return bad(format!("fraction must lie in (0, 1), got {}", self.fraction));
        }
        if !(self.bias.is_finite() && self.bias >= 0.0) {
            return bad(format!("bias must be non-negative, got {}", self.bias));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive and finite, got {}", self.eta));
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if g.n() == 0 {
            return bad("the graph has no nodes".into());
        }
        if self.workers == 0 || self.workers > g.n() {
            return bad(format!("workers must lie in 1..={} for this graph, got {}", g.n(), self.workers));
        }
        Ok(())
    }

    fn kcore(&self, eps: f64, seed: u64) -> KcoreConfig {
        KcoreConfig {
            eps,
            fraction: self.fraction,
            bias: self.bias,
            eta: self.eta,
            workers: self.workers,
            seed,
            noise: self.noise,
            thresholding: true,
            level_bias: self.level_bias,
            trace: self.keep_trace,
        }
    }

    fn triangle(&self, eps: f64, seed: u64) -> TriangleConfig {
        TriangleConfig {
            eps,
            workers: self.workers,
            seed,
            noise: self.noise,
            fraction: self.fraction,
            bias: self.bias,
            eta: self.eta,
            level_bias: self.level_bias,
            streaming: self.streaming,
        }
    }

    fn rr(&self, eps: f64, seed: u64) -> RrConfig {
        RrConfig {
            eps,
            workers: self.workers,
            seed,
            noise: self.noise,
        }
    }
}

/// Seed of run `run` under master seed `seed`.
pub fn run_seed(seed: u64, run: u64) -> u64 {
    NoiseStream::new(seed).for_run(run).seed()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Timeout,
    Skipped,
    Error(String),
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Timeout => "TIMEOUT",
            Status::Skipped => "SKIPPED(OOM-guard)",
            Status::Error(_) => "ERROR",
        }
    }

    /// Timeouts and errors fail an experiment; skips do not.
    pub fn is_failure(&self) -> bool {
        matches!(self, Status::Timeout | Status::Error(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricValue {
    Num(f64),
    Text(String),
}

impl MetricValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetricValue::Num(x) => Some(*x),
            MetricValue::Text(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub algo: String,
    pub dataset: String,
    pub eps: f64,
    pub f: f64,
    pub b: f64,
    pub eta: f64,
    pub workers: usize,
    pub seed: u64,
    pub run: String,
    pub metric: String,
    pub value: MetricValue,
}

/// Per-run artifacts kept on request.
#[derive(Debug, Default, Serialize)]
pub struct Artifacts {
    pub estimates: Option<Vec<f64>>,
    pub ledger: Option<LedgerDump>,
    pub trace: Option<Vec<Vec<u32>>>,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub eps: f64,
    pub run: u64,
    pub seed: u64,
    #[serde(serialize_with = "status_label")]
    pub status: Status,
    pub message: Option<String>,
    pub artifacts: Artifacts,
}

fn status_label<S: serde::Serializer>(s: &Status, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(s.label())
}

#[derive(Debug, Default)]
pub struct ExperimentReport {
    pub rows: Vec<MetricRow>,
    pub runs: Vec<RunRecord>,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(|r| r.status.is_failure())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), ExperimentError> {
        write_csv(&self.rows, out)
    }

    pub fn write_json(&self, mut out: impl Write) -> Result<(), ExperimentError> {
        serde_json::to_writer_pretty(&mut out, &self.rows)?;
        out.write_all(b"\n").map_err(serde_json::Error::io)?;
        Ok(())
    }
}

pub fn write_csv(rows: &[MetricRow], out: impl Write) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> Result<Vec<MetricRow>, ExperimentError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if !headers.iter().eq(CSV_HEADER) {
        return Err(ExperimentError::Config(format!("unexpected CSV header {headers:?}")));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Exact quantities shared by all runs on one graph.
enum Truth {
    Cores { cores: Vec<u32>, max_core: u32 },
    Triangles(u64),
}

struct Outcome {
    status: Status,
    message: Option<String>,
    metrics: Vec<(&'static str, f64)>,
    artifacts: Artifacts,
}

impl Outcome {
    fn failed(status: Status, message: String) -> Self {
        Outcome {
            status,
            message: Some(message),
            metrics: Vec::new(),
            artifacts: Artifacts::default(),
        }
    }
}

fn classify(sim: Option<&SimError>, message: String) -> Outcome {
    match sim {
        Some(SimError::Timeout { .. }) => Outcome::failed(Status::Timeout, message),
        _ => Outcome::failed(Status::Error(message.clone()), message),
    }
}

fn kcore_sim(e: &KcoreError) -> Option<&SimError> {
    match e {
        KcoreError::Sim(s) => Some(s),
        _ => None,
    }
}

fn baseline_outcome(e: BaselineError) -> Outcome {
    let message = e.to_string();
    match &e {
        BaselineError::OomGuard { .. } => Outcome::failed(Status::Skipped, message),
        BaselineError::Sim(s) => classify(Some(s), message),
        BaselineError::Kcore(k) => classify(kcore_sim(k), message),
        _ => classify(None, message),
    }
}

fn triangle_outcome(e: TriangleError) -> Outcome {
    let message = e.to_string();
    match &e {
        TriangleError::MatrixTooLarge { .. } => Outcome::failed(Status::Skipped, message),
        TriangleError::Sim(s) => classify(Some(s), message),
        TriangleError::Kcore(k) => classify(kcore_sim(k), message),
        _ => classify(None, message),
    }
}

fn common_metrics(stats: &RoundStats, report: &LedgerReport, wall: Duration) -> Vec<(&'static str, f64)> {
    vec![
        ("rounds", stats.rounds as f64),
        ("messages", stats.messages as f64),
        ("bytes", stats.bytes as f64),
        ("wall_ms", wall.as_secs_f64() * 1e3),
        ("max_pair_charge", report.max_pair_charge),
    ]
}

fn factor_metrics(estimates: &[f64], cores: &[u32]) -> Vec<(&'static str, f64)> {
    let s = FactorSummary::of(&approx_factors(estimates, cores));
    vec![("avg_factor", s.avg), ("p80_factor", s.p80), ("p95_factor", s.p95), ("max_factor", s.max)]
}

fn run_once(g: &Graph, cfg: &RunConfig, truth: &Truth, eps: f64, seed: u64) -> Outcome {
    let start = Instant::now();
    let deadline = cfg.timeout.map(|t| start + t);
    match (cfg.algo, truth) {
        (Algo::Kcored | Algo::KcoreBaseline, Truth::Cores { cores, max_core }) => {
            let kc = cfg.kcore(eps, seed);
            let out = if cfg.algo == Algo::Kcored {
                kcore_coordinator_until(g, &kc, deadline).map_err(BaselineError::from)
            } else {
                kcore_baseline_until(g, &kc, deadline)
            };
            let out = match out {
                Ok(o) => o,
                Err(e) => return baseline_outcome(e),
            };
            let wall = start.elapsed();
            let mut metrics = factor_metrics(&out.run.estimates, cores);
            let (noiseless, noisy) = theoretical_bounds(g.max_degree(), *max_core, eps, cfg.eta);
            metrics.extend(common_metrics(&out.stats, &out.report, wall));
            metrics.extend([
                ("bound_noiseless", noiseless),
                ("bound_noisy", noisy),
                ("bias_cap_hits", out.run.bias_cap_hits as f64),
            ]);
            Outcome {
                status: Status::Ok,
                message: None,
                metrics,
                artifacts: Artifacts {
                    estimates: cfg.keep_estimates.then(|| out.run.estimates.clone()),
                    ledger: cfg.keep_ledger.then(|| out.ledger.dump()),
                    trace: out.run.trace,
                },
            }
        }
        (Algo::KcoreRr, Truth::Cores { cores, .. }) => match kcore_rr_until(g, &cfg.rr(eps, seed), deadline) {
            Ok(out) => {
                let wall = start.elapsed();
                let mut metrics = factor_metrics(&out.result, cores);
                metrics.extend(common_metrics(&out.stats, &out.report, wall));
                Outcome {
                    status: Status::Ok,
                    message: None,
                    metrics,
                    artifacts: Artifacts {
                        estimates: cfg.keep_estimates.then(|| out.result.clone()),
                        ledger: cfg.keep_ledger.then(|| out.ledger.dump()),
                        trace: None,
                    },
                }
            }
            Err(e) => baseline_outcome(e),
        },
        (Algo::Tcount, Truth::Triangles(exact)) => {
            let mut tc = cfg.triangle(eps, seed);
            tc.streaming = cfg.streaming;
            match triangle_coordinator_until(g, &tc, deadline) {
                Ok(out) => {
                    let wall = start.elapsed();
                    let (rel, mult) = triangle_metrics(out.run.estimate, *exact);
                    let mut metrics = vec![
                        ("estimate", out.run.estimate),
                        ("exact", *exact as f64),
                        ("rel_error", rel),
                        ("mult_factor", mult),
                        ("dmax", out.run.dmax as f64),
                    ];
                    metrics.extend(common_metrics(&out.stats, &out.report, wall));
                    Outcome {
                        status: Status::Ok,
                        message: None,
                        metrics,
                        artifacts: Artifacts {
                            estimates: cfg.keep_estimates.then(|| out.run.partials.clone()),
                            ledger: cfg.keep_ledger.then(|| out.ledger.dump()),
                            trace: out.run.kcore.trace,
                        },
                    }
                }
                Err(e) => triangle_outcome(e),
            }
        }
        (Algo::TcountRr, Truth::Triangles(exact)) => match tcount_rr_until(g, &cfg.rr(eps, seed), deadline) {
            Ok(out) => {
                let wall = start.elapsed();
                let (estimate, _) = out.result;
                let (rel, mult) = triangle_metrics(estimate, *exact);
                let mut metrics = vec![
                    ("estimate", estimate),
                    ("exact", *exact as f64),
                    ("rel_error", rel),
                    ("mult_factor", mult),
                ];
                metrics.extend(common_metrics(&out.stats, &out.report, wall));
                Outcome {
                    status: Status::Ok,
                    message: None,
                    metrics,
                    artifacts: Artifacts {
                        estimates: None,
                        ledger: cfg.keep_ledger.then(|| out.ledger.dump()),
                        trace: None,
                    },
                }
            }
            Err(e) => baseline_outcome(e),
        },
        _ => unreachable!("truth matches the algorithm family"),
    }
}

/// Runs `cfg.runs` seeded repetitions for every ε in the sweep.
pub fn run_experiment(g: &Graph, cfg: &RunConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate(g)?;
    let truth = if cfg.algo.is_kcore() {
        let cores = exact_core_numbers(g).core;
        let max_core = cores.iter().copied().max().unwrap_or(0);
        Truth::Cores { cores, max_core }
    } else {
        Truth::Triangles(exact_triangle_count(g))
    };
    let mut report = ExperimentReport::default();
    for &eps in &cfg.eps {
        let row = |run: String, metric: &str, value: MetricValue| MetricRow {
            algo: cfg.algo.name().to_string(),
            dataset: cfg.dataset.clone(),
            eps,
            f: cfg.fraction,
            b: cfg.bias,
            eta: cfg.eta,
            workers: cfg.workers,
            seed: cfg.seed,
            run,
            metric: metric.to_string(),
            value,
        };
        let mut sums: BTreeMap<&'static str, (f64, u64)> = BTreeMap::new();
        let mut order: Vec<&'static str> = Vec::new();
        let mut worst: Option<Status> = None;
        for run in 0..cfg.runs {
            let seed = run_seed(cfg.seed, run);
            let outcome = run_once(g, cfg, &truth, eps, seed);
            report.rows.push(row(
                run.to_string(),
                "status",
                MetricValue::Text(outcome.status.label().to_string()),
            ));
            for &(name, value) in &outcome.metrics {
                report.rows.push(row(run.to_string(), name, MetricValue::Num(value)));
                let entry = sums.entry(name).or_insert_with(|| {
                    order.push(name);
                    (0.0, 0)
                });
                entry.0 += value;
                entry.1 += 1;
            }
            if outcome.status != Status::Ok && worst.as_ref().is_none_or(|w| !w.is_failure()) {
                worst = Some(outcome.status.clone());
            }
            report.runs.push(RunRecord {
                eps,
                run,
                seed,
                status: outcome.status,
                message: outcome.message,
                artifacts: outcome.artifacts,
            });
        }
        let mean = || "mean".to_string();
        let status = worst.map_or("ok", |s| s.label());
        report.rows.push(row(mean(), "status", MetricValue::Text(status.to_string())));
        for name in order {
            let (total, count) = sums[name];
            report.rows.push(row(mean(), name, MetricValue::Num(total / count as f64)));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn small_cfg(algo: Algo) -> RunConfig {
        RunConfig {
            algo,
            dataset: "petersen".into(),
            eps: vec![1.0, 2.0],
            workers: 3,
            runs: 2,
            seed: 5,
            ..RunConfig::default()
        }
    }

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert!("kcore".parse::<Algo>().is_err());
    }

    #[test]
    fn config_errors_are_reported() {
        let g = fixtures::petersen();
        let mut cfg = small_cfg(Algo::Kcored);
        cfg.eps = vec![0.0];
        assert!(matches!(run_experiment(&g, &cfg), Err(ExperimentError::Config(_))));
        let mut cfg = small_cfg(Algo::Kcored);
        cfg.workers = 11;
        assert!(matches!(run_experiment(&g, &cfg), Err(ExperimentError::Config(_))));
        let mut cfg = small_cfg(Algo::Kcored);
        cfg.fraction = 1.0;
        assert!(cfg.validate(&g).is_err());
    }

    #[test]
    fn rows_have_statuses_and_means() {
        let g = fixtures::petersen();
        for algo in Algo::ALL {
            let report = run_experiment(&g, &small_cfg(algo)).unwrap();
            assert_eq!(report.runs.len(), 4);
            assert!(report.runs.iter().all(|r| r.status == Status::Ok), "{algo}");
            let statuses = report.rows.iter().filter(|r| r.metric == "status").count();
            assert_eq!(statuses, 6, "{algo}");
            let means = report.rows.iter().filter(|r| r.run == "mean" && r.metric == "status");
            assert!(means.clone().all(|r| r.value == MetricValue::Text("ok".into())));
        }
    }

    #[test]
    fn csv_round_trip_and_recomputed_means() {
        let g = fixtures::petersen();
        let report = run_experiment(&g, &small_cfg(Algo::Tcount)).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("algo,dataset,eps,f,b,eta,workers,seed,run,metric,value\n"));
        let rows = read_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, report.rows);

        let mut groups: BTreeMap<(u64, &str), Vec<f64>> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.run != "mean") {
            if let Some(x) = r.value.as_f64() {
                groups.entry((r.eps.to_bits(), &r.metric)).or_default().push(x);
            }
        }
        for r in rows.iter().filter(|r| r.run == "mean" && r.metric != "status") {
            let xs = &groups[&(r.eps.to_bits(), r.metric.as_str())];
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            assert_eq!(r.value.as_f64().unwrap(), m, "{}", r.metric);
        }
    }

    #[test]
    fn json_mirrors_csv() {
        let g = fixtures::petersen();
        let report = run_experiment(&g, &small_cfg(Algo::KcoreRr)).unwrap();
        let mut buf = Vec::new();
        report.write_json(&mut buf).unwrap();
        let rows: Vec<MetricRow> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(rows, report.rows);
    }

    #[test]
    fn runs_are_reproducible_apart_from_wall_time() {
        let g = fixtures::gnp(40, 0.2, 3);
        let cfg = small_cfg(Algo::Kcored);
        let strip = |r: ExperimentReport| -> Vec<MetricRow> {
            r.rows.into_iter().filter(|r| r.metric != "wall_ms").collect()
        };
        let a = strip(run_experiment(&g, &cfg).unwrap());
        let b = strip(run_experiment(&g, &cfg).unwrap());
        assert_eq!(a, b);
        assert_ne!(run_seed(5, 0), run_seed(5, 1));
    }

    #[test]
    fn zero_timeout_marks_runs() {
        let g = fixtures::petersen();
        let mut cfg = small_cfg(Algo::Kcored);
        cfg.timeout = Some(Duration::ZERO);
        let report = run_experiment(&g, &cfg).unwrap();
        assert!(report.runs.iter().all(|r| r.status == Status::Timeout));
        assert_eq!(report.failures().count(), 4);
        let mean_status = report.rows.iter().find(|r| r.run == "mean").unwrap();
        assert_eq!(mean_status.value, MetricValue::Text("TIMEOUT".into()));
    }

    #[test]
    fn artifacts_are_kept_on_request() {
        let g = fixtures::petersen();
        let mut cfg = small_cfg(Algo::Kcored);
        cfg.keep_estimates = true;
        cfg.keep_ledger = true;
        cfg.keep_trace = true;
        let report = run_experiment(&g, &cfg).unwrap();
        let a = &report.runs[0].artifacts;
        assert_eq!(a.estimates.as_ref().unwrap().len(), 10);
        assert!(a.ledger.is_some() && a.trace.is_some());
    }
}
