// SPDX-License-Identifier: Apache-2.0

//! Accuracy metrics and theoretical reference lines.

use serde::Serialize;

/// `max(s, t)/min(s, t)` with the estimate clamped to at least 1.
pub fn node_approx_factor(estimate: f64, exact: u32) -> f64 {
    let s = estimate.max(1.0);
    let t = (exact as f64).max(1.0);
    s.max(t) / s.min(t)
}

pub fn approx_factors(estimates: &[f64], exact: &[u32]) -> Vec<f64> {
    assert_eq!(estimates.len(), exact.len(), "one estimate per node");
    estimates
        .iter()
        .zip(exact)
        .map(|(&s, &t)| node_approx_factor(s, t))
        .collect()
}

/// Nearest-rank percentile: the value at rank `⌈p/100 · N⌉` (1-based) of the sorted sample.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    assert!((0.0..=100.0).contains(&p), "percentile {p} out of range");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FactorSummary {
    pub avg: f64,
    pub p80: f64,
    pub p95: f64,
    pub max: f64,
}

impl FactorSummary {
    pub fn of(factors: &[f64]) -> Self {
        let mut sorted = factors.to_vec();
        sorted.sort_by(f64::total_cmp);
        FactorSummary {
            avg: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p80: percentile(&sorted, 80.0),
            p95: percentile(&sorted, 95.0),
            max: *sorted.last().expect("non-empty"),
        }
    }
}

/// `(|Δ̃ − T|/T, max(Δ̃, T)/max(1, min(Δ̃, T)))`.
pub fn triangle_metrics(estimate: f64, exact: u64) -> (f64, f64) {
    let t = exact as f64;
    let relative = (estimate - t).abs() / t;
    let multiplicative = estimate.max(t) / estimate.min(t).max(1.0);
    (relative, multiplicative)
}

/// Reference lines for approximation factors: `2 + η`, and `2 + η` plus
/// `log³_{1+η/5}(D_max)/(ε·k_max)`.
pub fn theoretical_bounds(max_degree: usize, max_core: u32, eps: f64, eta: f64) -> (f64, f64) {
    let noiseless = 2.0 + eta;
    let log = (max_degree as f64).ln() / (1.0 + eta / 5.0).ln();
    (noiseless, noiseless + log.powi(3) / (eps * max_core as f64))
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}
