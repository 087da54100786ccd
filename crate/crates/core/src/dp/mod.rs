// SPDX-License-Identifier: Apache-2.0

//! Noise primitives and privacy accounting.
//!
//! All randomness is drawn from [`NoiseStream`], a counter-based derivation
//! from a master seed and a [`NoiseContext`]. The value of a draw depends
//! only on `(seed, context)`, never on which worker thread made it or when,
//! so simulations are reproducible for any worker count.
//!
//! The samplers are simulation-grade. They are not constant-time and not
//! cryptographically secure, and must not be used to protect real data.

mod ledger;
mod noise;
mod rr;

pub use ledger::{BudgetLedger, Charge, LedgerDump, LedgerReport, LedgerViolation, Scope};
pub use noise::{
    sample_geom, sample_laplace, GeomParam, LaplaceParam, NoiseContext, NoiseStream, Stage,
};
pub use rr::{debias_edge_bit, debias_weights, flip_probability, randomized_response_row};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("geometric parameter must be positive, got {0}")]
    GeomParam(f64),
    #[error("laplace inverse scale must be positive and finite, got {0}")]
    LaplaceParam(f64),
    #[error("privacy charge must be positive, got {0}")]
    Charge(f64),
}
