// SPDX-License-Identifier: Apache-2.0

//! Edge-private k-core decomposition and triangle counting in the local
//! model, run on an in-process coordinator/worker simulator.
//!
//! ```
//! use ledp_core::fixtures;
//! use ledp_core::kcore::{kcore_coordinator, KcoreConfig};
//!
//! let g = fixtures::petersen();
//! let out = kcore_coordinator(&g, &KcoreConfig { workers: 2, ..KcoreConfig::default() }).unwrap();
//! assert_eq!(out.run.estimates.len(), 10);
//! assert!(out.report.max_pair_charge <= 1.0 + 1e-12);
//! ```

pub mod baselines;
pub mod dp;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod kcore;
pub mod lds;
pub mod metrics;
pub mod sim;
pub mod sum;
pub mod triangle;

pub use graph::{Graph, NodeId};
