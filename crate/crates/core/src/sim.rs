// SPDX-License-Identifier: Apache-2.0

//! In-process coordinator/worker simulation with synchronous rounds.
//!
//! The coordinator owns a [`Runtime`]. Each call to [`Runtime::run_round`]
//! runs one task on every worker concurrently, waits for all of them (the
//! barrier), and returns their outputs in worker order. Between rounds the
//! coordinator publishes immutable snapshots; since `run_round` borrows the
//! runtime mutably, nothing can be published while a round is in flight.
//!
//! Worker code never sees the [`Graph`]. It receives a [`WorkerContext`],
//! which only hands out adjacency lists of the worker's own nodes, and only
//! inside [`WorkerContext::release`], which records a privacy charge:
//!
//! ```compile_fail
//! fn peek(ctx: &ledp_core::sim::WorkerContext<'_>) {
//!     let _ = ctx.graph; // private: workers cannot reach the raw graph
//! }
//! ```

use std::ops::Range;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::dp::{BudgetLedger, Charge, DpError};
use crate::graph::{Graph, GraphError, NodeId, Partition};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Partition(#[from] GraphError),
    #[error("worker {worker} panicked in round {round}: {message}")]
    WorkerPanic {
        worker: usize,
        round: u64,
        message: String,
    },
    #[error("wall-clock limit exceeded after {rounds} rounds")]
    Timeout { rounds: u64 },
    #[error(transparent)]
    Ledger(#[from] DpError),
}

type WorkerResult<O> = (O, Vec<(NodeId, Charge)>);

/// Logical size of a worker message, for communication accounting.
///
/// Bit vectors count one bit per entry, integers and floats eight bytes.
pub trait Payload {
    fn logical_bytes(&self) -> u64;
}

impl Payload for u64 {
    fn logical_bytes(&self) -> u64 {
        8
    }
}

impl Payload for i64 {
    fn logical_bytes(&self) -> u64 {
        8
    }
}

impl Payload for f64 {
    fn logical_bytes(&self) -> u64 {
        8
    }
}

/// Packed bits, rounded up to whole bytes (at least one).
pub fn packed_bytes(bits: u64) -> u64 {
    bits.div_ceil(8).max(1)
}

/// Communication counters, monotone over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoundStats {
    pub rounds: u64,
    pub messages: u64,
    pub bytes: u64,
    pub publications: u64,
}

/// What the coordinator has made public so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Publication {
    Levels,
    RoundCount,
    Ordering,
    NoisyEdges,
    MaxOutDegree,
}

/// Versioned log of public releases. The values themselves live with the
/// algorithm that produced them, as `Arc` snapshots handed to workers.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PublicState {
    pub version: u64,
    pub history: Vec<Publication>,
}

impl PublicState {
    pub fn count(&self, kind: Publication) -> usize {
        self.history.iter().filter(|&&p| p == kind).count()
    }
}

/// A worker's view during one round.
pub struct WorkerContext<'a> {
    worker: usize,
    nodes: Range<NodeId>,
    graph: &'a Graph,
    pending: Vec<(NodeId, Charge)>,
}

impl<'a> WorkerContext<'a> {
    pub fn worker(&self) -> usize {
        self.worker
    }

    /// Nodes owned by this worker.
    pub fn nodes(&self) -> Range<NodeId> {
        self.nodes.clone()
    }

    /// Public graph size.
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Runs `f` on the private adjacency list of `node` and records `charge` against it.
    ///
    /// Panics if `node` belongs to another worker; a panicking worker aborts
    /// the round with [`SimError::WorkerPanic`].
    pub fn release<T>(&mut self, node: NodeId, charge: Charge, f: impl FnOnce(&[NodeId]) -> T) -> T {
        assert!(
            self.nodes.contains(&node),
            "worker {} may not read node {node} (owns {:?})",
            self.worker,
            self.nodes
        );
        self.pending.push((node, charge));
        f(self.graph.neighbors(node))
    }
}

/// Coordinator-side handle to the simulated cluster.
pub struct Runtime<'g> {
    graph: &'g Graph,
    partition: Partition,
    ledger: BudgetLedger,
    stats: RoundStats,
    public: PublicState,
    deadline: Option<Instant>,
}

impl<'g> Runtime<'g> {
    pub fn new(graph: &'g Graph, workers: usize) -> Result<Self, SimError> {
        let partition = Partition::new(graph.n(), workers)?;
        Ok(Runtime {
            graph,
            partition,
            ledger: BudgetLedger::new(graph.n()),
            stats: RoundStats::default(),
            public: PublicState::default(),
            deadline: None,
        })
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn stats(&self) -> RoundStats {
        self.stats
    }

    pub fn public(&self) -> &PublicState {
        &self.public
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut BudgetLedger {
        &mut self.ledger
    }

    pub fn into_ledger(self) -> BudgetLedger {
        self.ledger
    }

    /// Fresh per-worker state, one slot per worker.
    pub fn worker_states<S>(&self, mut init: impl FnMut(Range<NodeId>) -> S) -> Vec<S> {
        self.partition.ranges().map(&mut init).collect()
    }

    pub fn check_deadline(&self) -> Result<(), SimError> {
        match self.deadline {
            Some(d) if Instant::now() > d => Err(SimError::Timeout {
                rounds: self.stats.rounds,
            }),
            _ => Ok(()),
        }
    }

    /// Runs `task` on every worker and collects outputs in worker order.
    ///
    /// Adds one message per worker and each output's logical size to the
    /// stats, and commits the workers' privacy charges to the ledger.
    pub fn run_round<S, O, F>(&mut self, states: &mut [S], task: F) -> Result<Vec<O>, SimError>
    where
        S: Send,
        O: Send + Payload,
        F: Fn(&mut WorkerContext<'_>, &mut S) -> O + Sync,
    {
        assert_eq!(states.len(), self.partition.workers(), "one state per worker");
        self.check_deadline()?;
        let round = self.stats.rounds;
        let graph = self.graph;
        let ranges: Vec<Range<NodeId>> = self.partition.ranges().collect();

        let run_one = |worker: usize, state: &mut S| {
            let mut ctx = WorkerContext {
                worker,
                nodes: ranges[worker].clone(),
                graph,
                pending: Vec::new(),
            };
            let out = task(&mut ctx, state);
            (out, ctx.pending)
        };

        let results: Vec<std::thread::Result<WorkerResult<O>>> =
            if states.len() == 1 {
                vec![std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                    run_one(0, &mut states[0])
                }))]
            } else {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = states
                        .iter_mut()
                        .enumerate()
                        .map(|(w, s)| {
                            let run_one = &run_one;
                            scope.spawn(move || run_one(w, s))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join()).collect()
                })
            };

        let mut outputs = Vec::with_capacity(results.len());
        for (worker, r) in results.into_iter().enumerate() {
            match r {
                Ok((out, charges)) => {
                    self.ledger.charge_all(charges)?;
                    self.stats.messages += 1;
                    self.stats.bytes += out.logical_bytes().max(1);
                    outputs.push(out);
                }
                Err(panic) => {
                    let message = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "unknown panic".into());
                    return Err(SimError::WorkerPanic {
                        worker,
                        round,
                        message,
                    });
                }
            }
        }
        self.stats.rounds += 1;
        Ok(outputs)
    }

    /// Records a public release of `bytes` logical bytes and returns the new version.
    pub fn publish(&mut self, kind: Publication, bytes: u64) -> u64 {
        self.public.version += 1;
        self.public.history.push(kind);
        self.stats.publications += 1;
        self.stats.bytes += bytes;
        self.public.version
    }

    /// Publishes a per-node array of 64-bit values (levels, ranks).
    pub fn publish_per_node<T>(&mut self, kind: Publication, values: &Arc<[T]>) -> u64 {
        let bytes = 8 * values.len() as u64;
        self.publish(kind, bytes)
    }
}
