// SPDX-License-Identifier: Apache-2.0

//! Per-node record of local-randomizer invocations.
//!
//! Every charge is attached to the node whose adjacency list was read and
//! carries a [`Scope`]: the set of node pairs `{u, j}` whose presence or
//! absence in `u`'s list can change the randomizer's output. A pair `{u, v}`
//! is charged the sum of `u`'s charges whose scope covers `v` plus `v`'s
//! charges whose scope covers `u`. The ledger asserts that the worst pair
//! stays within the total budget.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;

use serde::Serialize;

use super::DpError;
use crate::graph::NodeId;

/// Which pairs `{u, j}` a charge at `u` covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Scope {
    /// Every pair involving `u`.
    Incident,
    /// Pairs with `j > u`: one row of the upper-triangular adjacency matrix.
    Upper,
    /// Pairs oriented away from `u` under the published ordering.
    /// Falls back to [`Scope::Incident`] when no ordering has been registered.
    Outgoing,
}

/// One local-randomizer invocation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Charge {
    pub label: &'static str,
    pub eps: f64,
    pub scope: Scope,
}

impl Charge {
    pub fn new(label: &'static str, eps: f64, scope: Scope) -> Self {
        Charge { label, eps, scope }
    }
}

#[derive(Clone, Debug, Serialize)]
struct Entry {
    label: &'static str,
    scope: Scope,
    eps_each: f64,
    count: u64,
}

#[derive(Clone, Copy, Debug, Default)]
struct Totals {
    incident: f64,
    upper: f64,
    outgoing: f64,
}

/// Result of a successful [`BudgetLedger::assert_within`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerReport {
    /// Largest summed charge over all node pairs.
    pub max_pair_charge: f64,
    pub worst_pair: Option<(NodeId, NodeId)>,
    /// Total number of recorded randomizer invocations.
    pub invocations: u64,
    /// False when the graph was too large for the pairwise scan and the
    /// maximum is a sound upper bound instead.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerViolation {
    pub pair: (NodeId, NodeId),
    pub total: f64,
    pub budget: f64,
    pub labels: Vec<String>,
}

impl fmt::Display for LedgerViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pair {:?} charged {} > budget {}: {}",
            self.pair,
            self.total,
            self.budget,
            self.labels.join(", ")
        )
    }
}

impl std::error::Error for LedgerViolation {}

/// Serializable snapshot for audit dumps.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerDump {
    pub nodes: Vec<NodeAccount>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeAccount {
    pub node: NodeId,
    pub charges: Vec<DumpEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DumpEntry {
    pub label: &'static str,
    pub scope: Scope,
    pub eps_each: f64,
    pub count: u64,
}

/// Pairwise scan limit; larger graphs get a bound instead of the exact maximum.
const EXACT_SCAN_MAX_NODES: usize = 20_000;

#[derive(Debug)]
pub struct BudgetLedger {
    accounts: Mutex<Vec<Vec<Entry>>>,
    rank: Option<Vec<u32>>,
}

impl BudgetLedger {
    pub fn new(n: usize) -> Self {
        BudgetLedger {
            accounts: Mutex::new(vec![Vec::new(); n]),
            rank: None,
        }
    }

    pub fn n(&self) -> usize {
        self.accounts.lock().unwrap().len()
    }

    /// Registers the ordering (node → rank) that defines [`Scope::Outgoing`].
    pub fn set_orientation(&mut self, rank: Vec<u32>) {
        assert_eq!(rank.len(), self.n(), "orientation must rank every node");
        self.rank = Some(rank);
    }

    pub fn charge(&self, node: NodeId, charge: Charge) -> Result<(), DpError> {
        self.charge_all(std::iter::once((node, charge)))
    }

    /// Records a batch of charges under one lock.
    pub fn charge_all(
        &self,
        charges: impl IntoIterator<Item = (NodeId, Charge)>,
    ) -> Result<(), DpError> {
        let mut accounts = self.accounts.lock().unwrap();
        for (node, c) in charges {
            if c.eps.is_nan() || c.eps <= 0.0 {
                return Err(DpError::Charge(c.eps));
            }
            let list = &mut accounts[node as usize];
            match list.iter_mut().find(|e| {
                e.label == c.label && e.scope == c.scope && e.eps_each.to_bits() == c.eps.to_bits()
            }) {
                Some(e) => e.count += 1,
                None => list.push(Entry {
                    label: c.label,
                    scope: c.scope,
                    eps_each: c.eps,
                    count: 1,
                }),
            }
        }
        Ok(())
    }

    /// Number of recorded invocations at `node` carrying `label`.
    pub fn invocations(&self, node: NodeId, label: &str) -> u64 {
        self.accounts.lock().unwrap()[node as usize]
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.count)
            .sum()
    }

    pub fn total_invocations(&self) -> u64 {
        self.accounts
            .lock()
            .unwrap()
            .iter()
            .flatten()
            .map(|e| e.count)
            .sum()
    }

    fn totals(&self) -> Vec<Totals> {
        let outgoing_known = self.rank.is_some();
        self.accounts
            .lock()
            .unwrap()
            .iter()
            .map(|list| {
                let mut t = Totals::default();
                for e in list {
                    let amount = e.eps_each * e.count as f64;
                    match e.scope {
                        Scope::Incident => t.incident += amount,
                        Scope::Upper => t.upper += amount,
                        Scope::Outgoing if outgoing_known => t.outgoing += amount,
                        Scope::Outgoing => t.incident += amount,
                    }
                }
                t
            })
            .collect()
    }

    /// Summed charge of the pair `{u, v}`.
    pub fn pair_charge(&self, u: NodeId, v: NodeId) -> f64 {
        let totals = self.totals();
        self.pair_total(&totals, u, v)
    }

    fn pair_total(&self, totals: &[Totals], u: NodeId, v: NodeId) -> f64 {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let (a, b) = (totals[lo as usize], totals[hi as usize]);
        let mut sum = a.incident + b.incident + a.upper;
        if let Some(rank) = &self.rank {
            sum += if rank[lo as usize] < rank[hi as usize] {
                a.outgoing
            } else {
                b.outgoing
            };
        }
        sum
    }

    /// Verifies that every node pair's summed charge is at most `budget`.
    ///
    /// A relative slack of `1e-12` absorbs floating-point rounding in the
    /// sums; it is far below any charge the algorithms make.
    pub fn assert_within(&self, budget: f64) -> Result<LedgerReport, LedgerViolation> {
        let totals = self.totals();
        let n = totals.len();
        let invocations = self.total_invocations();
        let slack = budget * 1e-12;
        if n < 2 {
            return Ok(LedgerReport {
                max_pair_charge: 0.0,
                worst_pair: None,
                invocations,
                exact: true,
            });
        }

        let (max, worst, exact) = if n <= EXACT_SCAN_MAX_NODES {
            let mut best = (f64::MIN, (0, 1));
            for u in 0..n as NodeId {
                for v in u + 1..n as NodeId {
                    let t = self.pair_total(&totals, u, v);
                    if t > best.0 {
                        best = (t, (u, v));
                    }
                }
            }
            (best.0, Some(best.1), true)
        } else {
            // every pair is charged at most the two largest per-node sums
            let mut per_node: Vec<(f64, NodeId)> = totals
                .iter()
                .enumerate()
                .map(|(v, t)| (t.incident + t.upper + t.outgoing, v as NodeId))
                .collect();
            per_node.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let bound = per_node[0].0 + per_node[1].0;
            let pair = (per_node[0].1.min(per_node[1].1), per_node[0].1.max(per_node[1].1));
            (bound, Some(pair), false)
        };

        if max > budget + slack {
            let (u, v) = worst.unwrap();
            return Err(LedgerViolation {
                pair: (u, v),
                total: max,
                budget,
                labels: self.describe(u).into_iter().chain(self.describe(v)).collect(),
            });
        }
        Ok(LedgerReport {
            max_pair_charge: max.max(0.0),
            worst_pair: worst,
            invocations,
            exact,
        })
    }

    fn describe(&self, node: NodeId) -> Vec<String> {
        self.accounts.lock().unwrap()[node as usize]
            .iter()
            .map(|e| {
                format!(
                    "{node}:{}[{:?}] {}x{}",
                    e.label, e.scope, e.count, e.eps_each
                )
            })
            .collect()
    }

    /// Charges grouped by label, summed over all nodes, for reports.
    pub fn summary(&self) -> BTreeMap<&'static str, u64> {
        let mut out = BTreeMap::new();
        for e in self.accounts.lock().unwrap().iter().flatten() {
            *out.entry(e.label).or_insert(0) += e.count;
        }
        out
    }

    pub fn dump(&self) -> LedgerDump {
        let accounts = self.accounts.lock().unwrap();
        LedgerDump {
            nodes: accounts
                .iter()
                .enumerate()
                .map(|(v, list)| NodeAccount {
                    node: v as NodeId,
                    charges: list
                        .iter()
                        .map(|e| DumpEntry {
                            label: e.label,
                            scope: e.scope,
                            eps_each: e.eps_each,
                            count: e.count,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}
