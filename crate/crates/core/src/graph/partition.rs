// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;

use super::{GraphError, NodeId};

/// Contiguous assignment of nodes to workers.
///
/// Workers `0..M-1` own `⌊n/M⌋` consecutive IDs each; the last worker owns
/// the remainder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    workers: usize,
    chunk: usize,
}

impl Partition {
    pub fn new(n: usize, workers: usize) -> Result<Self, GraphError> {
        if workers == 0 || workers > n {
            return Err(GraphError::WorkerCount { workers, n });
        }
        Ok(Partition {
            n,
            workers,
            chunk: n / workers,
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn range(&self, worker: usize) -> Range<NodeId> {
        assert!(worker < self.workers, "worker {worker} out of range");
        let start = worker * self.chunk;
        let end = if worker + 1 == self.workers {
            self.n
        } else {
            start + self.chunk
        };
        start as NodeId..end as NodeId
    }

    pub fn owner(&self, v: NodeId) -> usize {
        let v = v as usize;
        assert!(v < self.n, "node {v} out of range");
        (v / self.chunk).min(self.workers - 1)
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<NodeId>> + '_ {
        (0..self.workers).map(|w| self.range(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn remainder_goes_to_last_worker() {
        let p = Partition::new(10, 3).unwrap();
        let r: Vec<_> = p.ranges().collect();
        assert_eq!(r, vec![0..3, 3..6, 6..10]);
    }

    #[test]
    fn one_node_each() {
        let p = Partition::new(7, 7).unwrap();
        assert!(p.ranges().all(|r| r.len() == 1));
    }

    #[test]
    fn too_many_workers() {
        assert!(Partition::new(5, 9).is_err());
        assert!(Partition::new(5, 0).is_err());
    }

    proptest! {
        #[test]
        fn ranges_tile_the_node_set(n in 1usize..500, m in 1usize..64) {
            prop_assume!(m <= n);
            let p = Partition::new(n, m).unwrap();
            let mut next = 0;
            for (w, r) in p.ranges().enumerate() {
                prop_assert_eq!(r.start as usize, next);
                next = r.end as usize;
                for v in r {
                    prop_assert_eq!(p.owner(v), w);
                }
            }
            prop_assert_eq!(next, n);
        }
    }
}
