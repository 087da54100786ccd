// SPDX-License-Identifier: Apache-2.0

//! Exact floating-point summation.
//!
//! Worker partial sums are exchanged as [`ExactSum`] values, which hold the
//! exact real-valued sum as a short list of non-overlapping doubles. Merging
//! them and rounding once at the end gives the correctly rounded total no
//! matter how the terms were split among workers.

use crate::sim::Payload;

/// Running exact sum of `f64` terms (Shewchuk's non-overlapping partials).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum::default()
    }

    /// Adds a finite term exactly.
    pub fn add(&mut self, mut x: f64) {
        debug_assert!(x.is_finite(), "non-finite summand {x}");
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    /// The exact sum rounded to the nearest double, ties to even.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let Some(mut k) = p.len().checked_sub(1) else {
            return 0.0;
        };
        let mut hi = p[k];
        let mut lo = 0.0;
        while k > 0 {
            k -= 1;
            let x = hi;
            let y = p[k];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        // the remaining partials may push a halfway case over
        if k > 0 && ((lo < 0.0 && p[k - 1] < 0.0) || (lo > 0.0 && p[k - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }

    pub fn len(&self) -> usize {
        self.partials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partials.is_empty()
    }
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExactSum::new();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

impl Payload for ExactSum {
    fn logical_bytes(&self) -> u64 {
        8 * self.partials.len().max(1) as u64
    }
}
