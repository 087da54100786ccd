// SPDX-License-Identifier: Apache-2.0

use bitvec::prelude::*;
use rand::RngCore;

use super::noise::unit_f64;

/// Probability `1/(e^ε + 1)` with which randomized response flips a bit.
pub fn flip_probability(eps: f64) -> f64 {
    1.0 / (1.0 + eps.exp())
}

/// Randomized response over one bit row.
///
/// Bit `i` consumes the `i`-th 64-bit draw of `rng`, so a single entry can
/// later be recomputed by seeking the generator (see
/// [`NoiseStream::uniform_at`](super::NoiseStream::uniform_at)).
pub fn randomized_response_row<R: RngCore + ?Sized>(
    private_bits: &BitSlice<u64, Lsb0>,
    eps: f64,
    rng: &mut R,
) -> BitVec<u64, Lsb0> {
    let q = flip_probability(eps);
    private_bits
        .iter()
        .by_vals()
        .map(|b| b ^ (unit_f64(rng.next_u64()) < q))
        .collect()
}

/// The affine map `y ↦ a·y + c` that turns a randomized-response bit into an
/// unbiased estimate of the original bit: `a = (e^ε+1)/(e^ε−1)`, `c = −1/(e^ε−1)`.
pub fn debias_weights(eps: f64) -> (f64, f64) {
    let c = -1.0 / eps.exp_m1();
    let a = 1.0 / (eps / 2.0).tanh();
    (a, c)
}

/// `(x·(e^ε + 1) − 1)/(e^ε − 1)`, evaluated in a form that stays finite for large ε.
pub fn debias_edge_bit(x: bool, eps: f64) -> f64 {
    if x {
        -1.0 / (-eps).exp_m1()
    } else {
        -1.0 / eps.exp_m1()
    }
}
