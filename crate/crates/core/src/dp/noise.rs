// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};

use super::DpError;
use crate::graph::NodeId;

/// Which randomizer a draw belongs to. Part of every [`NoiseContext`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    Threshold = 1,
    LevelMove = 2,
    RandomizedResponse = 3,
    MaxOutDegree = 4,
    TriangleLaplace = 5,
    /// Free for tests and ad-hoc sampling.
    Scratch = 0xff,
}

/// Full derivation context of one random stream.
///
/// Worker IDs are deliberately absent: a node's noise must not depend on
/// which worker happens to own it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NoiseContext {
    pub stage: Stage,
    pub node: NodeId,
    pub round: u32,
}

impl NoiseContext {
    pub fn new(stage: Stage, node: NodeId, round: u32) -> Self {
        NoiseContext { stage, node, round }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed from which every context stream is derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream for the `i`-th repetition of an experiment.
    pub fn for_run(&self, run: u64) -> Self {
        NoiseStream::new(splitmix64(self.seed ^ splitmix64(run.wrapping_add(0x0072_756e))))
    }

    /// A fresh ChaCha8 generator keyed by `(seed, ctx)`. Successive draws from
    /// it are the draw index of the context.
    pub fn rng(&self, ctx: NoiseContext) -> ChaCha8Rng {
        let mut h = splitmix64(self.seed);
        h = splitmix64(h ^ ctx.stage as u64);
        h = splitmix64(h ^ ctx.node as u64);
        h = splitmix64(h ^ ((ctx.round as u64) << 1 | 1));
        let mut key = [0u8; 32];
        let mut k = h;
        for chunk in key.chunks_mut(8) {
            k = splitmix64(k);
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }

    /// Uniform `[0, 1)` value at a fixed position of a context stream,
    /// addressable without generating the preceding draws.
    pub fn uniform_at(&self, ctx: NoiseContext, index: u64) -> f64 {
        let mut rng = self.rng(ctx);
        rng.set_word_pos(2 * index as u128);
        unit_f64(rng.next_u64())
    }

    pub fn geom(&self, ctx: NoiseContext, param: GeomParam) -> i64 {
        sample_geom(&mut self.rng(ctx), param)
    }

    pub fn laplace(&self, ctx: NoiseContext, param: LaplaceParam) -> f64 {
        sample_laplace(&mut self.rng(ctx), param)
    }
}

pub(crate) fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Parameter `b > 0` of the symmetric geometric distribution, whose pmf is
/// `(e^b − 1)/(e^b + 1) · e^{−|i|·b}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeomParam(f64);

impl GeomParam {
    pub fn new(b: f64) -> Result<Self, DpError> {
        if b > 0.0 {
            Ok(GeomParam(b))
        } else {
            Err(DpError::GeomParam(b))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn pmf(self, i: i64) -> f64 {
        let b = self.0;
        (b / 2.0).tanh() * (-(i.unsigned_abs() as f64) * b).exp()
    }
}

/// Draws from the symmetric geometric distribution.
///
/// The difference of two i.i.d. `Geometric(1 − e^{−b})` failure counts has
/// exactly the two-sided pmf; each count is sampled by inversion, so the
/// support is unbounded and no pmf table is summed.
pub fn sample_geom<R: Rng + ?Sized>(rng: &mut R, param: GeomParam) -> i64 {
    let p = -(-param.0).exp_m1();
    if p >= 1.0 {
        return 0;
    }
    let g = Geometric::new(p).expect("p in (0, 1)");
    let a = g.sample(rng) as i64;
    let b = g.sample(rng) as i64;
    a - b
}

/// Inverse scale `β` of a Laplace distribution with density `∝ e^{−β|x|}`.
///
/// Larger `β` means less noise; the variance is `2/β²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceParam(f64);

impl LaplaceParam {
    pub fn new(inv_scale: f64) -> Result<Self, DpError> {
        if inv_scale > 0.0 && inv_scale.is_finite() {
            Ok(LaplaceParam(inv_scale))
        } else {
            Err(DpError::LaplaceParam(inv_scale))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, param: LaplaceParam) -> f64 {
    let e = Exp::new(param.0).expect("positive rate");
    e.sample(rng) - e.sample(rng)
}
