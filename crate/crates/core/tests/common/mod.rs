// SPDX-License-Identifier: Apache-2.0

//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use ledp_core::dp::{sample_geom, GeomParam};
use ledp_core::graph::Graph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn adjacency_matrix(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.n();
    let mut a = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        a[u as usize][v as usize] = true;
        a[v as usize][u as usize] = true;
    }
    a
}

/// Core numbers by iterated deletion, separately for every k.
pub fn brute_cores(g: &Graph) -> Vec<u32> {
    let a = adjacency_matrix(g);
    let n = g.n();
    let mut core = vec![0u32; n];
    for k in 1..n as u32 {
        let mut alive = vec![true; n];
        loop {
            let doomed: Vec<usize> = (0..n)
                .filter(|&v| alive[v])
                .filter(|&v| ((0..n).filter(|&u| alive[u] && a[v][u]).count() as u32) < k)
                .collect();
            if doomed.is_empty() {
                break;
            }
            doomed.into_iter().for_each(|v| alive[v] = false);
        }
        for v in (0..n).filter(|&v| alive[v]) {
            core[v] = k;
        }
    }
    core
}

pub fn brute_triangles(g: &Graph) -> u64 {
    let a = adjacency_matrix(g);
    let n = g.n();
    let mut t = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                t += (a[i][j] && a[j][k] && a[i][k]) as u64;
            }
        }
    }
    t
}

/// Chi-square goodness of fit of `draws` symmetric geometric samples against
/// the pmf `(1 − e^{−b})/(1 + e^{−b}) · e^{−|i|b}`. Cells with expected count
/// below 5 are pooled into the two tails. Returns the p-value.
pub fn geom_chi_square(b: f64, draws: usize, seed: u64) -> f64 {
    let param = GeomParam::new(b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = 0i64;
    while draws as f64 * param.pmf(k + 1) >= 5.0 {
        k += 1;
    }
    // cells: (-inf, -k-1], -k..=k, [k+1, inf)
    let mut observed = vec![0u64; 2 * k as usize + 3];
    for _ in 0..draws {
        let x = sample_geom(&mut rng, param).clamp(-k - 1, k + 1);
        observed[(x + k + 1) as usize] += 1;
    }
    let inner: Vec<f64> = (-k..=k).map(|i| param.pmf(i)).collect();
    let tail = (1.0 - inner.iter().sum::<f64>()) / 2.0;
    let expected: Vec<f64> = std::iter::once(tail)
        .chain(inner)
        .chain(std::iter::once(tail))
        .map(|p| p * draws as f64)
        .collect();
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}
