// SPDX-License-Identifier: Apache-2.0

use ledp_core::fixtures;
use ledp_core::graph::{exact_core_numbers, exact_triangle_count, Graph};
use ledp_core::kcore::{kcore_coordinator, KcoreConfig};
use ledp_core::triangle::{triangle_coordinator, TriangleConfig, TriangleRun};
use proptest::prelude::*;

fn workers_for(g: &Graph, w: usize) -> usize {
    w.clamp(1, g.n())
}

fn estimate(g: &Graph, cfg: &TriangleConfig) -> TriangleRun {
    triangle_coordinator(g, cfg).unwrap().run
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn noiseless_pipeline_counts_each_triangle_once(seed in any::<u64>(), w in 1usize..5) {
        let g = fixtures::random_small(40, seed);
        let cfg = TriangleConfig { workers: workers_for(&g, w), ..TriangleConfig::noiseless() };
        prop_assert_eq!(estimate(&g, &cfg).estimate, exact_triangle_count(&g) as f64);
    }

    #[test]
    fn streaming_rows_match_stored_rows(seed in any::<u64>(), eps in 0.2f64..3.0) {
        let g = fixtures::random_small(50, seed);
        let cfg = TriangleConfig { eps, seed, workers: workers_for(&g, 3), ..TriangleConfig::default() };
        let stored = estimate(&g, &cfg);
        let streamed = estimate(&g, &TriangleConfig { streaming: true, ..cfg });
        prop_assert_eq!(stored.estimate.to_bits(), streamed.estimate.to_bits());
        prop_assert_eq!(stored.dmax, streamed.dmax);
    }

    #[test]
    fn pair_budget_holds(seed in any::<u64>(),
                         eps in prop::sample::select(vec![0.25, 0.5, 1.0]),
                         fraction in prop::sample::select(vec![0.2, 0.5, 0.8])) {
        let g = fixtures::random_small(40, seed);
        let cfg = TriangleConfig { eps, fraction, seed, workers: workers_for(&g, 3), ..TriangleConfig::default() };
        let out = triangle_coordinator(&g, &cfg).unwrap();
        prop_assert!(out.report.max_pair_charge <= eps * (1.0 + 1e-12), "{}", out.report.max_pair_charge);
    }

    #[test]
    fn noiseless_orientation_has_low_out_degree(seed in any::<u64>()) {
        let g = fixtures::random_small(200, seed);
        let run = kcore_coordinator(&g, &KcoreConfig::noiseless()).unwrap().run;
        let d = exact_core_numbers(&g).degeneracy() as f64;
        let out = run.ordering.out_degrees(&g).into_iter().max().unwrap() as f64;
        prop_assert!(out <= 5.625 * d + 1.0, "out-degree {out}, degeneracy {d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    #[test]
    fn estimate_does_not_depend_on_worker_count(seed in any::<u64>()) {
        let g = fixtures::chung_lu(200, 10.0, 50.0, 2.5, seed);
        prop_assume!(g.n() >= 80);
        let run = |workers| estimate(&g, &TriangleConfig { seed, workers, ..TriangleConfig::default() });
        let one = run(1);
        for m in [4, 80] {
            let other = run(m);
            prop_assert_eq!(other.estimate.to_bits(), one.estimate.to_bits());
            prop_assert_eq!(other.dmax, one.dmax);
        }
    }
}

#[test]
fn unbiased_on_a_random_graph() {
    let g = fixtures::gnp(24, 0.35, 11);
    let truth = exact_triangle_count(&g) as f64;
    let xs: Vec<f64> = (0..10_000)
        .map(|s| estimate(&g, &TriangleConfig { seed: s, workers: 2, ..TriangleConfig::default() }).estimate)
        .collect();
    let (mean, var) = mean_var(&xs);
    let se = (var / xs.len() as f64).sqrt();
    assert!((mean - truth).abs() <= 3.0 * se, "mean {mean} vs {truth} (se {se})");
}

#[test]
fn variance_shrinks_as_budget_grows() {
    let g = fixtures::complete(6);
    let vars: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
        .into_iter()
        .map(|eps| {
            let xs: Vec<f64> = (0..600)
                .map(|s| estimate(&g, &TriangleConfig { eps, seed: s, ..TriangleConfig::default() }).estimate)
                .collect();
            mean_var(&xs).1
        })
        .collect();
    assert!(vars.iter().all(|v| v.is_finite()));
    assert!(vars.windows(2).all(|w| w[0] > w[1]), "{vars:?}");
}
