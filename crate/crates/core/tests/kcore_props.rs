// SPDX-License-Identifier: Apache-2.0

use ledp_core::baselines::kcore_baseline;
use ledp_core::fixtures;
use ledp_core::graph::{exact_core_numbers, Graph};
use ledp_core::kcore::{kcore_coordinator, max_factor, KcoreConfig, KcoreRun, LevelBias};
use proptest::prelude::*;

fn traced(cfg: KcoreConfig) -> KcoreConfig {
    KcoreConfig { trace: true, ..cfg }
}

fn noiseless(workers: usize) -> KcoreConfig {
    traced(KcoreConfig {
        workers,
        ..KcoreConfig::noiseless()
    })
}

fn workers_for(g: &Graph, w: usize) -> usize {
    w.clamp(1, g.n())
}

fn neighbors_at(g: &Graph, levels: &[u32], v: u32, pred: impl Fn(u32) -> bool) -> usize {
    g.neighbors(v).iter().filter(|&&u| pred(levels[u as usize])).count()
}

/// Checks the frontier rule on a level trace: each round moves only nodes
/// sitting at the round's level, by exactly one.
fn check_trace(run: &KcoreRun) -> Result<(), String> {
    let trace = run.trace.as_ref().ok_or("no trace")?;
    if trace.len() != run.num_rounds as usize + 1 || trace[0].iter().any(|&l| l != 0) {
        return Err("trace shape".into());
    }
    for (r, pair) in trace.windows(2).enumerate() {
        for (v, (&a, &b)) in pair[0].iter().zip(&pair[1]).enumerate() {
            if b != a && (b != a + 1 || a != r as u32) {
                return Err(format!("node {v} went {a} -> {b} in round {r}"));
            }
        }
    }
    if trace.last().unwrap() != &run.levels {
        return Err("trace does not end at the final levels".into());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn levels_climb_one_frontier_step_at_a_time(seed in any::<u64>(), w in 1usize..6, eps in 0.2f64..2.0) {
        let g = fixtures::random_small(60, seed);
        let cfg = traced(KcoreConfig { eps, seed, workers: workers_for(&g, w), ..KcoreConfig::default() });
        let out = kcore_coordinator(&g, &cfg).unwrap();
        prop_assert!(check_trace(&out.run).is_ok(), "{:?}", check_trace(&out.run));
        for (l, t) in out.run.levels.iter().zip(&out.run.thresholds) {
            prop_assert!(l <= t, "level {l} above threshold {t}");
            prop_assert!(*l <= out.run.num_rounds);
        }
    }

    #[test]
    fn rounds_stay_within_the_bound(seed in any::<u64>(), eps in 0.2f64..2.0) {
        let g = fixtures::random_small(120, seed);
        let cfg = KcoreConfig { eps, seed, workers: workers_for(&g, 3), ..KcoreConfig::default() };
        let out = kcore_coordinator(&g, &cfg).unwrap();
        let p = &out.run.params;
        let log2_dmax = (out.run.max_threshold / p.levels_per_group) as u64;
        let bound = 4 * p.log_n as u64 * log2_dmax;
        prop_assert!(out.run.num_rounds as u64 <= out.run.max_threshold as u64);
        prop_assert!(out.run.num_rounds as u64 <= out.run.round_cap);
        prop_assert!(out.stats.rounds <= bound.max(1), "{} rounds vs bound {bound}", out.stats.rounds);
    }

    #[test]
    fn upper_and_lower_degree_surrogates(seed in any::<u64>()) {
        let g = fixtures::random_small(200, seed);
        let out = kcore_coordinator(&g, &noiseless(workers_for(&g, 4))).unwrap();
        let run = &out.run;
        let p = &run.params;
        // upper: nodes stopped by a failed comparison have few neighbors at or above them
        for v in 0..g.n() as u32 {
            let r = run.levels[v as usize];
            if r < run.thresholds[v as usize].min(run.num_rounds) {
                let above = neighbors_at(&g, &run.levels, v, |l| l >= r);
                prop_assert!(above as f64 <= p.group_cut(p.group_index(r)), "node {v} at {r}: {above}");
            }
        }
        // lower: every promotion beat the group cut
        let trace = run.trace.as_ref().unwrap();
        for (r, pair) in trace.windows(2).enumerate() {
            let r = r as u32;
            for v in 0..g.n() as u32 {
                if pair[1][v as usize] > pair[0][v as usize] {
                    let same = neighbors_at(&g, &pair[0], v, |l| l == r);
                    prop_assert!(same as f64 > p.group_cut(p.group_index(r)));
                }
            }
        }
    }

    #[test]
    fn noiseless_factor_is_at_most_two_plus_eta(seed in any::<u64>()) {
        let g = fixtures::random_small(200, seed);
        let out = kcore_coordinator(&g, &noiseless(workers_for(&g, 2))).unwrap();
        let f = max_factor(&out.run.estimates, &exact_core_numbers(&g).core);
        prop_assert!(f <= 5.625 * (1.0 + 1e-12), "factor {f}");
    }

    #[test]
    fn ledger_holds_over_budget_matrix(seed in any::<u64>(),
                                       eps in prop::sample::select(vec![0.25, 0.5, 1.0]),
                                       fraction in prop::sample::select(vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]),
                                       bias in prop::sample::select(vec![LevelBias::Literal, LevelBias::Capped])) {
        let g = fixtures::random_small(80, seed);
        let cfg = KcoreConfig { eps, fraction, seed, level_bias: bias, workers: workers_for(&g, 4), ..KcoreConfig::default() };
        let out = kcore_coordinator(&g, &cfg).unwrap();
        prop_assert!(out.report.max_pair_charge <= eps * (1.0 + 1e-12));
        let base = kcore_baseline(&g, &cfg).unwrap();
        prop_assert!(base.report.max_pair_charge <= eps * (1.0 + 1e-12));
    }

    #[test]
    fn communication_is_linear_per_round(seed in any::<u64>()) {
        let g = fixtures::random_small(150, seed);
        let out = kcore_coordinator(&g, &KcoreConfig { seed, workers: workers_for(&g, 5), ..KcoreConfig::default() }).unwrap();
        let s = out.stats;
        prop_assert!(s.bytes >= s.messages);
        // a few bytes per node per round, plus fixed-size worker messages
        prop_assert!(s.bytes <= (8 * g.n() as u64 + 32 * 5) * s.rounds, "{s:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn estimates_do_not_depend_on_worker_count(seed in any::<u64>()) {
        let g = fixtures::chung_lu(300, 8.0, 60.0, 2.5, seed);
        prop_assume!(g.n() >= 80);
        let run = |workers| {
            let cfg = KcoreConfig { seed, workers, ..KcoreConfig::default() };
            kcore_coordinator(&g, &cfg).unwrap().run
        };
        let one = run(1);
        let bits = |r: &KcoreRun| r.estimates.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        for m in [4, 80] {
            let other = run(m);
            prop_assert_eq!(&other.levels, &one.levels);
            prop_assert_eq!(bits(&other), bits(&one));
        }
        prop_assert_eq!(bits(&run(4)), bits(&one));
    }
}

#[test]
fn baseline_matches_kcored_when_thresholds_do_not_bind() {
    let mut compared = 0;
    for seed in 0..400 {
        let g = fixtures::random_small(40, seed);
        let kc = kcore_coordinator(&g, &noiseless(1)).unwrap().run;
        let binds = kc.levels.iter().zip(&kc.thresholds).any(|(l, t)| l >= t) || kc.levels.contains(&kc.num_rounds);
        if binds {
            continue;
        }
        let base = kcore_baseline(&g, &noiseless(1)).unwrap().run;
        assert_eq!(base.levels, kc.levels, "seed {seed}");
        compared += 1;
    }
    assert!(compared >= 5, "only {compared} graphs without binding thresholds");
}

#[test]
fn layered_fixture_noiseless_factor() {
    let g = fixtures::layered_cores();
    for w in [1, 3] {
        let out = kcore_coordinator(&g, &noiseless(w)).unwrap();
        let f = max_factor(&out.run.estimates, &exact_core_numbers(&g).core);
        assert!(f <= 5.625 * (1.0 + 1e-12), "factor {f}");
    }
}
