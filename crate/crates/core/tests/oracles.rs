// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{brute_cores, brute_triangles};
use ledp_core::fixtures;
use ledp_core::graph::{exact_core_numbers, exact_triangle_count, Graph, Partition};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Peeling that removes a uniformly random minimum-degree node each step.
fn shuffled_peel(g: &Graph, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v as u32)).collect();
    let mut alive = vec![true; n];
    let mut core = vec![0u32; n];
    let mut k = 0;
    for _ in 0..n {
        let min = (0..n).filter(|&v| alive[v]).map(|v| degree[v]).min().unwrap();
        let ties: Vec<usize> = (0..n).filter(|&v| alive[v] && degree[v] == min).collect();
        let v = *ties.choose(&mut rng).unwrap();
        k = k.max(min as u32);
        core[v] = k;
        alive[v] = false;
        for &u in g.neighbors(v as u32) {
            degree[u as usize] -= 1;
        }
    }
    core
}

#[test]
fn fixture_core_numbers() {
    assert_eq!(exact_core_numbers(&fixtures::complete(6)).core, vec![5; 6]);
    assert_eq!(exact_core_numbers(&fixtures::cycle(7)).core, vec![2; 7]);
    assert_eq!(exact_core_numbers(&fixtures::petersen()).core, vec![3; 10]);
    let star = exact_core_numbers(&fixtures::star(5));
    assert!(star.core.iter().all(|&c| c == 1));
    assert_eq!(exact_triangle_count(&fixtures::complete(6)), 20);
    assert_eq!(exact_triangle_count(&fixtures::petersen()), 0);
}

#[test]
fn layered_fixture_has_distinct_cores() {
    let g = fixtures::layered_cores();
    let cores = exact_core_numbers(&g);
    assert_eq!(cores.core, brute_cores(&g));
    let mut distinct = cores.core.clone();
    distinct.sort_unstable();
    distinct.dedup();
    assert!(distinct.len() >= 3, "{distinct:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_oracles_match_brute_force(seed in any::<u64>()) {
        let g = fixtures::random_small(12, seed);
        prop_assert_eq!(exact_core_numbers(&g).core, brute_cores(&g));
        prop_assert_eq!(exact_triangle_count(&g), brute_triangles(&g));
    }

    #[test]
    fn peeling_ties_do_not_matter(seed in any::<u64>(), tie_seed in any::<u64>()) {
        let g = fixtures::random_small(30, seed);
        prop_assert_eq!(shuffled_peel(&g, tie_seed), exact_core_numbers(&g).core);
    }

    #[test]
    fn core_structure_holds(seed in any::<u64>()) {
        let g = fixtures::random_small(40, seed);
        let core = exact_core_numbers(&g);
        let kmax = core.core.iter().copied().max().unwrap();
        prop_assert_eq!(core.degeneracy(), kmax);
        for k in 1..=kmax {
            // the k-core has minimum degree at least k
            for v in (0..g.n() as u32).filter(|&v| core.core[v as usize] >= k) {
                let inside = g.neighbors(v).iter().filter(|&&u| core.core[u as usize] >= k).count();
                prop_assert!(inside as u32 >= k);
            }
        }
    }

    #[test]
    fn edge_list_round_trip(seed in any::<u64>()) {
        let g = fixtures::random_small(50, seed);
        let mut text = Vec::new();
        g.write_edge_list(&mut text).unwrap();
        let again = Graph::read_edge_list(text.as_slice()).unwrap();
        prop_assert_eq!(&again, &g);
        let mut bin = Vec::new();
        g.write_cache(&mut bin).unwrap();
        prop_assert_eq!(Graph::read_cache(bin.as_slice()).unwrap(), g);
    }

    #[test]
    fn graph_invariants(seed in any::<u64>()) {
        let g = fixtures::random_small(60, seed);
        prop_assert!(g.validate().is_ok());
        for v in 0..g.n() as u32 {
            prop_assert!(g.degree(v) > 0);
            prop_assert!(g.neighbors(v).windows(2).all(|w| w[0] < w[1]));
            prop_assert!(g.neighbors(v).iter().all(|&u| u != v && g.has_edge(u, v)));
        }
    }

    #[test]
    fn partitions_cover_nodes(n in 1usize..500, workers in 1usize..100) {
        prop_assume!(workers <= n);
        let p = Partition::new(n, workers).unwrap();
        let mut next = 0;
        for w in 0..workers {
            let r = p.range(w);
            prop_assert_eq!(r.start, next);
            prop_assert!(r.end > r.start);
            for v in r.clone() {
                prop_assert_eq!(p.owner(v), w);
            }
            next = r.end;
        }
        prop_assert_eq!(next as usize, n);
    }
}
