mod common;

use bpdyn_core::dynamics::least_squares_start;
use bpdyn_core::linalg::least_squares_solution;
use bpdyn_core::model::{build_graph_instance, random_graph, random_instance, random_integer_instance};
use bpdyn_core::oracle::{bfs_shortest_path, solve_l1_exact, solve_l1_exact_with_budget};
use bpdyn_core::Error;
use common::{l1, residual};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_beats_feasible_probes(seed in any::<u64>(), m in 1usize..=4, extra in 2usize..=5) {
        let n = m + extra;
        let Ok((inst, _)) = random_instance(m, n, 1, seed) else { return Ok(()); };
        let opt = solve_l1_exact(&inst).unwrap();
        prop_assert!(residual(inst.a(), &opt.optimizer, inst.b()) <= 1e-8);
        prop_assert!((l1(&opt.optimizer) - opt.optimal_value).abs() <= 1e-12);
        let y0 = least_squares_start(&inst).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
        for _ in 0..200 {
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let p = least_squares_solution(inst.a(), &inst.a().mul_vec(&d)).unwrap();
            let x: Vec<f64> = (0..n).map(|i| y0[i] + d[i] - p[i]).collect();
            prop_assert!(l1(&x) >= opt.optimal_value - 1e-9);
        }
    }

    #[test]
    fn oracle_matches_bfs_on_graphs(v in 3usize..=8, extra in 0usize..=6, seed in any::<u64>()) {
        let g = random_graph(v, extra, seed).unwrap();
        let inst = build_graph_instance(&g).unwrap();
        let sp = bfs_shortest_path(&g).unwrap();
        let opt = solve_l1_exact(&inst).unwrap();
        prop_assert_eq!(opt.optimal_value.round() as usize, sp.length);
        prop_assert!((opt.optimal_value - sp.length as f64).abs() <= 1e-9);
        if sp.count == 1 {
            prop_assert!(opt.unique);
        }
    }
}

#[test]
fn planted_one_sparse_signal_is_recovered() {
    let (inst, planted) = random_instance(4, 8, 1, 3).unwrap();
    let opt = solve_l1_exact(&inst).unwrap();
    assert!((opt.optimal_value - l1(&planted)).abs() <= 1e-9);
    for (x, p) in opt.optimizer.iter().zip(&planted) {
        assert!((x - p).abs() <= 1e-9);
    }
}

#[test]
fn integer_instances_have_integral_structure() {
    let (inst, planted) = random_integer_instance(3, 7, 1, 2, 4).unwrap();
    let opt = solve_l1_exact(&inst).unwrap();
    assert!(opt.optimal_value <= l1(&planted) + 1e-9);
}

#[test]
fn budget_is_explicit() {
    // C(30, 10) bases is far beyond the default budget.
    let (inst, _) = random_instance(10, 30, 3, 7).unwrap();
    assert!(matches!(solve_l1_exact(&inst), Err(Error::TooLargeForOracle { .. })));
}

#[test]
#[ignore = "enumerates C(30,10) ≈ 3·10⁷ bases; takes minutes"]
fn medium_instance_with_raised_budget() {
    let (inst, planted) = random_instance(10, 30, 3, 7).unwrap();
    let opt = solve_l1_exact_with_budget(&inst, 40_000_000).unwrap();
    assert!(opt.optimal_value <= l1(&planted) + 1e-9);
}

#[test]
fn smaller_instance_with_raised_budget() {
    let (inst, planted) = random_instance(6, 14, 2, 7).unwrap();
    let opt = solve_l1_exact_with_budget(&inst, 10_000).unwrap();
    assert!(opt.optimal_value <= l1(&planted) + 1e-9);
}
