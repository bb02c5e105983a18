mod common;

use common::*;
use efr_core::oracles::is_pareto_optimal_bruteforce;
use efr_core::welfare::{
    check_nondegenerate, compute_params, demand_sets, max_weighted_welfare, perturb_nondegenerate, po_certificate_lp,
    shifted_welfare, LpPartition,
};
use efr_core::{int, is_envy_free_for, ratio, Allocation, Budget, PerturbedInstance, Rational, WeightVector};
use proptest::prelude::*;

fn perturb(rows: &[Vec<i64>]) -> PerturbedInstance {
    let inst = instance(rows);
    let params = compute_params(&inst).unwrap();
    perturb_nondegenerate(&inst, &params, Budget::default()).unwrap()
}

fn shifted_total(pert: &PerturbedInstance, w: &[Rational], owners: &[usize]) -> Rational {
    owners
        .iter()
        .enumerate()
        .fold(int(0), |acc, (t, &o)| acc + (&w[o] + &pert.params().eta) * pert.value(o, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perturbation_is_nondegenerate_and_small(rows in matrix(1..=3, 1..=5, 9)) {
        let pert = perturb(&rows);
        prop_assert!(pert.params().satisfies_bounds(rows.len(), rows[0].len()));
        prop_assert!(check_nondegenerate(pert.values(), Budget::default()).unwrap());
        for (i, row) in pert.eps().iter().enumerate() {
            for (t, e) in row.iter().enumerate() {
                prop_assert!(*e > int(0) && *e < pert.params().epsilon);
                prop_assert_eq!(pert.value(i, t), &(int(rows[i][t]) - e));
            }
        }
    }

    #[test]
    fn welfare_maximizer_beats_every_allocation((rows, w) in matrix(1..=3, 0..=4, 9).prop_flat_map(|r| { let n = r.len(); (Just(r), weights(n)) })) {
        let pert = perturb(&rows);
        let wv = WeightVector::new(w.clone()).unwrap();
        let best = max_weighted_welfare(&pert, &wv).unwrap();
        let value = shifted_welfare(&pert, &wv, &best).unwrap();
        prop_assert_eq!(&value, &shifted_total(&pert, &w, best.owners()));
        let scan = all_owner_vectors(rows.len(), rows[0].len())
            .iter()
            .map(|o| shifted_total(&pert, &w, o))
            .max()
            .unwrap();
        prop_assert_eq!(value, scan);
    }

    #[test]
    fn welfare_maximizers_are_pareto_optimal((rows, w) in matrix(1..=3, 0..=5, 9).prop_flat_map(|r| { let n = r.len(); (Just(r), weights(n)) })) {
        let pert = perturb(&rows);
        let a = max_weighted_welfare(&pert, &WeightVector::new(w).unwrap()).unwrap();
        prop_assert!(pareto_bruteforce(&rows, a.owners()));
    }

    #[test]
    fn tie_graphs_are_forests((rows, w) in matrix(1..=3, 0..=6, 9).prop_flat_map(|r| { let n = r.len(); (Just(r), weights(n)) })) {
        let pert = perturb(&rows);
        let p = demand_sets(&pert, &WeightVector::new(w).unwrap()).unwrap();
        prop_assert!(p.graph.is_acyclic());
        prop_assert!(p.ties.len() < rows.len().max(1));
        for &t in &p.ties {
            prop_assert!(p.graph.degree_of_item(t) >= 2);
        }
    }

    #[test]
    fn some_supported_agent_is_envy_free((rows, w) in matrix(1..=3, 0..=6, 9).prop_flat_map(|r| { let n = r.len(); (Just(r), weights(n)) })) {
        let pert = perturb(&rows);
        let wv = WeightVector::new(w).unwrap();
        let a = max_weighted_welfare(&pert, &wv).unwrap();
        let inst = instance(&rows);
        prop_assert!(wv.support().into_iter().any(|i| is_envy_free_for(&inst, &a, i).unwrap()));
    }

    #[test]
    fn strict_preferences_survive_with_half_margin(rows in matrix(1..=3, 0..=6, 9)) {
        let pert = perturb(&rows);
        let m = rows[0].len();
        // 0: in S, 1: in T, 2: neither
        let mut labels = vec![0usize; m];
        loop {
            for i in 0..rows.len() {
                let sum = |side: usize| labels.iter().enumerate().filter(|&(_, &l)| l == side).map(|(t, _)| t).collect::<Vec<_>>();
                let (s, t) = (sum(0), sum(1));
                let orig = |b: &[usize]| b.iter().map(|&x| rows[i][x]).sum::<i64>();
                if orig(&s) > orig(&t) {
                    prop_assert!(pert.bundle_value(i, &s) >= pert.bundle_value(i, &t) + ratio(1, 2));
                }
            }
            let mut d = 0;
            while d < m && labels[d] == 2 {
                labels[d] = 0;
                d += 1;
            }
            if d == m {
                break;
            }
            labels[d] += 1;
        }
    }

    #[test]
    fn welfare_partition_is_lp_feasible((rows, w) in matrix(1..=3, 0..=6, 9).prop_flat_map(|r| { let n = r.len(); (Just(r), weights(n)) })) {
        let pert = perturb(&rows);
        let wv = WeightVector::new(w).unwrap();
        let a = max_weighted_welfare(&pert, &wv).unwrap();
        let p = demand_sets(&pert, &wv).unwrap();
        let interior = (0..rows.len()).map(|i| a.bundle(i).into_iter().filter(|t| !p.ties.contains(t)).collect()).collect();
        let ties = p.ties.iter().map(|&t| (t, p.demand[t].clone())).collect();
        let found = po_certificate_lp(&pert, &LpPartition { interior, ties }).unwrap().expect("w itself is feasible");
        // The returned weights make the same allocation a maximizer.
        let value = shifted_welfare(&pert, &found, &a).unwrap();
        let again = max_weighted_welfare(&pert, &found).unwrap();
        prop_assert_eq!(value, shifted_welfare(&pert, &found, &again).unwrap());
    }
}

#[test]
fn identical_chores_parameters() {
    let inst = instance(&vec![vec![-1, -1, -1]; 4]);
    let p = compute_params(&inst).unwrap();
    assert_eq!(p.big_lambda, int(3));
    assert_eq!(p.eta, ratio(1, 24));
}

#[test]
fn unit_ratio_cycle_is_degenerate() {
    let values = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
    assert!(!check_nondegenerate(&values, Budget::default()).unwrap());
}

#[test]
fn vertex_weight_on_two_agents_matches_scan() {
    // With w = (1, 0), agent 2 only takes items it values by far more, or
    // chores agent 1 dislikes far more.
    let rows = vec![vec![1, -9, 2, -1], vec![3, -1, 9, -1]];
    let pert = perturb(&rows);
    let w = WeightVector::vertex(2, 0);
    let a = max_weighted_welfare(&pert, &w).unwrap();
    let scan = all_owner_vectors(2, 4).into_iter().max_by_key(|o| shifted_total(&pert, w.weights(), o)).unwrap();
    assert_eq!(a.owners(), &scan[..]);
    assert!(is_pareto_optimal_bruteforce(&instance(&rows), &a, Budget::default()).unwrap());
    assert_eq!(a, Allocation::from_owners(2, vec![0, 1, 0, 1]).unwrap());
}

/// Weights supported on `{a, b}` making `a` and `b` tie on item `t`, when
/// they exist: `(x+η)v̄_a = (1-x+η)v̄_b`.
fn tie_forcing(pert: &PerturbedInstance, a: usize, b: usize, t: usize) -> Option<WeightVector> {
    let (va, vb) = (pert.value(a, t), pert.value(b, t));
    let eta = &pert.params().eta;
    let denom = va + vb;
    if denom == int(0) {
        return None;
    }
    let x = (vb * (int(1) + eta) - eta * va) / denom;
    if x < int(0) || x > int(1) {
        return None;
    }
    let mut w = vec![int(0); pert.num_agents()];
    w[b] = int(1) - &x;
    w[a] = x;
    Some(WeightVector::new(w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forced_ties_keep_forest_and_pareto(rows in matrix(2..=3, 1..=5, 9)) {
        let pert = perturb(&rows);
        let n = rows.len();
        for a in 0..n {
            for b in a + 1..n {
                for t in 0..rows[0].len() {
                    let Some(w) = tie_forcing(&pert, a, b, t) else { continue };
                    let p = demand_sets(&pert, &w).unwrap();
                    prop_assert!(p.graph.is_acyclic());
                    prop_assert!(p.ties.len() < n);
                    prop_assert_eq!(p.demand[t].contains(&a), p.demand[t].contains(&b));
                    let alloc = max_weighted_welfare(&pert, &w).unwrap();
                    prop_assert!(pareto_bruteforce(&rows, alloc.owners()));
                    let interior = (0..n).map(|i| alloc.bundle(i).into_iter().filter(|t| !p.ties.contains(t)).collect()).collect();
                    let ties = p.ties.iter().map(|&t| (t, p.demand[t].clone())).collect();
                    let partition = LpPartition { interior, ties };
                    prop_assert!(po_certificate_lp(&pert, &partition).unwrap().is_some());
                }
            }
        }
    }
}
