mod common;

use common::*;
use efr_core::algorithms::{conflict_aware_picking, conflict_aware_picking_extended, double_round_robin_ef1, efr_n_minus_1, resolve_top_trading_cycles};
use efr_core::oracles::{decide_efr_k, is_pareto_optimal_bruteforce, min_efr_k, pareto_improvement};
use efr_core::{build_envy_graph, is_ef1, is_envy_free_for, validate_certificate, Budget};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn envy_graph_matches_direct_sums((rows, owners) in matrix(1..=4, 0..=6, 6).prop_flat_map(with_owners)) {
        let inst = instance(&rows);
        let n = rows.len();
        let g = build_envy_graph(&inst, &alloc(n, &owners)).unwrap();
        for i in 0..n {
            for j in 0..n {
                let envies = i != j && value_of(&rows, i, &owners, j) > value_of(&rows, i, &owners, i);
                prop_assert_eq!(g.has_edge(i, j), envies);
            }
            prop_assert_eq!(is_envy_free_for(&inst, &alloc(n, &owners), i).unwrap(), !(0..n).any(|j| g.has_edge(i, j)));
        }
    }

    #[test]
    fn ef1_matches_single_item_removal((rows, owners) in matrix(1..=4, 0..=6, 6).prop_flat_map(with_owners)) {
        let inst = instance(&rows);
        prop_assert_eq!(is_ef1(&inst, &alloc(rows.len(), &owners)).unwrap(), ef1_bruteforce(&rows, &owners));
    }

    #[test]
    fn envy_freeness_implies_ef1((rows, owners) in matrix(1..=4, 0..=6, 6).prop_flat_map(with_owners)) {
        let inst = instance(&rows);
        let a = alloc(rows.len(), &owners);
        let ef = (0..rows.len()).all(|i| is_envy_free_for(&inst, &a, i).unwrap());
        prop_assert!(!ef || is_ef1(&inst, &a).unwrap());
    }

    #[test]
    fn decisions_are_sound_and_monotone((rows, owners) in matrix(1..=3, 0..=5, 5).prop_flat_map(with_owners)) {
        let inst = instance(&rows);
        let a = alloc(rows.len(), &owners);
        let mut previous = false;
        for k in 0..=owners.len() {
            let d = decide_efr_k(&inst, &a, k, Budget::default()).unwrap();
            prop_assert!(!previous || d.verdict);
            if let Some(cert) = &d.certificate {
                prop_assert!(d.verdict);
                prop_assert!(cert.k() <= k);
                prop_assert_eq!(&cert.base, &a);
                prop_assert!(validate_certificate(&inst, cert).unwrap());
            } else {
                prop_assert!(!d.verdict);
            }
            previous = d.verdict;
        }
        // Reassigning every item always works.
        prop_assert!(previous);
        let (k, cert) = min_efr_k(&inst, &a, Budget::default()).unwrap();
        prop_assert_eq!(cert.k(), k);
        prop_assert!(k == 0 || !decide_efr_k(&inst, &a, k - 1, Budget::default()).unwrap().verdict);
    }

    #[test]
    fn pareto_oracle_matches_direct_scan((rows, owners) in matrix(1..=3, 0..=4, 4).prop_flat_map(with_owners)) {
        let inst = instance(&rows);
        let a = alloc(rows.len(), &owners);
        let po = is_pareto_optimal_bruteforce(&inst, &a, Budget::default()).unwrap();
        prop_assert_eq!(po, pareto_bruteforce(&rows, &owners));
        if let Some(better) = pareto_improvement(&inst, &a, Budget::default()).unwrap() {
            let o = better.owners();
            for i in 0..rows.len() {
                prop_assert!(value_of(&rows, i, o, i) >= value_of(&rows, i, &owners, i));
            }
        }
    }

    #[test]
    fn pareto_optimal_envy_graphs_are_acyclic_with_a_sink((rows, owners) in matrix(1..=3, 0..=4, 4).prop_flat_map(with_owners)) {
        let inst = instance(&rows);
        let a = alloc(rows.len(), &owners);
        if pareto_bruteforce(&rows, &owners) {
            let g = build_envy_graph(&inst, &a).unwrap();
            prop_assert!(g.is_acyclic());
            prop_assert!(!g.sinks().is_empty());
        }
    }

    #[test]
    fn double_round_robin_is_ef1(rows in matrix(1..=5, 0..=9, 9)) {
        let inst = instance(&rows);
        let a = double_round_robin_ef1(&inst);
        prop_assert!(ef1_bruteforce(&rows, a.owners()));
    }

    #[test]
    fn top_trading_resolution_keeps_ef1_and_leaves_a_sink(rows in matrix(1..=5, 0..=9, 9)) {
        let inst = instance(&rows);
        let a = resolve_top_trading_cycles(&inst, &double_round_robin_ef1(&inst)).unwrap();
        prop_assert!(ef1_bruteforce(&rows, a.owners()));
        prop_assert!(!build_envy_graph(&inst, &a).unwrap().sinks().is_empty());
    }

    #[test]
    fn efr_n_minus_1_certificates_are_valid(rows in matrix(1..=5, 0..=9, 9)) {
        let inst = instance(&rows);
        let cert = efr_n_minus_1(&inst).unwrap();
        prop_assert!(cert.k() < rows.len().max(1));
        prop_assert!(validate_certificate(&inst, &cert).unwrap());
        prop_assert!(ef1_bruteforce(&rows, cert.base.owners()));
    }

    #[test]
    fn picking_certificates_are_valid(rows in goods_matrix(1..=6, 0..=10, 9)) {
        let inst = instance(&rows);
        let out = conflict_aware_picking(&inst).unwrap();
        prop_assert!(out.certificate.k() <= rows.len() / 2);
        prop_assert!(validate_certificate(&inst, &out.certificate).unwrap());
        prop_assert!(out.checks.iter().all(|c| c.holds()));
        let ext = conflict_aware_picking_extended(&inst).unwrap();
        prop_assert!(ext.k() <= rows.len() / 2);
        prop_assert!(validate_certificate(&inst, &ext).unwrap());
    }
}

#[test]
fn identical_chores_are_tight() {
    for n in 2..=4usize {
        let rows = vec![vec![-1; n - 1]; n];
        let inst = instance(&rows);
        for owners in all_owner_vectors(n, n - 1) {
            let a = alloc(n, &owners);
            assert!(!decide_efr_k(&inst, &a, n - 2, Budget::default()).unwrap().verdict);
            assert!(decide_efr_k(&inst, &a, n - 1, Budget::default()).unwrap().verdict);
        }
    }
}

#[test]
fn paired_goods_are_tight() {
    let rows = vec![vec![1, 0], vec![1, 0], vec![0, 1], vec![0, 1]];
    let inst = instance(&rows);
    for owners in all_owner_vectors(4, 2) {
        let (k, _) = min_efr_k(&inst, &alloc(4, &owners), Budget::default()).unwrap();
        assert_eq!(k, 2);
    }
}
