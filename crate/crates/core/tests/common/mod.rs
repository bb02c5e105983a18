#![allow(dead_code)]

use efr_core::{int, Allocation, Instance, Rational};
use proptest::prelude::*;

pub fn instance(rows: &[Vec<i64>]) -> Instance {
    Instance::from_integers(rows).unwrap()
}

/// `n×m` integer matrices with entries in `[-r, r]`.
pub fn matrix(n: std::ops::RangeInclusive<usize>, m: std::ops::RangeInclusive<usize>, r: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (n, m).prop_flat_map(move |(n, m)| proptest::collection::vec(proptest::collection::vec(-r..=r, m), n))
}

pub fn goods_matrix(n: std::ops::RangeInclusive<usize>, m: std::ops::RangeInclusive<usize>, r: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (n, m).prop_flat_map(move |(n, m)| proptest::collection::vec(proptest::collection::vec(0..=r, m), n))
}

/// A matrix paired with an arbitrary owner vector.
pub fn with_owners(rows: Vec<Vec<i64>>) -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<usize>)> {
    let n = rows.len();
    let m = rows[0].len();
    (Just(rows), proptest::collection::vec(0..n, m))
}

pub fn value_of(rows: &[Vec<i64>], agent: usize, owners: &[usize], holder: usize) -> i64 {
    owners.iter().enumerate().filter(|&(_, &o)| o == holder).map(|(t, _)| rows[agent][t]).sum()
}

/// Direct EF1 check: for every envious pair, removing some single item from
/// either bundle removes the envy.
pub fn ef1_bruteforce(rows: &[Vec<i64>], owners: &[usize]) -> bool {
    let n = rows.len();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mine = value_of(rows, i, owners, i);
            let theirs = value_of(rows, i, owners, j);
            if mine >= theirs {
                continue;
            }
            let fixed = owners.iter().enumerate().any(|(t, &o)| {
                (o == i && mine - rows[i][t] >= theirs) || (o == j && mine >= theirs - rows[i][t])
            });
            if !fixed {
                return false;
            }
        }
    }
    true
}

/// Every owner vector over `n` agents and `m` items.
pub fn all_owner_vectors(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out.into_iter().flat_map(|v| (0..n).map(move |a| [v.clone(), vec![a]].concat())).collect();
    }
    out
}

/// Direct Pareto check over all owner vectors.
pub fn pareto_bruteforce(rows: &[Vec<i64>], owners: &[usize]) -> bool {
    let n = rows.len();
    let base: Vec<i64> = (0..n).map(|i| value_of(rows, i, owners, i)).collect();
    !all_owner_vectors(n, owners.len()).into_iter().any(|o| {
        let vals: Vec<i64> = (0..n).map(|i| value_of(rows, i, &o, i)).collect();
        vals.iter().zip(&base).all(|(a, b)| a >= b) && vals.iter().zip(&base).any(|(a, b)| a > b)
    })
}

pub fn alloc(n: usize, owners: &[usize]) -> Allocation {
    Allocation::from_owners(n, owners.to_vec()).unwrap()
}

/// Weight vectors from small non-negative integers, normalized.
pub fn weights(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    proptest::collection::vec(0i64..=6, n).prop_map(|mut raw| {
        if raw.iter().all(|&x| x == 0) {
            raw[0] = 1;
        }
        let total: i64 = raw.iter().sum();
        raw.into_iter().map(|x| int(x) / int(total)).collect()
    })
}
