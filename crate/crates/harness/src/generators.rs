//! Instance families used for regression and tightness checks.

use efr_core::{int, Allocation, Instance, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::HarnessError;

/// `n` agents and `n - 1` chores, each valued `-1` by everyone.
pub fn gen_identical_chores(n: usize) -> Result<Instance, HarnessError> {
    if n < 2 {
        return Err(HarnessError::Parameter(format!("identical chores need n >= 2, got {n}")));
    }
    Ok(Instance::from_rows(vec![vec![int(-1); n - 1]; n])?)
}

/// `n/2` goods; agents `2k` and `2k+1` value good `k` at 1, everyone else at 0.
pub fn gen_paired_goods(n: usize) -> Result<Instance, HarnessError> {
    if n < 2 || n % 2 == 1 {
        return Err(HarnessError::Parameter(format!("paired goods need an even n >= 2, got {n}")));
    }
    let rows = (0..n)
        .map(|i| (0..n / 2).map(|k| if i / 2 == k { int(1) } else { int(0) }).collect())
        .collect();
    Ok(Instance::from_rows(rows)?)
}

/// Reduction from Partition. For `S = (s_1..s_k)` with `Σ S = 2T`: `k + 3`
/// agents with identical values over `2k + 1` chores, `-s_i` for the first `k`
/// and `-T` for the rest. Agent 0 holds the first `k` chores, agent 1 holds
/// nothing and each remaining agent holds one `-T` chore. The returned
/// allocation is EFR-k exactly when `S` splits into two halves.
pub fn gen_partition_reduction(set: &[u64]) -> Result<(Instance, Allocation, usize), HarnessError> {
    let k = set.len();
    if k == 0 || set.contains(&0) {
        return Err(HarnessError::Parameter("partition input must be non-empty positive integers".into()));
    }
    let total: u64 = set.iter().sum();
    if total % 2 == 1 {
        return Err(HarnessError::Parameter(format!("partition input must have an even sum, got {total}")));
    }
    let half = Rational::from_integer((total / 2).into());
    let row: Vec<Rational> = set
        .iter()
        .map(|&s| -Rational::from_integer(s.into()))
        .chain(std::iter::repeat_n(-half, k + 1))
        .collect();
    let inst = Instance::from_rows(vec![row; k + 3])?;
    let owners = (0..2 * k + 1).map(|t| if t < k { 0 } else { t - k + 2 }).collect();
    let alloc = Allocation::from_owners(k + 3, owners)?;
    Ok((inst, alloc, k))
}

/// Seeded random integers: each magnitude uniform in `1..=value_range`,
/// negated with probability `chore_prob`.
pub fn gen_random(n: usize, m: usize, value_range: u32, chore_prob: f64, seed: u64) -> Result<Instance, HarnessError> {
    if n == 0 || value_range == 0 {
        return Err(HarnessError::Parameter("random instances need n >= 1 and a positive value range".into()));
    }
    if !(0.0..=1.0).contains(&chore_prob) {
        return Err(HarnessError::Parameter(format!("chore probability {chore_prob} is outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let v = i64::from(rng.random_range(1..=value_range));
                    if rng.random_bool(chore_prob) {
                        int(-v)
                    } else {
                        int(v)
                    }
                })
                .collect()
        })
        .collect();
    Ok(Instance::from_rows(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use efr_core::oracles::{decide_efr_k, min_efr_k, solve_partition};
    use efr_core::Budget;

    #[test]
    fn identical_chores_shape() {
        let inst = gen_identical_chores(4).unwrap();
        assert_eq!((inst.num_agents(), inst.num_items()), (4, 3));
        assert!(inst.rows().iter().flatten().all(|v| *v == int(-1)));
        assert_eq!(gen_identical_chores(2).unwrap().num_items(), 1);
        assert!(gen_identical_chores(1).is_err());
    }

    #[test]
    fn identical_chores_three_agents_need_two() {
        let inst = gen_identical_chores(3).unwrap();
        for a in Allocation::enumerate(3, 2) {
            assert_eq!(min_efr_k(&inst, &a, Budget::default()).unwrap().0, 2);
        }
    }

    #[test]
    fn paired_goods_shape() {
        let inst = gen_paired_goods(4).unwrap();
        let expect = Instance::from_integers(&[[1, 0], [1, 0], [0, 1], [0, 1]]).unwrap();
        assert_eq!(inst, expect);
        assert_eq!(gen_paired_goods(2).unwrap(), Instance::from_integers(&[[1], [1]]).unwrap());
        assert!(gen_paired_goods(3).is_err());
        for a in Allocation::enumerate(4, 2) {
            assert_eq!(min_efr_k(&inst, &a, Budget::default()).unwrap().0, 2);
        }
    }

    #[test]
    fn partition_reduction_examples() {
        let (inst, alloc, k) = gen_partition_reduction(&[1, 1]).unwrap();
        assert_eq!((inst.num_agents(), inst.num_items(), k), (5, 5, 2));
        assert!(inst.rows().iter().flatten().all(|v| *v == int(-1)));
        assert_eq!(alloc.owners(), &[0, 0, 2, 3, 4]);
        assert!(decide_efr_k(&inst, &alloc, k, Budget::default()).unwrap().verdict);

        let (inst, alloc, k) = gen_partition_reduction(&[1, 3]).unwrap();
        assert!(solve_partition(&[1, 3]).is_none());
        assert!(!decide_efr_k(&inst, &alloc, k, Budget::default()).unwrap().verdict);

        let (inst, alloc, k) = gen_partition_reduction(&[2, 2, 1, 3]).unwrap();
        assert!(decide_efr_k(&inst, &alloc, k, Budget::default()).unwrap().verdict);
        assert!(gen_partition_reduction(&[1, 2]).is_err());
    }

    #[test]
    fn random_extremes_and_determinism() {
        let goods = gen_random(3, 5, 9, 0.0, 7).unwrap();
        assert!(goods.rows().iter().flatten().all(|v| *v >= int(1) && *v <= int(9)));
        let chores = gen_random(3, 5, 9, 1.0, 7).unwrap();
        assert!(chores.rows().iter().flatten().all(|v| *v <= int(-1) && *v >= int(-9)));
        assert_eq!(gen_random(4, 6, 9, 0.5, 42).unwrap(), gen_random(4, 6, 9, 0.5, 42).unwrap());
        assert_ne!(gen_random(4, 6, 9, 0.5, 42).unwrap(), gen_random(4, 6, 9, 0.5, 43).unwrap());
        assert!(gen_random(2, 2, 9, 1.5, 0).is_err());
    }
}
