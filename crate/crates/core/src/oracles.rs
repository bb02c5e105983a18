//! Exhaustive ground truth: EFR-k decision, minimum EFR parameter, Pareto
//! optimality, and a Partition solver.
//!
//! Deciding EFR-k is NP-complete once `k < n - 2`; everything here is
//! exponential and guarded by a [`Budget`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Allocation, EfrCertificate, Instance};
use crate::scalar::{scaled_rows, Scalar};
use crate::{AgentId, Budget, Error, ItemId, Meter, Result};

/// Outcome of [`decide_efr_k`]. The certificate is present iff the verdict
/// is `true`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfrDecision {
    pub verdict: bool,
    pub certificate: Option<EfrCertificate>,
}

/// Decides whether `alloc` is EFR-`k`.
///
/// Candidate sets `R` are tried by increasing size, then lexicographically;
/// for each agent the `n^|R|` placements of `R` are searched in
/// lexicographic order with bound pruning. Each search node costs one unit
/// of `budget`.
pub fn decide_efr_k(inst: &Instance, alloc: &Allocation, k: usize, budget: Budget) -> Result<EfrDecision> {
    alloc.check_against(inst)?;
    if k > inst.num_items() {
        return Err(Error::Precondition("k must not exceed the number of items".into()));
    }
    let found = search_min_realloc(inst, alloc, k, budget)?;
    Ok(match found {
        Some(cert) => EfrDecision { verdict: true, certificate: Some(cert) },
        None => EfrDecision { verdict: false, certificate: None },
    })
}

/// Smallest `k` for which `alloc` is EFR-`k`, with a certificate. `k = m`
/// always succeeds since a witness may then place every item freely.
pub fn min_efr_k(inst: &Instance, alloc: &Allocation, budget: Budget) -> Result<(usize, EfrCertificate)> {
    alloc.check_against(inst)?;
    match search_min_realloc(inst, alloc, inst.num_items(), budget)? {
        Some(cert) => Ok((cert.k(), cert)),
        None => Err(Error::InvariantViolation("R = [m] admits no witness".into())),
    }
}

fn search_min_realloc(
    inst: &Instance,
    alloc: &Allocation,
    max_k: usize,
    budget: Budget,
) -> Result<Option<EfrCertificate>> {
    let mut meter = Meter::new(budget);
    let found = match scaled_rows(inst) {
        Some(rows) => realloc_search(&rows, alloc, max_k, &mut meter)?,
        None => realloc_search(inst.rows(), alloc, max_k, &mut meter)?,
    };
    Ok(found.map(|(set, placements)| {
        let witnesses = placements
            .iter()
            .map(|placement| {
                let mut owners = alloc.owners().to_vec();
                for (&t, &a) in set.iter().zip(placement) {
                    owners[t] = a;
                }
                Allocation::from_owners(alloc.num_agents(), owners).expect("owners in range")
            })
            .collect();
        EfrCertificate { base: alloc.clone(), realloc_set: set.into_iter().collect(), witnesses }
    }))
}

type Placements = Vec<Vec<AgentId>>;

fn realloc_search<T: Scalar>(
    rows: &[Vec<T>],
    alloc: &Allocation,
    max_k: usize,
    meter: &mut Meter,
) -> Result<Option<(Vec<ItemId>, Placements)>> {
    let m = alloc.num_items();
    for size in 0..=max_k.min(m) {
        let mut combo: Vec<ItemId> = (0..size).collect();
        loop {
            if let Some(placements) = witnesses_for_set(rows, alloc, &combo, meter)? {
                return Ok(Some((combo, placements)));
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advances `combo` to the next `|combo|`-subset of `0..m` in lexicographic
/// order. Returns `false` after the last one.
pub(crate) fn next_combination(combo: &mut [usize], m: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < m - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn witnesses_for_set<T: Scalar>(
    rows: &[Vec<T>],
    alloc: &Allocation,
    set: &[ItemId],
    meter: &mut Meter,
) -> Result<Option<Placements>> {
    let mut out = Vec::with_capacity(rows.len());
    for agent in 0..rows.len() {
        match witness_for_agent(rows, alloc, set, agent, meter)? {
            Some(p) => out.push(p),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// First placement (lexicographic) of the items of `set` that leaves
/// `agent` envy-free, or `None`.
pub(crate) fn witness_for_agent<T: Scalar>(
    rows: &[Vec<T>],
    alloc: &Allocation,
    set: &[ItemId],
    agent: AgentId,
    meter: &mut Meter,
) -> Result<Option<Vec<AgentId>>> {
    let options = vec![(0..rows.len()).collect::<Vec<_>>(); set.len()];
    witness_with_options(&rows[agent], alloc, set, &options, agent, meter)
}

/// Same as [`witness_for_agent`] with item `set[d]` restricted to the agents
/// in `options[d]`.
pub(crate) fn witness_with_options<T: Scalar>(
    row: &[T],
    alloc: &Allocation,
    set: &[ItemId],
    options: &[Vec<AgentId>],
    agent: AgentId,
    meter: &mut Meter,
) -> Result<Option<Vec<AgentId>>> {
    let n = alloc.num_agents();
    let mut in_set = vec![false; alloc.num_items()];
    for &t in set {
        in_set[t] = true;
    }
    let mut current = vec![T::zero(); n];
    for (t, &owner) in alloc.owners().iter().enumerate() {
        if !in_set[t] {
            current[owner] += &row[t];
        }
    }
    let values: Vec<T> = set.iter().map(|&t| row[t].clone()).collect();
    let mut pos_suffix = vec![T::zero(); set.len() + 1];
    let mut neg_suffix = vec![T::zero(); set.len() + 1];
    for d in (0..set.len()).rev() {
        pos_suffix[d] = pos_suffix[d + 1].clone();
        neg_suffix[d] = neg_suffix[d + 1].clone();
        if values[d] > T::zero() {
            pos_suffix[d] += &values[d];
        } else {
            neg_suffix[d] += &values[d];
        }
    }
    let mut search = PlacementSearch {
        agent,
        values: &values,
        options,
        pos_suffix: &pos_suffix,
        neg_suffix: &neg_suffix,
        current,
        placement: vec![0; set.len()],
    };
    if search.descend(0, meter)? {
        Ok(Some(search.placement))
    } else {
        Ok(None)
    }
}

struct PlacementSearch<'a, T> {
    agent: AgentId,
    values: &'a [T],
    options: &'a [Vec<AgentId>],
    pos_suffix: &'a [T],
    neg_suffix: &'a [T],
    current: Vec<T>,
    placement: Vec<AgentId>,
}

impl<T: Scalar> PlacementSearch<'_, T> {
    fn descend(&mut self, depth: usize, meter: &mut Meter) -> Result<bool> {
        meter.tick()?;
        let mut best_own = self.current[self.agent].clone();
        best_own += &self.pos_suffix[depth];
        for (j, v) in self.current.iter().enumerate() {
            if j == self.agent {
                continue;
            }
            let mut least = v.clone();
            least += &self.neg_suffix[depth];
            if least > best_own {
                return Ok(false);
            }
        }
        if depth == self.values.len() {
            let own = &self.current[self.agent];
            return Ok(self.current.iter().all(|v| v <= own));
        }
        for &a in &self.options[depth] {
            self.current[a] += &self.values[depth];
            self.placement[depth] = a;
            let hit = self.descend(depth + 1, meter)?;
            self.current[a] -= &self.values[depth];
            if hit {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// No allocation among all `n^m` weakly improves every agent and strictly
/// improves one. Fails with [`Error::BudgetExceeded`] when `n^m` exceeds
/// `budget` up front.
pub fn is_pareto_optimal_bruteforce(inst: &Instance, alloc: &Allocation, budget: Budget) -> Result<bool> {
    Ok(pareto_improvement(inst, alloc, budget)?.is_none())
}

/// The lexicographically first allocation that Pareto dominates `alloc`.
pub fn pareto_improvement(inst: &Instance, alloc: &Allocation, budget: Budget) -> Result<Option<Allocation>> {
    alloc.check_against(inst)?;
    let n = inst.num_agents() as u64;
    let space = (0..inst.num_items()).try_fold(1u64, |acc, _| acc.checked_mul(n));
    match space {
        Some(s) if s <= budget.max_evaluations => {}
        _ => return Err(Error::BudgetExceeded { limit: budget.max_evaluations }),
    }
    let owners = match scaled_rows(inst) {
        Some(rows) => dominating_owners(&rows, alloc),
        None => dominating_owners(inst.rows(), alloc),
    };
    Ok(owners.map(|o| Allocation::from_owners(alloc.num_agents(), o).expect("owners in range")))
}

fn dominating_owners<T: Scalar>(rows: &[Vec<T>], alloc: &Allocation) -> Option<Vec<AgentId>> {
    let n = rows.len();
    let m = alloc.num_items();
    let targets: Vec<T> = (0..n)
        .map(|i| {
            let mut v = T::zero();
            for (t, &o) in alloc.owners().iter().enumerate() {
                if o == i {
                    v += &rows[i][t];
                }
            }
            v
        })
        .collect();
    let pos_suffix: Vec<Vec<T>> = rows
        .iter()
        .map(|row| {
            let mut s = vec![T::zero(); m + 1];
            for d in (0..m).rev() {
                s[d] = s[d + 1].clone();
                if row[d] > T::zero() {
                    s[d] += &row[d];
                }
            }
            s
        })
        .collect();
    let mut search = DominanceSearch {
        rows,
        targets: &targets,
        pos_suffix: &pos_suffix,
        current: vec![T::zero(); n],
        owners: vec![0; m],
    };
    if search.descend(0) {
        Some(search.owners)
    } else {
        None
    }
}

struct DominanceSearch<'a, T> {
    rows: &'a [Vec<T>],
    targets: &'a [T],
    pos_suffix: &'a [Vec<T>],
    current: Vec<T>,
    owners: Vec<AgentId>,
}

impl<T: Scalar> DominanceSearch<'_, T> {
    fn descend(&mut self, depth: usize) -> bool {
        for i in 0..self.rows.len() {
            let mut best = self.current[i].clone();
            best += &self.pos_suffix[i][depth];
            if best < self.targets[i] {
                return false;
            }
        }
        if depth == self.owners.len() {
            return self.current.iter().zip(self.targets).any(|(c, t)| c > t);
        }
        for a in 0..self.rows.len() {
            self.current[a] += &self.rows[a][depth];
            self.owners[depth] = a;
            let hit = self.descend(depth + 1);
            self.current[a] -= &self.rows[a][depth];
            if hit {
                return true;
            }
        }
        false
    }
}

/// Indices of a subset of `values` summing to half the total, or `None`.
/// The returned subset always contains index 0.
pub fn solve_partition(values: &[u64]) -> Option<Vec<usize>> {
    if values.is_empty() {
        return None;
    }
    let total: u64 = values.iter().sum();
    if total % 2 == 1 {
        return None;
    }
    let half = total / 2;
    // reachable sum -> (index of last element used, previous sum)
    let mut parent: BTreeMap<u64, (usize, u64)> = BTreeMap::new();
    let mut reachable: BTreeSet<u64> = BTreeSet::from([0]);
    for (idx, &v) in values.iter().enumerate() {
        let snapshot: Vec<u64> = reachable.iter().copied().filter(|&s| s + v <= half).collect();
        for s in snapshot {
            if reachable.insert(s + v) {
                parent.insert(s + v, (idx, s));
            }
        }
    }
    if !reachable.contains(&half) {
        return None;
    }
    let mut chosen = vec![false; values.len()];
    let mut s = half;
    while s != 0 {
        let (idx, prev) = parent[&s];
        chosen[idx] = true;
        s = prev;
    }
    if !chosen[0] {
        chosen.iter_mut().for_each(|c| *c = !*c);
    }
    Some((0..values.len()).filter(|&i| chosen[i]).collect())
}
