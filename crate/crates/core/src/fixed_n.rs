//! Exhaustive search for an EFR-(n−1) and Pareto-optimal allocation when the
//! number of agents is a small constant.
//!
//! A welfare maximizer for some weight vector is described by its tie set
//! `R`, the demand sets `D(t)` of tied items, and for every agent the set
//! `I_i` of items it wins outright. Each `I_i` is pinned down by at most one
//! "separating" good and chore per other agent, so enumerating `R`, `D` and
//! separators covers every maximizer in `m^poly(n)` steps. Candidates whose
//! pieces fail to partition the items are dropped before the fairness test
//! and the weight LP.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Signed;

use crate::model::{Allocation, EfrCertificate, Instance};
use crate::oracles::{next_combination, witness_with_options};
use crate::welfare::{
    compute_params, perturb_nondegenerate, po_certificate_lp, LpPartition, PerturbedInstance, WeightVector,
};
use crate::{AgentId, Budget, Error, ItemId, Meter, Rational, Result};

/// Separating items: `goods[i][j]` is `g_ij`, `chores[i][j]` is `c_ij`
/// (diagonal entries unused), and `empty[i]` forces `I_i = ∅`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatorGuess {
    pub goods: Vec<Vec<Option<ItemId>>>,
    pub chores: Vec<Vec<Option<ItemId>>>,
    pub empty: Vec<bool>,
}

impl SeparatorGuess {
    /// No separators and no empty flags.
    pub fn absent(n: usize) -> Self {
        SeparatorGuess { goods: vec![vec![None; n]; n], chores: vec![vec![None; n]; n], empty: vec![false; n] }
    }

    /// Separators read off a known interior partition: `g_ij` maximizes
    /// `v̄_j/v̄_i` over `I_i ∩ O⁺_ij` and `c_ij` maximizes `|v̄_i|/|v̄_j|` over
    /// `I_i ∩ O⁻_ij` (lowest item on ties).
    pub fn extract(pert: &PerturbedInstance, interior: &[Vec<ItemId>]) -> Result<Self> {
        let n = pert.num_agents();
        if interior.len() != n {
            return Err(Error::DimensionMismatch(format!("{} interiors for {n} agents", interior.len())));
        }
        let mut guess = SeparatorGuess::absent(n);
        for i in 0..n {
            guess.empty[i] = interior[i].is_empty();
            for j in (0..n).filter(|&j| j != i) {
                let classes = SignClasses::new(pert, i, j);
                let best = |pool: &[ItemId], key: &dyn Fn(ItemId) -> Rational| {
                    let mut best: Option<(Rational, ItemId)> = None;
                    for &t in interior[i].iter().filter(|t| pool.contains(t)) {
                        let r = key(t);
                        if best.as_ref().is_none_or(|(b, _)| r > *b) {
                            best = Some((r, t));
                        }
                    }
                    best.map(|(_, t)| t)
                };
                guess.goods[i][j] = best(&classes.common_goods, &|t| good_ratio(pert, i, j, t));
                guess.chores[i][j] = best(&classes.common_chores, &|t| chore_ratio(pert, i, j, t));
            }
        }
        Ok(guess)
    }
}

/// `v̄_j(t) / v̄_i(t)`.
fn good_ratio(pert: &PerturbedInstance, i: AgentId, j: AgentId, t: ItemId) -> Rational {
    pert.value(j, t) / pert.value(i, t)
}

/// `|v̄_i(t)| / |v̄_j(t)|`.
fn chore_ratio(pert: &PerturbedInstance, i: AgentId, j: AgentId, t: ItemId) -> Rational {
    pert.value(i, t).abs() / pert.value(j, t).abs()
}

/// Items split by the signs of `v̄_i` and `v̄_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct SignClasses {
    /// `O⁺_ij`: good for both.
    common_goods: Vec<ItemId>,
    /// `O⁻_ij`: chore for both.
    common_chores: Vec<ItemId>,
    /// `Q_ij`: good for `i`, chore for `j`.
    one_sided: Vec<ItemId>,
}

impl SignClasses {
    fn new(pert: &PerturbedInstance, i: AgentId, j: AgentId) -> Self {
        let mut c = SignClasses { common_goods: Vec::new(), common_chores: Vec::new(), one_sided: Vec::new() };
        for t in 0..pert.num_items() {
            match (pert.value(i, t).is_positive(), pert.value(j, t).is_positive()) {
                (true, true) => c.common_goods.push(t),
                (false, false) => c.common_chores.push(t),
                (true, false) => c.one_sided.push(t),
                (false, true) => {}
            }
        }
        c
    }
}

/// `F_ij = Q_ij ∪ G_ij ∪ B_ij`, sorted. A separator with the wrong sign
/// pattern is rejected.
pub fn build_f_ij(pert: &PerturbedInstance, i: AgentId, j: AgentId, guess: &SeparatorGuess) -> Result<Vec<ItemId>> {
    let n = pert.num_agents();
    for a in [i, j] {
        if a >= n {
            return Err(Error::AgentOutOfRange { agent: a, num_agents: n });
        }
    }
    let classes = SignClasses::new(pert, i, j);
    let mut out: BTreeSet<ItemId> = classes.one_sided.iter().copied().collect();
    if let Some(g) = guess.goods[i][j] {
        if !classes.common_goods.contains(&g) {
            return Err(Error::Precondition(format!("item {g} is not a good for both agents {i} and {j}")));
        }
        let cap = good_ratio(pert, i, j, g);
        out.extend(classes.common_goods.iter().copied().filter(|&t| good_ratio(pert, i, j, t) <= cap));
    }
    if let Some(c) = guess.chores[i][j] {
        if !classes.common_chores.contains(&c) {
            return Err(Error::Precondition(format!("item {c} is not a chore for both agents {i} and {j}")));
        }
        let cap = chore_ratio(pert, i, j, c);
        out.extend(classes.common_chores.iter().copied().filter(|&t| chore_ratio(pert, i, j, t) <= cap));
    }
    Ok(out.into_iter().collect())
}

/// `I_i = ∩_{j≠i} F_ij`, or `∅` for flagged agents. A lone agent gets every
/// item.
pub fn reconstruct_i(pert: &PerturbedInstance, guess: &SeparatorGuess) -> Result<Vec<Vec<ItemId>>> {
    let n = pert.num_agents();
    (0..n).map(|i| interior_for(pert, guess, i)).collect()
}

fn interior_for(pert: &PerturbedInstance, guess: &SeparatorGuess, i: AgentId) -> Result<Vec<ItemId>> {
    if guess.empty[i] {
        return Ok(Vec::new());
    }
    let mut acc: Vec<ItemId> = (0..pert.num_items()).collect();
    for j in (0..pert.num_agents()).filter(|&j| j != i) {
        let f = build_f_ij(pert, i, j, guess)?;
        acc.retain(|t| f.contains(t));
    }
    Ok(acc)
}

/// A fully specified candidate: tie set with demand sets, separators and the
/// reconstructed interiors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateStructure {
    pub realloc_set: Vec<ItemId>,
    pub demand: Vec<(ItemId, Vec<AgentId>)>,
    pub separators: SeparatorGuess,
    pub interior: Vec<Vec<ItemId>>,
}

impl CandidateStructure {
    /// Interiors to their agents, each tied item to the lowest member of its
    /// demand set.
    pub fn allocation(&self) -> Result<Allocation> {
        let n = self.interior.len();
        let m = self.interior.iter().map(Vec::len).sum::<usize>() + self.demand.len();
        let mut owners = vec![usize::MAX; m];
        for (i, items) in self.interior.iter().enumerate() {
            for &t in items {
                owners[t] = i;
            }
        }
        for (t, d) in &self.demand {
            owners[*t] = d[0];
        }
        Allocation::from_owners(n, owners)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Instances with more agents are refused.
    pub max_agents: usize,
    /// Caps full candidates reaching the fairness test.
    pub max_candidates: u64,
    /// Caps perturbation cycles and placement-search nodes.
    pub budget: Budget,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_agents: 3, max_candidates: 1_000_000, budget: Budget::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedNSolution {
    pub allocation: Allocation,
    pub certificate: EfrCertificate,
    pub weights: WeightVector,
    pub perturbed: PerturbedInstance,
    pub structure: CandidateStructure,
    /// Candidates that reached the fairness test.
    pub candidates_tested: u64,
}

/// One distinct interior option for one agent, tagged with the first guess
/// producing it.
#[derive(Debug, Clone)]
struct InteriorOption {
    items: Vec<ItemId>,
    goods: Vec<Option<ItemId>>,
    chores: Vec<Option<ItemId>>,
    empty: bool,
}

/// All distinct `I_i` for agent `i`: the empty flag first, then separators
/// in lexicographic order over `(g_i1, c_i1, g_i2, c_i2, …)` with "absent"
/// before any item.
fn interior_options(pert: &PerturbedInstance, i: AgentId) -> Result<Vec<InteriorOption>> {
    let n = pert.num_agents();
    let others: Vec<AgentId> = (0..n).filter(|&j| j != i).collect();
    let mut slots: Vec<Vec<Option<ItemId>>> = Vec::with_capacity(2 * others.len());
    for &j in &others {
        let c = SignClasses::new(pert, i, j);
        slots.push(core::iter::once(None).chain(c.common_goods.into_iter().map(Some)).collect());
        slots.push(core::iter::once(None).chain(c.common_chores.into_iter().map(Some)).collect());
    }

    let mut out = vec![InteriorOption {
        items: Vec::new(),
        goods: vec![None; n],
        chores: vec![None; n],
        empty: true,
    }];
    let mut seen: BTreeSet<Vec<ItemId>> = BTreeSet::new();
    seen.insert(Vec::new());
    let mut guess = SeparatorGuess::absent(n);
    let mut idx = vec![0usize; slots.len()];
    loop {
        for (s, &k) in idx.iter().enumerate() {
            let j = others[s / 2];
            if s % 2 == 0 {
                guess.goods[i][j] = slots[s][k];
            } else {
                guess.chores[i][j] = slots[s][k];
            }
        }
        let items = interior_for(pert, &guess, i)?;
        if seen.insert(items.clone()) {
            out.push(InteriorOption {
                items,
                goods: guess.goods[i].clone(),
                chores: guess.chores[i].clone(),
                empty: false,
            });
        }
        // odometer, last slot fastest
        let mut s = slots.len();
        loop {
            if s == 0 {
                return Ok(out);
            }
            s -= 1;
            idx[s] += 1;
            if idx[s] < slots[s].len() {
                break;
            }
            idx[s] = 0;
        }
    }
}

/// Demand-set options for a tied item: agent subsets of size at least two,
/// by bitmask rank.
fn demand_options(n: usize) -> Vec<Vec<AgentId>> {
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() >= 2)
        .map(|mask| (0..n).filter(|&a| mask >> a & 1 == 1).collect())
        .collect()
}

struct Search<'a> {
    inst: &'a Instance,
    pert: &'a PerturbedInstance,
    options: Vec<Vec<InteriorOption>>,
    limits: SearchLimits,
    meter: Meter,
    tested: u64,
}

impl Search<'_> {
    /// Picks interiors agent by agent so that they are disjoint and avoid
    /// `tied`; at the last agent, the union must cover the rest.
    fn assign(
        &mut self,
        agent: usize,
        taken: &mut Vec<bool>,
        chosen: &mut Vec<usize>,
        ties: &[(ItemId, Vec<AgentId>)],
    ) -> Result<Option<FixedNSolution>> {
        let n = self.options.len();
        if agent == n {
            if taken.iter().any(|t| !t) {
                return Ok(None);
            }
            return self.evaluate(chosen, ties);
        }
        for k in 0..self.options[agent].len() {
            let fits = self.options[agent][k].items.iter().all(|&t| !taken[t]);
            if !fits {
                continue;
            }
            for &t in &self.options[agent][k].items {
                taken[t] = true;
            }
            chosen.push(k);
            let found = self.assign(agent + 1, taken, chosen, ties)?;
            chosen.pop();
            for &t in &self.options[agent][k].items {
                taken[t] = false;
            }
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    fn evaluate(&mut self, chosen: &[usize], ties: &[(ItemId, Vec<AgentId>)]) -> Result<Option<FixedNSolution>> {
        self.tested += 1;
        if self.tested > self.limits.max_candidates {
            return Err(Error::BudgetExceeded { limit: self.limits.max_candidates });
        }
        let n = self.options.len();
        let mut separators = SeparatorGuess::absent(n);
        let mut interior = Vec::with_capacity(n);
        for (i, &k) in chosen.iter().enumerate() {
            let o = &self.options[i][k];
            separators.goods[i] = o.goods.clone();
            separators.chores[i] = o.chores.clone();
            separators.empty[i] = o.empty;
            interior.push(o.items.clone());
        }
        let structure = CandidateStructure {
            realloc_set: ties.iter().map(|(t, _)| *t).collect(),
            demand: ties.to_vec(),
            separators,
            interior,
        };
        let base = structure.allocation()?;

        let set = &structure.realloc_set;
        let placement_options: Vec<Vec<AgentId>> = ties.iter().map(|(_, d)| d.clone()).collect();
        let mut witnesses = Vec::with_capacity(n);
        for agent in 0..n {
            let row = self.inst.row(agent);
            match witness_with_options(row, &base, set, &placement_options, agent, &mut self.meter)? {
                Some(p) => {
                    let mut w = base.clone();
                    for (d, &t) in set.iter().enumerate() {
                        w = w.with_item_moved(t, p[d]);
                    }
                    witnesses.push(w);
                }
                None => return Ok(None),
            }
        }

        let partition = LpPartition { interior: structure.interior.clone(), ties: ties.to_vec() };
        let Some(weights) = po_certificate_lp(self.pert, &partition)? else { return Ok(None) };
        let certificate = EfrCertificate { base: base.clone(), realloc_set: set.iter().copied().collect(), witnesses };
        Ok(Some(FixedNSolution {
            allocation: base,
            certificate,
            weights,
            perturbed: self.pert.clone(),
            structure,
            candidates_tested: self.tested,
        }))
    }
}

/// Searches welfare-maximizer descriptions until one is EFR-(n−1) under the
/// original values and certified Pareto optimal by the weight LP.
///
/// Enumeration: `R` by size then lexicographically; demand sets by bitmask
/// rank; interiors per agent as in the separator order.
pub fn search_efr_po(inst: &Instance, limits: SearchLimits) -> Result<FixedNSolution> {
    let n = inst.num_agents();
    let m = inst.num_items();
    if n > limits.max_agents {
        return Err(Error::Precondition(format!("search is capped at {} agents, got {n}", limits.max_agents)));
    }
    let params = compute_params(inst)?;
    let pert = perturb_nondegenerate(inst, &params, limits.budget)?;
    let mut options = Vec::with_capacity(n);
    for i in 0..n {
        options.push(interior_options(&pert, i)?);
    }
    let mut search =
        Search { inst, pert: &pert, options, limits, meter: Meter::new(limits.budget), tested: 0 };
    let demand_choices = demand_options(n);

    for size in 0..=(n - 1).min(m) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let mut pick = vec![0usize; size];
            loop {
                let ties: Vec<(ItemId, Vec<AgentId>)> =
                    combo.iter().zip(&pick).map(|(&t, &d)| (t, demand_choices[d].clone())).collect();
                let mut taken = vec![false; m];
                for &t in &combo {
                    taken[t] = true;
                }
                if let Some(found) = search.assign(0, &mut taken, &mut Vec::with_capacity(n), &ties)? {
                    return Ok(found);
                }
                // odometer over demand choices, last item fastest
                let mut s = size;
                let advanced = loop {
                    if s == 0 {
                        break false;
                    }
                    s -= 1;
                    pick[s] += 1;
                    if pick[s] < demand_choices.len() {
                        break true;
                    }
                    pick[s] = 0;
                };
                if !advanced {
                    break;
                }
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    Err(Error::InvariantViolation("exhaustive search found no EFR and Pareto-optimal candidate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{decide_efr_k, is_pareto_optimal_bruteforce};
    use crate::validate_certificate;
    use crate::welfare::{demand_sets, max_weighted_welfare};

    fn pert_of(rows: &[&[i64]]) -> PerturbedInstance {
        let inst = Instance::from_integers(rows).unwrap();
        let params = compute_params(&inst).unwrap();
        perturb_nondegenerate(&inst, &params, Budget::default()).unwrap()
    }

    #[test]
    fn single_agent_gets_everything() {
        let inst = Instance::from_integers(&[[2, -1, 0]]).unwrap();
        let sol = search_efr_po(&inst, SearchLimits::default()).unwrap();
        assert_eq!(sol.allocation, Allocation::grand_bundle(1, 3, 0).unwrap());
        assert!(sol.certificate.realloc_set.is_empty());
        assert_eq!(sol.weights, WeightVector::vertex(1, 0));
    }

    #[test]
    fn good_and_chore_pair() {
        let inst = Instance::from_integers(&[[3, -1], [5, -2]]).unwrap();
        let sol = search_efr_po(&inst, SearchLimits::default()).unwrap();
        assert!(validate_certificate(&inst, &sol.certificate).unwrap());
        assert!(sol.certificate.k() <= 1);
        assert!(decide_efr_k(&inst, &sol.allocation, 1, Budget::default()).unwrap().verdict);
        assert!(is_pareto_optimal_bruteforce(&inst, &sol.allocation, Budget::default()).unwrap());
    }

    #[test]
    fn agent_cap_is_enforced() {
        let inst = Instance::from_integers(&[[1], [1], [1], [1]]).unwrap();
        assert!(matches!(search_efr_po(&inst, SearchLimits::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn candidate_cap_is_reported() {
        let inst = Instance::from_integers(&[[-1, -1], [-1, -1]]).unwrap();
        let limits = SearchLimits { max_candidates: 0, ..SearchLimits::default() };
        assert!(matches!(search_efr_po(&inst, limits), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn f_ij_without_shared_items_is_empty() {
        // Item 0 is a chore for agent 0 and a good for agent 1.
        let pert = pert_of(&[&[-1], &[1]]);
        assert!(build_f_ij(&pert, 0, 1, &SeparatorGuess::absent(2)).unwrap().is_empty());
        assert_eq!(build_f_ij(&pert, 1, 0, &SeparatorGuess::absent(2)).unwrap(), vec![0]);
    }

    #[test]
    fn max_ratio_separator_takes_all_common_goods() {
        let pert = pert_of(&[&[1, 4, 2], &[3, 1, 2]]);
        let top = (0..3).max_by(|&a, &b| good_ratio(&pert, 0, 1, a).cmp(&good_ratio(&pert, 0, 1, b))).unwrap();
        let mut guess = SeparatorGuess::absent(2);
        guess.goods[0][1] = Some(top);
        assert_eq!(build_f_ij(&pert, 0, 1, &guess).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn wrong_sign_separator_is_rejected() {
        let pert = pert_of(&[&[1, -1], &[1, -1]]);
        let mut guess = SeparatorGuess::absent(2);
        guess.goods[0][1] = Some(1);
        assert!(matches!(build_f_ij(&pert, 0, 1, &guess), Err(Error::Precondition(_))));
        let mut guess = SeparatorGuess::absent(2);
        guess.chores[0][1] = Some(0);
        assert!(matches!(build_f_ij(&pert, 0, 1, &guess), Err(Error::Precondition(_))));
    }

    #[test]
    fn absent_separators_on_shared_items_give_empty_interiors() {
        let pert = pert_of(&[&[1, -2], &[2, -1]]);
        assert_eq!(reconstruct_i(&pert, &SeparatorGuess::absent(2)).unwrap(), vec![vec![], vec![]]);
    }

    #[test]
    fn true_separators_recover_interiors() {
        let pert = pert_of(&[&[3, -1, 2, 1], &[1, -2, 2, 4], &[2, -3, 1, 1]]);
        let w = WeightVector::new(vec![crate::ratio(1, 2), crate::ratio(1, 3), crate::ratio(1, 6)]).unwrap();
        let alloc = max_weighted_welfare(&pert, &w).unwrap();
        let profile = demand_sets(&pert, &w).unwrap();
        let interior: Vec<Vec<ItemId>> = (0..3)
            .map(|i| alloc.bundle(i).into_iter().filter(|t| !profile.ties.contains(t)).collect())
            .collect();
        let guess = SeparatorGuess::extract(&pert, &interior).unwrap();
        assert_eq!(reconstruct_i(&pert, &guess).unwrap(), interior);
    }
}
