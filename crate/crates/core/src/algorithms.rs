//! Polynomial-time constructions.
//!
//! * [`double_round_robin_ef1`]: EF1 for mixed manna.
//! * [`resolve_top_trading_cycles`]: makes some agent envy-free, keeps EF1.
//! * [`efr_n_minus_1`]: EF1 base plus an EFR-(n-1) certificate.
//! * [`conflict_aware_picking`]: goods-only EFR-⌊n/2⌋ picking sequence, and
//!   [`extend_with_round_robin`] to hand out the reserved goods EF1-style.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::model::{
    abs, bundle_values_for, ef1_for_bundles, envy_free_for_bundles, sum_values, Allocation,
    EfrCertificate, EnvyGraph, Instance,
};
use crate::{AgentId, Error, ItemId, Rational, Result};

/// Highest-valued item of `pool` for `agent`, lowest index on ties.
fn favourite(inst: &Instance, agent: AgentId, pool: &BTreeSet<ItemId>) -> Option<ItemId> {
    let row = inst.row(agent);
    let mut best: Option<ItemId> = None;
    for &t in pool {
        if best.is_none_or(|b| row[t] > row[b]) {
            best = Some(t);
        }
    }
    best
}

/// EF1 allocation of mixed manna by a double round-robin.
///
/// Items negative for every agent (shared chores) are picked first in
/// round-robin order `0, 1, …, n-1, 0, …`. The remaining items are then
/// picked in the reverse cyclic order starting from the agent that took the
/// last shared chore (agent `n-1` if there were none); an agent passes when
/// everything left is negative for it.
pub fn double_round_robin_ef1(inst: &Instance) -> Allocation {
    let n = inst.num_agents();
    let m = inst.num_items();
    let is_shared_chore = |t: ItemId| (0..n).all(|i| inst.value(i, t).is_negative());
    let mut chores: BTreeSet<ItemId> = (0..m).filter(|&t| is_shared_chore(t)).collect();
    let mut others: BTreeSet<ItemId> = (0..m).filter(|&t| !is_shared_chore(t)).collect();
    let mut owners = vec![0; m];

    let mut turn = 0;
    let mut last_chore_picker = n - 1;
    while let Some(t) = favourite(inst, turn % n, &chores) {
        chores.remove(&t);
        owners[t] = turn % n;
        last_chore_picker = turn % n;
        turn += 1;
    }

    let mut position = 0;
    while !others.is_empty() {
        let agent = (last_chore_picker + n - position % n) % n;
        position += 1;
        if let Some(t) = favourite(inst, agent, &others) {
            if !inst.value(agent, t).is_negative() {
                others.remove(&t);
                owners[t] = agent;
            }
        }
    }
    Allocation::from_owners(n, owners).expect("owners in range")
}

/// Result of [`resolve_top_trading_cycles_traced`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopTradingTrace {
    pub allocation: Allocation,
    /// `Σ_i v_i(A_i)` before the first rotation and after each rotation.
    pub total_utility: Vec<Rational>,
}

/// Rotates bundles along top-trading envy cycles until some agent is
/// envy-free. Returns the input unchanged if that already holds.
pub fn resolve_top_trading_cycles(inst: &Instance, alloc: &Allocation) -> Result<Allocation> {
    Ok(resolve_top_trading_cycles_traced(inst, alloc)?.allocation)
}

pub fn resolve_top_trading_cycles_traced(inst: &Instance, alloc: &Allocation) -> Result<TopTradingTrace> {
    alloc.check_against(inst)?;
    let n = inst.num_agents();
    let mut bundles = alloc.bundles();
    let mut total_utility = vec![total(inst, &bundles)];
    loop {
        if (0..n).any(|i| envy_free_for_bundles(inst, &bundles, i)) {
            break;
        }
        // Nobody is envy-free, so every agent points at a strictly better
        // bundle held by someone else; the pointer graph has a cycle.
        let target: Vec<AgentId> = (0..n)
            .map(|i| {
                let vals = bundle_values_for(inst, i, &bundles);
                let best = vals.iter().max().expect("n >= 1");
                vals.iter().position(|v| v == best).expect("max exists")
            })
            .collect();
        let mut seen = vec![false; n];
        let mut at = 0;
        while !seen[at] {
            seen[at] = true;
            at = target[at];
        }
        let start = at;
        let mut cycle = vec![start];
        let mut next = target[start];
        while next != start {
            cycle.push(next);
            next = target[next];
        }
        let old = bundles.clone();
        for &i in &cycle {
            bundles[i] = old[target[i]].clone();
        }
        let t = total(inst, &bundles);
        if t <= *total_utility.last().expect("non-empty") {
            return Err(Error::InvariantViolation("top-trading rotation did not raise utility".into()));
        }
        total_utility.push(t);
    }
    Ok(TopTradingTrace { allocation: Allocation::from_bundles(inst.num_items(), &bundles)?, total_utility })
}

fn total(inst: &Instance, bundles: &[Vec<ItemId>]) -> Rational {
    bundles
        .iter()
        .enumerate()
        .fold(Rational::zero(), |acc, (i, b)| acc + sum_values(inst, i, b))
}

/// EF1 allocation with an EFR-(n-1) certificate.
///
/// The base is the top-trading resolution of the double round-robin
/// allocation. With `ĩ` the lowest-index envy-free agent, every other agent
/// `i` contributes `t_i`, the larger in absolute value of its lowest-valued
/// own chore and its highest-valued outside good. Witness `i` moves `t_i`
/// away to `ĩ` (chore) or to `i` (good).
pub fn efr_n_minus_1(inst: &Instance) -> Result<EfrCertificate> {
    let base = resolve_top_trading_cycles(inst, &double_round_robin_ef1(inst))?;
    let n = inst.num_agents();
    let bundles = base.bundles();
    let sink = (0..n)
        .find(|&i| envy_free_for_bundles(inst, &bundles, i))
        .ok_or_else(|| Error::InvariantViolation("no envy-free agent after resolution".into()))?;

    let mut realloc_set = BTreeSet::new();
    let mut witnesses = Vec::with_capacity(n);
    for i in 0..n {
        if i == sink {
            witnesses.push(base.clone());
            continue;
        }
        let row = inst.row(i);
        let worst_chore = bundles[i]
            .iter()
            .copied()
            .filter(|&t| row[t].is_negative())
            .fold(None, |acc: Option<ItemId>, t| match acc {
                Some(c) if row[c] <= row[t] => Some(c),
                _ => Some(t),
            });
        let best_good = (0..inst.num_items())
            .filter(|&t| base.owner(t) != i && !row[t].is_negative())
            .fold(None, |acc: Option<ItemId>, t| match acc {
                Some(g) if row[g] >= row[t] => Some(g),
                _ => Some(t),
            });
        let pick = match (worst_chore, best_good) {
            (Some(c), Some(g)) => {
                let (ac, ag) = (abs(&row[c]), abs(&row[g]));
                if ac > ag || (ac == ag && c < g) {
                    Some((c, sink))
                } else {
                    Some((g, i))
                }
            }
            (Some(c), None) => Some((c, sink)),
            (None, Some(g)) => Some((g, i)),
            (None, None) => None,
        };
        match pick {
            Some((t, to)) => {
                realloc_set.insert(t);
                witnesses.push(base.with_item_moved(t, to));
            }
            None => witnesses.push(base.clone()),
        }
    }
    Ok(EfrCertificate { base, realloc_set, witnesses })
}

/// State of the conflict-aware picking sequence between outer iterations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PickingState {
    pub active: BTreeSet<AgentId>,
    pub deferred: BTreeSet<AgentId>,
    pub reserved: Vec<ItemId>,
    pub unallocated: BTreeSet<ItemId>,
    /// Partial bundles; reserved and unallocated goods are in none of them.
    pub bundles: Vec<Vec<ItemId>>,
}

/// A conflict-phase event: `item` went to the reserve and `agents` (its
/// conflicting active agents) were deferred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeferralEvent {
    pub item: ItemId,
    pub agents: Vec<AgentId>,
}

/// Loop invariants evaluated at the end of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationCheck {
    pub iteration: usize,
    /// Every active agent is envy-free under the partial allocation.
    pub active_envy_free: bool,
    /// Every deferred agent is EF1 under the partial allocation.
    pub deferred_ef1: bool,
    /// Every deferred agent is envy-free once given all reserved goods.
    pub deferred_envy_free_with_reserve: bool,
}

impl IterationCheck {
    pub fn holds(&self) -> bool {
        self.active_envy_free && self.deferred_ef1 && self.deferred_envy_free_with_reserve
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PickingOutcome {
    /// Base gives every reserved good to agent 0; witness `i` gives them all to `i`.
    pub certificate: EfrCertificate,
    /// State after the outer loop, before the reserve is handed out.
    pub state: PickingState,
    pub deferrals: Vec<DeferralEvent>,
    pub checks: Vec<IterationCheck>,
}

/// Conflict-Aware Picking Sequence for goods-only instances.
///
/// Each outer iteration first reserves, while two or more active agents
/// share a favourite unallocated good, the good with the most such agents
/// (lowest index on ties) and defers those agents. Then active agents, and
/// after them deferred agents, each pick one favourite good in index order.
pub fn conflict_aware_picking(inst: &Instance) -> Result<PickingOutcome> {
    if !inst.is_goods_only() {
        return Err(Error::Precondition("conflict-aware picking needs non-negative values".into()));
    }
    let n = inst.num_agents();
    let m = inst.num_items();
    let mut state = PickingState {
        active: (0..n).collect(),
        deferred: BTreeSet::new(),
        reserved: Vec::new(),
        unallocated: (0..m).collect(),
        bundles: vec![Vec::new(); n],
    };
    let mut deferrals = Vec::new();
    let mut checks = Vec::new();
    let mut iteration = 0;

    while !state.unallocated.is_empty() {
        iteration += 1;
        while let Some((item, agents)) = most_conflicted(inst, &state) {
            state.unallocated.remove(&item);
            state.reserved.push(item);
            for a in &agents {
                state.active.remove(a);
                state.deferred.insert(*a);
            }
            deferrals.push(DeferralEvent { item, agents });
        }
        let order: Vec<AgentId> = state.active.iter().chain(state.deferred.iter()).copied().collect();
        for agent in order {
            let Some(t) = favourite(inst, agent, &state.unallocated) else { break };
            state.unallocated.remove(&t);
            state.bundles[agent].push(t);
        }
        checks.push(check_invariants(inst, &state, iteration));
    }

    for b in &mut state.bundles {
        b.sort_unstable();
    }
    let with_reserve_at = |agent: AgentId| -> Result<Allocation> {
        let mut bundles = state.bundles.clone();
        bundles[agent].extend(state.reserved.iter().copied());
        Allocation::from_bundles(m, &bundles)
    };
    let base = with_reserve_at(0)?;
    let witnesses = (0..n).map(with_reserve_at).collect::<Result<Vec<_>>>()?;
    let certificate = EfrCertificate {
        base,
        realloc_set: state.reserved.iter().copied().collect(),
        witnesses,
    };
    Ok(PickingOutcome { certificate, state, deferrals, checks })
}

/// Good in `G` with the most conflicting active agents, if at least two.
fn most_conflicted(inst: &Instance, state: &PickingState) -> Option<(ItemId, Vec<AgentId>)> {
    let mut conflicts: Vec<Vec<AgentId>> = vec![Vec::new(); inst.num_items()];
    for &i in &state.active {
        let Some(fav) = favourite(inst, i, &state.unallocated) else { continue };
        let top = inst.value(i, fav);
        for &g in &state.unallocated {
            if inst.value(i, g) == top {
                conflicts[g].push(i);
            }
        }
    }
    let mut best: Option<ItemId> = None;
    for &g in &state.unallocated {
        if best.is_none_or(|b| conflicts[g].len() > conflicts[b].len()) {
            best = Some(g);
        }
    }
    let g = best?;
    (conflicts[g].len() >= 2).then(|| (g, core::mem::take(&mut conflicts[g])))
}

fn check_invariants(inst: &Instance, state: &PickingState, iteration: usize) -> IterationCheck {
    let active_envy_free = state.active.iter().all(|&i| envy_free_for_bundles(inst, &state.bundles, i));
    let deferred_ef1 = state.deferred.iter().all(|&j| ef1_for_bundles(inst, &state.bundles, j));
    let deferred_envy_free_with_reserve = state.deferred.iter().all(|&j| {
        let mut bundles = state.bundles.clone();
        bundles[j].extend(state.reserved.iter().copied());
        envy_free_for_bundles(inst, &bundles, j)
    });
    IterationCheck { iteration, active_envy_free, deferred_ef1, deferred_envy_free_with_reserve }
}

/// Completes the partial allocation by handing out the reserved goods
/// round-robin along a topological order of its envy graph (enviers pick
/// before the agents they envy), each pick being a favourite remaining good.
pub fn extend_with_round_robin(inst: &Instance, partial: &[Vec<ItemId>], reserved: &[ItemId]) -> Result<Allocation> {
    let n = inst.num_agents();
    if partial.len() != n {
        return Err(Error::DimensionMismatch(format!("{} partial bundles for {n} agents", partial.len())));
    }
    let mut bundles = partial.to_vec();
    bundles[0].extend(reserved.iter().copied());
    Allocation::from_bundles(inst.num_items(), &bundles)?;

    let order = EnvyGraph::from_bundles(inst, partial)
        .topological_order()
        .ok_or_else(|| Error::InvariantViolation("envy graph of the partial allocation has a cycle".into()))?;
    let mut bundles = partial.to_vec();
    let mut pool: BTreeSet<ItemId> = reserved.iter().copied().collect();
    for &agent in order.iter().cycle() {
        let Some(t) = favourite(inst, agent, &pool) else { break };
        pool.remove(&t);
        bundles[agent].push(t);
    }
    Allocation::from_bundles(inst.num_items(), &bundles)
}

/// [`conflict_aware_picking`] with the reserve distributed by
/// [`extend_with_round_robin`] instead of going to agent 0. Witness `i`
/// still gives all reserved goods to `i`.
pub fn conflict_aware_picking_extended(inst: &Instance) -> Result<EfrCertificate> {
    let outcome = conflict_aware_picking(inst)?;
    let base = extend_with_round_robin(inst, &outcome.state.bundles, &outcome.state.reserved)?;
    Ok(EfrCertificate { base, ..outcome.certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_ef1, validate_certificate};
    use crate::oracles::min_efr_k;
    use crate::Budget;

    #[test]
    fn single_agent_takes_everything() {
        let inst = Instance::from_integers(&[[4, 0, 2]]).unwrap();
        assert_eq!(double_round_robin_ef1(&inst), Allocation::grand_bundle(1, 3, 0).unwrap());
        let cert = efr_n_minus_1(&inst).unwrap();
        assert!(cert.realloc_set.is_empty());
        assert!(validate_certificate(&inst, &cert).unwrap());
    }

    #[test]
    fn identical_chores_spread_in_agent_order() {
        let inst = Instance::from_integers(&[[-1, -1, -1]; 4]).unwrap();
        let alloc = double_round_robin_ef1(&inst);
        assert_eq!(alloc.owners(), &[0, 1, 2]);
        assert!(alloc.bundle(3).is_empty());
        assert!(is_ef1(&inst, &alloc).unwrap());

        let cert = efr_n_minus_1(&inst).unwrap();
        assert_eq!(cert.realloc_set, BTreeSet::from([0, 1, 2]));
        assert!(validate_certificate(&inst, &cert).unwrap());
        for i in 0..3 {
            assert_eq!(cert.witnesses[i], cert.base.with_item_moved(i, 3));
        }
    }

    #[test]
    fn goods_phase_starts_at_last_chore_picker() {
        // One shared chore and one common good: agent 0 takes the chore and
        // must also take the good first, otherwise EF1 fails.
        let inst = Instance::from_integers(&[[-1, 1], [-1, 1]]).unwrap();
        let alloc = double_round_robin_ef1(&inst);
        assert_eq!(alloc.owners(), &[0, 0]);
        assert!(is_ef1(&inst, &alloc).unwrap());
    }

    #[test]
    fn swap_resolves_mutual_envy() {
        let inst = Instance::from_integers(&[[0, 5], [5, 0]]).unwrap();
        let alloc = Allocation::from_owners(2, vec![0, 1]).unwrap();
        let trace = resolve_top_trading_cycles_traced(&inst, &alloc).unwrap();
        assert_eq!(trace.allocation.owners(), &[1, 0]);
        assert_eq!(trace.total_utility, vec![crate::int(0), crate::int(10)]);
    }

    #[test]
    fn resolution_keeps_allocation_with_a_sink() {
        let inst = Instance::from_integers(&[[-1, -1, -1]; 4]).unwrap();
        let alloc = Allocation::from_owners(4, vec![0, 1, 2]).unwrap();
        assert_eq!(resolve_top_trading_cycles(&inst, &alloc).unwrap(), alloc);
    }

    #[test]
    fn disjoint_favourites_have_no_conflicts() {
        let inst = Instance::from_integers(&[[5, 1, 1], [1, 5, 1], [1, 1, 5]]).unwrap();
        let out = conflict_aware_picking(&inst).unwrap();
        assert!(out.certificate.realloc_set.is_empty());
        assert_eq!(out.certificate.base.owners(), &[0, 1, 2]);
        assert!(crate::model::is_envy_free(&inst, &out.certificate.base).unwrap());
    }

    #[test]
    fn paired_goods_reserve_both() {
        let inst = Instance::from_integers(&[[1, 0], [1, 0], [0, 1], [0, 1]]).unwrap();
        let out = conflict_aware_picking(&inst).unwrap();
        assert_eq!(out.certificate.realloc_set, BTreeSet::from([0, 1]));
        assert_eq!(out.deferrals.len(), 2);
        assert_eq!(out.deferrals[0], DeferralEvent { item: 0, agents: vec![0, 1] });
        assert!(validate_certificate(&inst, &out.certificate).unwrap());
        assert!(out.checks.iter().all(IterationCheck::holds));

        let ext = extend_with_round_robin(&inst, &out.state.bundles, &out.state.reserved).unwrap();
        assert!(is_ef1(&inst, &ext).unwrap());
        assert_eq!((0..4).filter(|&i| !ext.bundle(i).is_empty()).count(), 2);
        assert!(min_efr_k(&inst, &ext, Budget::default()).unwrap().0 <= 2);
    }

    #[test]
    fn empty_reserve_extension_is_identity() {
        let inst = Instance::from_integers(&[[2, 1], [1, 2]]).unwrap();
        let partial = vec![vec![0], vec![1]];
        let ext = extend_with_round_robin(&inst, &partial, &[]).unwrap();
        assert_eq!(ext.bundles(), partial);
    }

    #[test]
    fn picking_rejects_chores() {
        let inst = Instance::from_integers(&[[1, -1]]).unwrap();
        assert!(matches!(conflict_aware_picking(&inst), Err(Error::Precondition(_))));
    }

    #[test]
    fn cyclic_partial_envy_is_an_invariant_violation() {
        let inst = Instance::from_integers(&[[0, 5], [5, 0]]).unwrap();
        let partial = vec![vec![0], vec![1]];
        assert!(matches!(
            extend_with_round_robin(&inst, &partial, &[]),
            Err(Error::InvariantViolation(_))
        ));
    }
}
