//! Perturbed values and shifted weighted welfare.
//!
//! Values are perturbed to `v̄_i(t) = v_i(t) - ε_{i,t}` with `0 < ε_{i,t} < ε`,
//! and welfare is `Σ_i (w_i + η) · v̄_i(A_i)` for `w` in the simplex. With the
//! bounds computed by [`compute_params`], every maximizer is Pareto optimal
//! for the original values, and strict preferences between disjoint bundles
//! survive with margin `λ/2`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::lp::LinearSystem;
use crate::model::{Allocation, Instance};
use crate::{int, AgentId, Budget, Error, ItemId, Meter, Rational, Result};

/// Shift and perturbation bounds.
///
/// `lambda_lb` and `omega_lb` are lower bounds on the minimum nonzero envy
/// gap and the minimum nonzero welfare gap; for integer values both are 1.
/// `big_lambda` is the maximum envy `max_i (v_i(G_i) - v_i([m] \ G_i))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbParams {
    pub lambda_lb: Rational,
    pub big_lambda: Rational,
    pub omega_lb: Rational,
    pub eta: Rational,
    pub epsilon: Rational,
}

impl PerturbParams {
    /// `0 < η ≤ λ/(2Λn)`, `η ≤ 1/(2n)` and `0 < ε < η/(4nm) · min(λ, ω, 1)`.
    pub fn satisfies_bounds(&self, num_agents: usize, num_items: usize) -> bool {
        let n = int(num_agents as i64);
        let m = int(num_items.max(1) as i64);
        let two = int(2);
        let eta_cap = &self.lambda_lb / (&two * &self.big_lambda * &n);
        let min_gap = self.lambda_lb.clone().min(self.omega_lb.clone()).min(Rational::one());
        let eps_cap = &self.eta / (int(4) * &n * &m) * min_gap;
        self.eta.is_positive()
            && self.eta <= eta_cap
            && self.eta <= Rational::one() / (two * &n)
            && self.epsilon.is_positive()
            && self.epsilon < eps_cap
    }
}

/// Bounds for an integer-valued instance. `Λ = 0` is floored to 1; `ε` is
/// half its strict upper bound.
pub fn compute_params(inst: &Instance) -> Result<PerturbParams> {
    if !inst.is_integral() {
        return Err(Error::Precondition("perturbation bounds need integer values".into()));
    }
    let n = inst.num_agents();
    let m = inst.num_items();
    let big_lambda = (0..n)
        .map(|i| inst.row(i).iter().fold(Rational::zero(), |acc, v| acc + v.abs()))
        .max()
        .expect("n >= 1");
    let big_lambda = if big_lambda.is_zero() { Rational::one() } else { big_lambda };
    let lambda_lb = Rational::one();
    let omega_lb = Rational::one();
    let nq = int(n as i64);
    let eta = (&lambda_lb / (int(2) * &big_lambda * &nq)).min(Rational::one() / (int(2) * &nq));
    let min_gap = lambda_lb.clone().min(omega_lb.clone()).min(Rational::one());
    let epsilon = &eta / (int(8) * &nq * int(m.max(1) as i64)) * min_gap;
    Ok(PerturbParams { lambda_lb, big_lambda, omega_lb, eta, epsilon })
}

/// An instance with perturbations `ε_{i,t}` and the derived values `v̄`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedInstance {
    base: Instance,
    eps: Vec<Vec<Rational>>,
    params: PerturbParams,
    values: Vec<Vec<Rational>>,
}

impl PerturbedInstance {
    /// Checks shapes and `0 < ε_{i,t} < ε`; does not check non-degeneracy.
    pub fn new(base: Instance, eps: Vec<Vec<Rational>>, params: PerturbParams) -> Result<Self> {
        let (n, m) = (base.num_agents(), base.num_items());
        if eps.len() != n || eps.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!("perturbation matrix must be {n}×{m}")));
        }
        if eps.iter().flatten().any(|e| !e.is_positive() || *e >= params.epsilon) {
            return Err(Error::Precondition("every perturbation must lie in (0, ε)".into()));
        }
        let values = (0..n)
            .map(|i| (0..m).map(|t| base.value(i, t) - &eps[i][t]).collect())
            .collect();
        Ok(PerturbedInstance { base, eps, params, values })
    }

    pub fn base(&self) -> &Instance {
        &self.base
    }

    pub fn params(&self) -> &PerturbParams {
        &self.params
    }

    pub fn eps(&self) -> &[Vec<Rational>] {
        &self.eps
    }

    /// Perturbed value `v̄_agent(item)`.
    pub fn value(&self, agent: AgentId, item: ItemId) -> &Rational {
        &self.values[agent][item]
    }

    pub fn values(&self) -> &[Vec<Rational>] {
        &self.values
    }

    pub fn num_agents(&self) -> usize {
        self.base.num_agents()
    }

    pub fn num_items(&self) -> usize {
        self.base.num_items()
    }

    pub fn bundle_value(&self, agent: AgentId, bundle: &[ItemId]) -> Rational {
        bundle.iter().fold(Rational::zero(), |acc, &t| acc + &self.values[agent][t])
    }
}

/// A simple cycle `(a_0, t_0, a_1, t_1, …, a_{k-1}, t_{k-1}, a_0)` in the
/// complete agent–item bipartite graph, `k ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Cycle {
    agents: Vec<AgentId>,
    items: Vec<ItemId>,
}

impl Cycle {
    /// Edges with a flag: `true` if the edge's value is in the numerator of
    /// the alternating ratio product `Π v(a_{l+1}, t_l) / v(a_l, t_l)`.
    fn edges(&self) -> impl Iterator<Item = ((AgentId, ItemId), bool)> + '_ {
        let k = self.agents.len();
        (0..k).flat_map(move |l| {
            let t = self.items[l];
            [((self.agents[(l + 1) % k], t), true), ((self.agents[l], t), false)]
        })
    }
}

/// Calls `f` on every simple cycle, one orientation per rotation class of
/// agents (the smallest agent goes first).
fn for_each_cycle(
    n: usize,
    m: usize,
    meter: &mut Meter,
    mut f: impl FnMut(&Cycle) -> Result<()>,
) -> Result<()> {
    fn items_rec(
        cycle: &mut Cycle,
        k: usize,
        used: &mut [bool],
        meter: &mut Meter,
        f: &mut dyn FnMut(&Cycle) -> Result<()>,
    ) -> Result<()> {
        if cycle.items.len() == k {
            meter.tick()?;
            return f(cycle);
        }
        for t in 0..used.len() {
            if used[t] {
                continue;
            }
            used[t] = true;
            cycle.items.push(t);
            items_rec(cycle, k, used, meter, f)?;
            cycle.items.pop();
            used[t] = false;
        }
        Ok(())
    }
    fn agents_rec(
        cycle: &mut Cycle,
        k: usize,
        n: usize,
        m: usize,
        meter: &mut Meter,
        f: &mut dyn FnMut(&Cycle) -> Result<()>,
    ) -> Result<()> {
        if cycle.agents.len() == k {
            let mut used = vec![false; m];
            return items_rec(cycle, k, &mut used, meter, f);
        }
        let first = cycle.agents[0];
        for a in first + 1..n {
            if cycle.agents.contains(&a) {
                continue;
            }
            cycle.agents.push(a);
            agents_rec(cycle, k, n, m, meter, f)?;
            cycle.agents.pop();
        }
        Ok(())
    }
    for k in 2..=n.min(m) {
        for first in 0..n {
            let mut cycle = Cycle { agents: vec![first], items: Vec::new() };
            agents_rec(&mut cycle, k, n, m, meter, &mut f)?;
        }
    }
    Ok(())
}

/// Non-degeneracy: no zero value and no cycle whose alternating value-ratio
/// product equals one. Enumerates every cycle; each costs one budget unit.
pub fn check_nondegenerate(values: &[Vec<Rational>], budget: Budget) -> Result<bool> {
    let n = values.len();
    let m = values.first().map_or(0, Vec::len);
    if values.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("ragged value matrix".into()));
    }
    if values.iter().flatten().any(Zero::is_zero) {
        return Ok(false);
    }
    let mut meter = Meter::new(budget);
    let mut degenerate = false;
    for_each_cycle(n, m, &mut meter, |c| {
        if !degenerate {
            let (mut num, mut den) = (Rational::one(), Rational::one());
            for ((a, t), top) in c.edges() {
                if top {
                    num *= &values[a][t];
                } else {
                    den *= &values[a][t];
                }
            }
            degenerate = num == den;
        }
        Ok(())
    })?;
    Ok(!degenerate)
}

/// Deterministic non-degenerate perturbation of an integer instance.
///
/// Perturbations are fixed one at a time in row-major order. When `(i, t)`
/// is set, every cycle whose other edges are already fixed rules out one
/// value; so does `v̄_i(t) = 0`. With `K` = (number of ruled-out values) + 1,
/// the smallest admissible `ε · k/(K+1)`, `k = 1..=K`, is taken.
pub fn perturb_nondegenerate(inst: &Instance, params: &PerturbParams, budget: Budget) -> Result<PerturbedInstance> {
    let n = inst.num_agents();
    let m = inst.num_items();
    let key = |a: AgentId, t: ItemId| a * m + t;
    let mut meter = Meter::new(budget);
    let mut closing: Vec<Vec<Cycle>> = vec![Vec::new(); n * m];
    for_each_cycle(n, m, &mut meter, |c| {
        let last = c.edges().map(|((a, t), _)| key(a, t)).max().expect("cycle has edges");
        closing[last].push(c.clone());
        Ok(())
    })?;

    let mut eps = vec![vec![Rational::zero(); m]; n];
    let mut bar = vec![vec![Rational::zero(); m]; n];
    for i in 0..n {
        for t in 0..m {
            let v = inst.value(i, t);
            let mut forbidden: BTreeSet<Rational> = BTreeSet::new();
            forbidden.insert(v.clone());
            for c in &closing[key(i, t)] {
                let (mut num, mut den) = (Rational::one(), Rational::one());
                let mut unknown_on_top = false;
                for ((a, s), top) in c.edges() {
                    if (a, s) == (i, t) {
                        unknown_on_top = top;
                    } else if top {
                        num *= &bar[a][s];
                    } else {
                        den *= &bar[a][s];
                    }
                }
                // x·num = den or num = x·den
                let x = if unknown_on_top { &den / &num } else { &num / &den };
                forbidden.insert(v - x);
            }
            let slots = forbidden.len() + 1;
            let denom = int(slots as i64 + 1);
            let chosen = (1..=slots)
                .map(|k| &params.epsilon * int(k as i64) / &denom)
                .find(|e| !forbidden.contains(e))
                .expect("more grid points than forbidden values");
            bar[i][t] = v - &chosen;
            eps[i][t] = chosen;
        }
    }
    PerturbedInstance::new(inst.clone(), eps, params.clone())
}

/// A point of the simplex: non-negative entries summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(Vec<Rational>);

impl WeightVector {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Precondition("weight vector must be non-empty".into()));
        }
        if weights.iter().any(Signed::is_negative) {
            return Err(Error::Precondition("weights must be non-negative".into()));
        }
        if weights.iter().fold(Rational::zero(), |a, w| a + w) != Rational::one() {
            return Err(Error::Precondition("weights must sum to 1".into()));
        }
        Ok(WeightVector(weights))
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector(vec![Rational::one() / int(n as i64); n])
    }

    /// The simplex vertex `e_agent`.
    pub fn vertex(n: usize, agent: AgentId) -> Self {
        let mut w = vec![Rational::zero(); n];
        w[agent] = Rational::one();
        WeightVector(w)
    }

    pub fn weights(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Agents with strictly positive weight.
    pub fn support(&self) -> Vec<AgentId> {
        (0..self.0.len()).filter(|&i| self.0[i].is_positive()).collect()
    }
}

/// Bipartite graph between agents and tied items, with an edge `(i, t)`
/// whenever `i ∈ D(t)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieGraph {
    pub num_agents: usize,
    pub items: Vec<ItemId>,
    pub edges: Vec<(AgentId, ItemId)>,
}

impl TieGraph {
    /// Forest test by union–find over agent and item vertices.
    pub fn is_acyclic(&self) -> bool {
        let offset = self.num_agents;
        let mut parent: Vec<usize> = (0..offset + self.items.len()).collect();
        fn root(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, t) in &self.edges {
            let pos = self.items.iter().position(|&s| s == t).expect("edge item is a vertex");
            let (ra, rt) = (root(&mut parent, a), root(&mut parent, offset + pos));
            if ra == rt {
                return false;
            }
            parent[ra] = rt;
        }
        true
    }

    pub fn degree_of_item(&self, item: ItemId) -> usize {
        self.edges.iter().filter(|&&(_, t)| t == item).count()
    }
}

/// Demand sets `D(t, w)`, the tie set `R(w) = {t : |D(t, w)| ≥ 2}` and its
/// tie graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandProfile {
    pub demand: Vec<Vec<AgentId>>,
    pub ties: Vec<ItemId>,
    pub graph: TieGraph,
}

fn check_weights(pert: &PerturbedInstance, w: &WeightVector) -> Result<()> {
    if w.len() != pert.num_agents() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} agents",
            w.len(),
            pert.num_agents()
        )));
    }
    Ok(())
}

fn shifted(pert: &PerturbedInstance, w: &WeightVector, agent: AgentId, item: ItemId) -> Rational {
    (&w.weights()[agent] + &pert.params().eta) * pert.value(agent, item)
}

pub fn demand_sets(pert: &PerturbedInstance, w: &WeightVector) -> Result<DemandProfile> {
    check_weights(pert, w)?;
    let n = pert.num_agents();
    let demand: Vec<Vec<AgentId>> = (0..pert.num_items())
        .map(|t| {
            let scores: Vec<Rational> = (0..n).map(|i| shifted(pert, w, i, t)).collect();
            let best = scores.iter().max().expect("n >= 1");
            (0..n).filter(|&i| scores[i] == *best).collect()
        })
        .collect();
    let ties: Vec<ItemId> = (0..demand.len()).filter(|&t| demand[t].len() >= 2).collect();
    let edges = ties.iter().flat_map(|&t| demand[t].iter().map(move |&i| (i, t))).collect();
    let graph = TieGraph { num_agents: n, items: ties.clone(), edges };
    Ok(DemandProfile { demand, ties, graph })
}

/// Maximizer of shifted welfare: each item to the lowest-index agent of its
/// demand set.
pub fn max_weighted_welfare(pert: &PerturbedInstance, w: &WeightVector) -> Result<Allocation> {
    let profile = demand_sets(pert, w)?;
    Allocation::from_owners(pert.num_agents(), profile.demand.iter().map(|d| d[0]).collect())
}

/// `Σ_i (w_i + η) · v̄_i(A_i)`.
pub fn shifted_welfare(pert: &PerturbedInstance, w: &WeightVector, alloc: &Allocation) -> Result<Rational> {
    check_weights(pert, w)?;
    alloc.check_against(pert.base())?;
    Ok((0..pert.num_items()).fold(Rational::zero(), |acc, t| acc + shifted(pert, w, alloc.owner(t), t)))
}

/// Items split into per-agent interiors `I_i` (items `i` must win outright or
/// weakly) and tied items with their demand sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpPartition {
    pub interior: Vec<Vec<ItemId>>,
    pub ties: Vec<(ItemId, Vec<AgentId>)>,
}

impl LpPartition {
    fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.interior.len() != n {
            return Err(Error::DimensionMismatch(format!("{} interiors for {n} agents", self.interior.len())));
        }
        let mut seen = vec![false; m];
        let mut mark = |t: ItemId| -> Result<()> {
            if t >= m {
                return Err(Error::ItemOutOfRange { item: t, num_items: m });
            }
            if core::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidPartition(format!("item {t} appears twice")));
            }
            Ok(())
        };
        for &t in self.interior.iter().flatten() {
            mark(t)?;
        }
        for (t, d) in &self.ties {
            mark(*t)?;
            if d.is_empty() {
                return Err(Error::InvalidPartition(format!("empty demand set for item {t}")));
            }
            if let Some(&agent) = d.iter().find(|&&a| a >= n) {
                return Err(Error::AgentOutOfRange { agent, num_agents: n });
            }
        }
        if let Some(t) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("item {t} is not covered")));
        }
        Ok(())
    }
}

/// Exact feasibility of the weight system certifying that the induced
/// allocation maximizes shifted welfare.
///
/// For `t ∈ I_i`: `(w_i+η)v̄_i(t) ≥ (w_j+η)v̄_j(t)` for all `j ≠ i`. For a tied
/// item: equality across its demand set, and its lowest-index member weakly
/// beats every agent outside it. Plus `w ≥ 0`, `Σ w = 1`.
pub fn po_certificate_lp(pert: &PerturbedInstance, partition: &LpPartition) -> Result<Option<WeightVector>> {
    let n = pert.num_agents();
    partition.validate(n, pert.num_items())?;
    let eta = &pert.params().eta;
    let mut system = LinearSystem::new(n);
    system.add_eq(vec![Rational::one(); n], Rational::one());
    for i in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[i] = Rational::one();
        system.add_ge(e, Rational::zero());
    }
    // (w_a+η)v̄_a(t) - (w_b+η)v̄_b(t) as (coeffs, rhs) of `coeffs·w {≥,=} rhs`.
    let difference = |a: AgentId, b: AgentId, t: ItemId| {
        let mut c = vec![Rational::zero(); n];
        c[a] = pert.value(a, t).clone();
        c[b] = -pert.value(b, t);
        (c, eta * (pert.value(b, t) - pert.value(a, t)))
    };
    for (i, items) in partition.interior.iter().enumerate() {
        for &t in items {
            for j in (0..n).filter(|&j| j != i) {
                let (c, r) = difference(i, j, t);
                system.add_ge(c, r);
            }
        }
    }
    for (t, d) in &partition.ties {
        let mut members = d.clone();
        members.sort_unstable();
        members.dedup();
        for pair in members.windows(2) {
            let (c, r) = difference(pair[0], pair[1], *t);
            system.add_eq(c, r);
        }
        for j in (0..n).filter(|j| !members.contains(j)) {
            let (c, r) = difference(members[0], j, *t);
            system.add_ge(c, r);
        }
    }
    match system.solve() {
        Some(w) => Ok(Some(WeightVector::new(w)?)),
        None => Ok(None),
    }
}
