//! Instances, allocations, envy graphs and the fairness predicates.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::{int, AgentId, Error, ItemId, Rational, Result};

/// `n` agents, `m` items and an exact `n × m` valuation matrix.
///
/// Values may have any sign. Entry `(i, t)` is agent `i`'s value for item `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    num_items: usize,
    values: Vec<Vec<Rational>>,
}

impl Instance {
    pub fn new(num_agents: usize, num_items: usize, values: Vec<Vec<Rational>>) -> Result<Self> {
        if num_agents == 0 {
            return Err(Error::Precondition("an instance needs at least one agent".into()));
        }
        if values.len() != num_agents {
            return Err(Error::DimensionMismatch(format!(
                "expected {num_agents} valuation rows, got {}",
                values.len()
            )));
        }
        for (agent, row) in values.iter().enumerate() {
            if row.len() != num_items {
                return Err(Error::DimensionMismatch(format!(
                    "row {agent} has {} entries, expected {num_items}",
                    row.len()
                )));
            }
        }
        Ok(Instance { num_items, values })
    }

    /// Builds an instance from non-empty rows of equal length.
    pub fn from_rows(values: Vec<Vec<Rational>>) -> Result<Self> {
        let m = values.first().map_or(0, Vec::len);
        Self::new(values.len(), m, values)
    }

    pub fn from_integers<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&v| int(v)).collect())
                .collect(),
        )
    }

    pub fn num_agents(&self) -> usize {
        self.values.len()
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Value of `item` for `agent`. Panics on out-of-range indices.
    pub fn value(&self, agent: AgentId, item: ItemId) -> &Rational {
        &self.values[agent][item]
    }

    pub fn row(&self, agent: AgentId) -> &[Rational] {
        &self.values[agent]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.values
    }

    pub fn is_integral(&self) -> bool {
        self.values.iter().flatten().all(Rational::is_integer)
    }

    pub fn is_goods_only(&self) -> bool {
        self.values.iter().flatten().all(|v| !v.is_negative())
    }

    pub fn check_agent(&self, agent: AgentId) -> Result<()> {
        if agent < self.num_agents() {
            Ok(())
        } else {
            Err(Error::AgentOutOfRange { agent, num_agents: self.num_agents() })
        }
    }

    pub fn check_item(&self, item: ItemId) -> Result<()> {
        if item < self.num_items {
            Ok(())
        } else {
            Err(Error::ItemOutOfRange { item, num_items: self.num_items })
        }
    }
}

/// Additive value `v_agent(bundle)`.
pub fn bundle_value(inst: &Instance, agent: AgentId, bundle: &[ItemId]) -> Result<Rational> {
    inst.check_agent(agent)?;
    for &t in bundle {
        inst.check_item(t)?;
    }
    Ok(sum_values(inst, agent, bundle))
}

pub(crate) fn sum_values(inst: &Instance, agent: AgentId, bundle: &[ItemId]) -> Rational {
    let row = inst.row(agent);
    bundle.iter().fold(Rational::zero(), |acc, &t| acc + &row[t])
}

/// An `n`-partition of the items, stored as the owner of every item so that
/// disjointness and coverage hold by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    num_agents: usize,
    owners: Vec<AgentId>,
}

impl Allocation {
    pub fn from_owners(num_agents: usize, owners: Vec<AgentId>) -> Result<Self> {
        if num_agents == 0 {
            return Err(Error::InvalidPartition("an allocation needs at least one agent".into()));
        }
        if let Some(&agent) = owners.iter().find(|&&a| a >= num_agents) {
            return Err(Error::AgentOutOfRange { agent, num_agents });
        }
        Ok(Allocation { num_agents, owners })
    }

    /// Validates that `bundles` is an `n`-partition of `0..num_items`.
    pub fn from_bundles(num_items: usize, bundles: &[Vec<ItemId>]) -> Result<Self> {
        let num_agents = bundles.len();
        if num_agents == 0 {
            return Err(Error::InvalidPartition("an allocation needs at least one agent".into()));
        }
        let mut owners = vec![usize::MAX; num_items];
        for (agent, bundle) in bundles.iter().enumerate() {
            for &t in bundle {
                if t >= num_items {
                    return Err(Error::ItemOutOfRange { item: t, num_items });
                }
                if owners[t] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "item {t} is held by agents {} and {agent}",
                        owners[t]
                    )));
                }
                owners[t] = agent;
            }
        }
        if let Some(t) = owners.iter().position(|&a| a == usize::MAX) {
            return Err(Error::InvalidPartition(format!("item {t} is not allocated")));
        }
        Ok(Allocation { num_agents, owners })
    }

    /// Everything to one agent.
    pub fn grand_bundle(num_agents: usize, num_items: usize, agent: AgentId) -> Result<Self> {
        Self::from_owners(num_agents, vec![agent; num_items])
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_items(&self) -> usize {
        self.owners.len()
    }

    pub fn owner(&self, item: ItemId) -> AgentId {
        self.owners[item]
    }

    pub fn owners(&self) -> &[AgentId] {
        &self.owners
    }

    /// Items held by `agent`, ascending.
    pub fn bundle(&self, agent: AgentId) -> Vec<ItemId> {
        (0..self.owners.len()).filter(|&t| self.owners[t] == agent).collect()
    }

    pub fn bundles(&self) -> Vec<Vec<ItemId>> {
        let mut out = vec![Vec::new(); self.num_agents];
        for (t, &a) in self.owners.iter().enumerate() {
            out[a].push(t);
        }
        out
    }

    /// Copy with `item` reassigned to `agent`.
    pub fn with_item_moved(&self, item: ItemId, agent: AgentId) -> Allocation {
        let mut next = self.clone();
        next.owners[item] = agent;
        next
    }

    pub fn check_against(&self, inst: &Instance) -> Result<()> {
        if self.num_agents != inst.num_agents() || self.owners.len() != inst.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "allocation is {}×{}, instance is {}×{}",
                self.num_agents,
                self.owners.len(),
                inst.num_agents(),
                inst.num_items()
            )));
        }
        Ok(())
    }

    /// Every allocation of `num_items` items to `num_agents` agents, in
    /// lexicographic order of the owner vector (item 0 most significant).
    pub fn enumerate(num_agents: usize, num_items: usize) -> AllAllocations {
        AllAllocations { num_agents, next: Some(vec![0; num_items]) }
    }
}

/// Iterator returned by [`Allocation::enumerate`].
#[derive(Debug, Clone)]
pub struct AllAllocations {
    num_agents: usize,
    next: Option<Vec<AgentId>>,
}

impl Iterator for AllAllocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.num_agents == 0 {
            return None;
        }
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = succ.len();
        let mut carried = true;
        while carried && pos > 0 {
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] == self.num_agents {
                succ[pos] = 0;
            } else {
                carried = false;
            }
        }
        if !carried {
            self.next = Some(succ);
        }
        Some(Allocation { num_agents: self.num_agents, owners: current })
    }
}

/// Values `v_agent(B)` of every bundle in `bundles`.
pub(crate) fn bundle_values_for(inst: &Instance, agent: AgentId, bundles: &[Vec<ItemId>]) -> Vec<Rational> {
    bundles.iter().map(|b| sum_values(inst, agent, b)).collect()
}

/// Directed strict-envy relation of an allocation: `(i, j)` iff agent `i`
/// values `j`'s bundle strictly above its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyGraph {
    adjacency: Vec<Vec<bool>>,
}

impl EnvyGraph {
    pub fn build(inst: &Instance, alloc: &Allocation) -> Result<Self> {
        alloc.check_against(inst)?;
        Ok(Self::from_bundles(inst, &alloc.bundles()))
    }

    /// Envy graph of a possibly partial allocation (bundles need not cover
    /// every item). Item indices must be in range.
    pub fn from_bundles(inst: &Instance, bundles: &[Vec<ItemId>]) -> Self {
        let n = bundles.len();
        let mut adjacency = vec![vec![false; n]; n];
        for (i, row) in adjacency.iter_mut().enumerate() {
            let vals = bundle_values_for(inst, i, bundles);
            for j in 0..n {
                row[j] = j != i && vals[i] < vals[j];
            }
        }
        EnvyGraph { adjacency }
    }

    pub fn num_agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn has_edge(&self, from: AgentId, to: AgentId) -> bool {
        self.adjacency[from][to]
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, row)| {
            row.iter().enumerate().filter(|(_, &e)| e).map(move |(j, _)| (i, j))
        })
    }

    pub fn is_empty(&self) -> bool {
        self.edges().next().is_none()
    }

    /// Agents with no outgoing edge, i.e. envy-free agents.
    pub fn sinks(&self) -> Vec<AgentId> {
        (0..self.num_agents())
            .filter(|&i| !self.adjacency[i].iter().any(|&e| e))
            .collect()
    }

    /// An order in which every envier precedes everyone it envies, choosing
    /// the lowest available index at each step. `None` if there is a cycle.
    pub fn topological_order(&self) -> Option<Vec<AgentId>> {
        let n = self.num_agents();
        let mut indegree: Vec<usize> = (0..n)
            .map(|j| (0..n).filter(|&i| self.adjacency[i][j]).count())
            .collect();
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let next = (0..n).find(|&i| !placed[i] && indegree[i] == 0)?;
            placed[next] = true;
            order.push(next);
            for j in 0..n {
                if self.adjacency[next][j] {
                    indegree[j] -= 1;
                }
            }
        }
        Some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }
}

pub(crate) fn envy_free_for_bundles(inst: &Instance, bundles: &[Vec<ItemId>], agent: AgentId) -> bool {
    let vals = bundle_values_for(inst, agent, bundles);
    vals.iter().all(|v| *v <= vals[agent])
}

/// EF1 of `agent` against every other bundle, on a possibly partial allocation.
pub(crate) fn ef1_for_bundles(inst: &Instance, bundles: &[Vec<ItemId>], agent: AgentId) -> bool {
    let row = inst.row(agent);
    let own = sum_values(inst, agent, &bundles[agent]);
    let worst_own_chore = bundles[agent].iter().map(|&t| &row[t]).filter(|v| v.is_negative()).min();
    bundles.iter().enumerate().all(|(j, other)| {
        if j == agent {
            return true;
        }
        let envy = sum_values(inst, agent, other) - &own;
        if !envy.is_positive() {
            return true;
        }
        // Dropping a chore of our own or a good of theirs closes the gap.
        let drop_own = worst_own_chore.is_some_and(|c| -c >= envy);
        let drop_theirs = other.iter().any(|&t| row[t] >= envy);
        drop_own || drop_theirs
    })
}

/// `agent` values its own bundle at least as much as everyone else's.
pub fn is_envy_free_for(inst: &Instance, alloc: &Allocation, agent: AgentId) -> Result<bool> {
    alloc.check_against(inst)?;
    inst.check_agent(agent)?;
    Ok(envy_free_for_bundles(inst, &alloc.bundles(), agent))
}

pub fn is_envy_free(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    Ok(EnvyGraph::build(inst, alloc)?.is_empty())
}

/// Envy-freeness up to one item for mixed manna: every envy `i → j` vanishes
/// after removing one item from `A_i ∪ A_j`.
pub fn is_ef1(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    alloc.check_against(inst)?;
    let bundles = alloc.bundles();
    Ok((0..inst.num_agents()).all(|i| ef1_for_bundles(inst, &bundles, i)))
}

/// Alias of [`EnvyGraph::build`].
pub fn build_envy_graph(inst: &Instance, alloc: &Allocation) -> Result<EnvyGraph> {
    EnvyGraph::build(inst, alloc)
}

/// A reallocation set `R` together with one witness per agent. Witness `i`
/// must agree with `base` outside `R` and be envy-free for `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfrCertificate {
    pub base: Allocation,
    pub realloc_set: BTreeSet<ItemId>,
    pub witnesses: Vec<Allocation>,
}

impl EfrCertificate {
    /// The parameter `k = |R|` this certificate establishes.
    pub fn k(&self) -> usize {
        self.realloc_set.len()
    }

    /// Envy-free base: `R = ∅` and every witness equals the base.
    pub fn trivial(base: Allocation) -> Self {
        let witnesses = vec![base.clone(); base.num_agents()];
        EfrCertificate { base, realloc_set: BTreeSet::new(), witnesses }
    }
}

/// Checks both certificate invariants. A `true` result means the base is
/// EFR-`|R|`.
pub fn validate_certificate(inst: &Instance, cert: &EfrCertificate) -> Result<bool> {
    cert.base.check_against(inst)?;
    for &t in &cert.realloc_set {
        inst.check_item(t)?;
    }
    if cert.witnesses.len() < inst.num_agents() {
        return Err(Error::IncompleteCertificate { agent: cert.witnesses.len() });
    }
    if cert.witnesses.len() > inst.num_agents() {
        return Err(Error::DimensionMismatch(format!(
            "{} witnesses for {} agents",
            cert.witnesses.len(),
            inst.num_agents()
        )));
    }
    for (agent, witness) in cert.witnesses.iter().enumerate() {
        witness.check_against(inst)?;
        let agrees = (0..inst.num_items())
            .all(|t| cert.realloc_set.contains(&t) || witness.owner(t) == cert.base.owner(t));
        if !agrees || !envy_free_for_bundles(inst, &witness.bundles(), agent) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `|v|` helper used by the pickers.
pub(crate) fn abs(v: &Rational) -> Rational {
    v.abs()
}
