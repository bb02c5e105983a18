//! Solver dispatch shared by the CLI and the tests.

use efr_core::algorithms::{conflict_aware_picking, conflict_aware_picking_extended, double_round_robin_ef1, efr_n_minus_1};
use efr_core::fixed_n::{search_efr_po, SearchLimits};
use efr_core::Instance;

use crate::format::Solution;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Double round-robin; EF1 only, no certificate.
    Ef1,
    /// EF1 allocation plus a reallocation set of at most `n - 1` items.
    Efr,
    /// Conflict-aware picking for goods, at most `n / 2` reallocated items.
    Goods,
    /// Exhaustive EFR and Pareto-optimal search for few agents.
    FixedN,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ef1 => "ef1",
            Algorithm::Efr => "efr",
            Algorithm::Goods => "goods",
            Algorithm::FixedN => "fixed-n",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// For [`Algorithm::Goods`]: finish the partial allocation by round-robin.
    pub extend_round_robin: bool,
    /// For [`Algorithm::FixedN`]: candidate cap.
    pub max_candidates: Option<u64>,
}

pub fn solve(inst: &Instance, algorithm: Algorithm, options: SolveOptions) -> Result<Solution, HarnessError> {
    let (base, certificate, weights) = match algorithm {
        Algorithm::Ef1 => (double_round_robin_ef1(inst), None, None),
        Algorithm::Efr => {
            let cert = efr_n_minus_1(inst)?;
            (cert.base.clone(), Some(cert), None)
        }
        Algorithm::Goods => {
            let cert = if options.extend_round_robin {
                conflict_aware_picking_extended(inst)?
            } else {
                conflict_aware_picking(inst)?.certificate
            };
            (cert.base.clone(), Some(cert), None)
        }
        Algorithm::FixedN => {
            let mut limits = SearchLimits::default();
            if let Some(cap) = options.max_candidates {
                limits.max_candidates = cap;
            }
            let sol = search_efr_po(inst, limits)?;
            (sol.allocation, Some(sol.certificate), Some(sol.weights))
        }
    };
    Ok(Solution { algorithm: algorithm.name().into(), base, certificate, weights })
}
