//! Exact-rational fair division of indivisible mixed manna.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. It provides
//!
//! * the domain model: [`Instance`], [`Allocation`], [`EnvyGraph`],
//!   [`EfrCertificate`] and the fairness predicates in [`model`];
//! * brute-force ground truth in [`oracles`] (EFR-k decision, Pareto
//!   optimality, Partition);
//! * the polynomial constructions in [`algorithms`] (EF1 via double
//!   round-robin, top-trading cycle resolution, the EFR-(n-1) certificate,
//!   the conflict-aware picking sequence for goods);
//! * perturbed weighted-welfare machinery in [`welfare`];
//! * the fixed-`n` EFR-(n-1) + PO search in [`fixed_n`].
//!
//! Agents and items are 0-based everywhere in this crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod algorithms;
mod error;
pub mod fixed_n;
pub mod lp;
pub mod model;
pub mod oracles;
mod scalar;
pub mod welfare;

pub use error::{Error, Result};
pub use model::{
    bundle_value, build_envy_graph, is_envy_free, is_ef1, is_envy_free_for, validate_certificate, Allocation, EfrCertificate,
    EnvyGraph, Instance,
};
pub use num_bigint::BigInt;
pub use welfare::{PerturbParams, PerturbedInstance, WeightVector};

/// Exact rational number; always normalized with a positive denominator.
pub type Rational = num_rational::BigRational;

/// 0-based agent index.
pub type AgentId = usize;
/// 0-based item index.
pub type ItemId = usize;

/// Builds a rational from an integer.
pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Builds the rational `num / den`. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Work limit for the exponential procedures, counted in candidate
/// evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_evaluations: u64,
}

impl Budget {
    pub const DEFAULT_EVALUATIONS: u64 = 100_000_000;

    pub const fn new(max_evaluations: u64) -> Self {
        Budget { max_evaluations }
    }

    pub const fn unlimited() -> Self {
        Budget { max_evaluations: u64::MAX }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(Self::DEFAULT_EVALUATIONS)
    }
}

/// Running counter against a [`Budget`].
#[derive(Debug)]
pub(crate) struct Meter {
    used: u64,
    limit: u64,
}

impl Meter {
    pub(crate) fn new(budget: Budget) -> Self {
        Meter { used: 0, limit: budget.max_evaluations }
    }

    #[inline]
    pub(crate) fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.limit {
            Err(Error::BudgetExceeded { limit: self.limit })
        } else {
            Ok(())
        }
    }
}
