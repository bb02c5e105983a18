//! Exact integer fast path for the enumeration oracles.
//!
//! Every comparison the oracles make involves a single agent's values, so
//! each valuation row may be scaled by its own positive denominator LCM
//! without changing any verdict.

use alloc::vec::Vec;
use core::ops::{AddAssign, SubAssign};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Instance, Rational};

pub(crate) trait Scalar:
    Clone + Ord + Zero + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self>
{
}

impl<T> Scalar for T where
    T: Clone + Ord + Zero + for<'a> AddAssign<&'a T> + for<'a> SubAssign<&'a T>
{
}

/// Sums of absolute values must stay below this bound for the `i128` path.
const HEADROOM_BITS: u64 = 100;

/// Rescales each agent's row to integers. Returns `None` if some row does
/// not fit in `i128` with headroom for bundle sums.
pub(crate) fn scaled_rows(inst: &Instance) -> Option<Vec<Vec<i128>>> {
    let mut rows = Vec::with_capacity(inst.num_agents());
    for agent in 0..inst.num_agents() {
        rows.push(scale_row(inst.row(agent))?);
    }
    Some(rows)
}

fn scale_row(row: &[Rational]) -> Option<Vec<i128>> {
    let mut lcm = BigInt::one();
    for v in row {
        lcm = lcm.lcm(v.denom());
    }
    let mut total = BigInt::zero();
    let mut out = Vec::with_capacity(row.len());
    for v in row {
        let scaled = v.numer() * (&lcm / v.denom());
        total += scaled.abs();
        out.push(scaled);
    }
    if total.bits() >= HEADROOM_BITS {
        return None;
    }
    out.iter().map(|x| x.to_i128()).collect()
}
