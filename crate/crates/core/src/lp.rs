//! Exact feasibility of small linear systems over the rationals.
//!
//! Equalities are solved by Gaussian elimination and substituted away; the
//! remaining `≥` constraints are projected by Fourier–Motzkin elimination.
//! A feasible point is rebuilt by back-substitution. This is exponential in
//! the worst case and meant for a handful of variables.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::Rational;

/// `coeffs · x ≥ rhs` (or `=` for equality rows).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Row {
    coeffs: Vec<Rational>,
    rhs: Rational,
}

impl Row {
    fn eval(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().zip(x).fold(Rational::zero(), |acc, (a, v)| acc + a * v)
    }

    /// Scales so the first nonzero coefficient has absolute value one.
    fn normalized(mut self) -> Row {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()).map(Rational::abs) {
            for c in &mut self.coeffs {
                *c /= &lead;
            }
            self.rhs /= &lead;
        }
        self
    }
}

/// A conjunction of linear equalities and non-strict inequalities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearSystem {
    num_vars: usize,
    ge: Vec<Row>,
    eq: Vec<Row>,
}

impl LinearSystem {
    pub fn new(num_vars: usize) -> Self {
        LinearSystem { num_vars, ge: Vec::new(), eq: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Adds `coeffs · x ≥ rhs`.
    pub fn add_ge(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.ge.push(Row { coeffs, rhs });
    }

    /// Adds `coeffs · x ≤ rhs`.
    pub fn add_le(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        self.add_ge(coeffs.into_iter().map(|c| -c).collect(), -rhs);
    }

    /// Adds `coeffs · x = rhs`.
    pub fn add_eq(&mut self, coeffs: Vec<Rational>, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.eq.push(Row { coeffs, rhs });
    }

    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars
            && self.ge.iter().all(|r| r.eval(x) >= r.rhs)
            && self.eq.iter().all(|r| r.eval(x) == r.rhs)
    }

    /// A feasible point, or `None` if the system is infeasible.
    pub fn solve(&self) -> Option<Vec<Rational>> {
        let n = self.num_vars;
        let (pivots, free) = self.reduce_equalities()?;

        // Express each constraint over the free variables only.
        let free_index: Vec<Option<usize>> = {
            let mut idx = vec![None; n];
            for (k, &f) in free.iter().enumerate() {
                idx[f] = Some(k);
            }
            idx
        };
        let mut rows: Vec<Row> = self
            .ge
            .iter()
            .map(|r| {
                let mut coeffs = vec![Rational::zero(); free.len()];
                let mut rhs = r.rhs.clone();
                for (v, a) in r.coeffs.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    match free_index[v] {
                        Some(k) => coeffs[k] += a,
                        None => {
                            let p = pivots.iter().find(|p| p.var == v).expect("pivot variable");
                            rhs -= a * &p.constant;
                            for (k, c) in p.free_coeffs.iter().enumerate() {
                                coeffs[k] -= a * c;
                            }
                        }
                    }
                }
                Row { coeffs, rhs }
            })
            .collect();

        let mut stages: Vec<Vec<Row>> = Vec::with_capacity(free.len());
        for k in 0..free.len() {
            rows = prune(rows)?;
            let (involved, rest): (Vec<Row>, Vec<Row>) = rows.into_iter().partition(|r| !r.coeffs[k].is_zero());
            let (pos, neg): (Vec<&Row>, Vec<&Row>) = involved.iter().partition(|r| r.coeffs[k].is_positive());
            let mut next = rest;
            for p in &pos {
                for q in &neg {
                    let sp = Rational::one() / &p.coeffs[k];
                    let sq = Rational::one() / -&q.coeffs[k];
                    let coeffs = p.coeffs.iter().zip(&q.coeffs).map(|(a, b)| a * &sp + b * &sq).collect();
                    next.push(Row { coeffs, rhs: &p.rhs * &sp + &q.rhs * &sq });
                }
            }
            stages.push(involved);
            rows = next;
        }
        prune(rows)?;

        let mut point = vec![Rational::zero(); free.len()];
        for k in (0..free.len()).rev() {
            let mut lower: Option<Rational> = None;
            let mut upper: Option<Rational> = None;
            for r in &stages[k] {
                let others = r
                    .coeffs
                    .iter()
                    .zip(&point)
                    .enumerate()
                    .filter(|(v, _)| *v != k)
                    .fold(Rational::zero(), |acc, (_, (a, x))| acc + a * x);
                let bound = (&r.rhs - others) / &r.coeffs[k];
                if r.coeffs[k].is_positive() {
                    if lower.as_ref().is_none_or(|l| bound > *l) {
                        lower = Some(bound);
                    }
                } else if upper.as_ref().is_none_or(|u| bound < *u) {
                    upper = Some(bound);
                }
            }
            point[k] = match (lower, upper) {
                (Some(l), Some(u)) => (l + u) / Rational::from_integer(2.into()),
                (Some(l), None) => l,
                (None, Some(u)) => u,
                (None, None) => Rational::zero(),
            };
        }

        let mut x = vec![Rational::zero(); n];
        for (k, &f) in free.iter().enumerate() {
            x[f] = point[k].clone();
        }
        for p in &pivots {
            x[p.var] = p.free_coeffs.iter().zip(&point).fold(p.constant.clone(), |acc, (c, v)| acc - c * v);
        }
        debug_assert!(self.is_satisfied_by(&x));
        Some(x)
    }

    /// Row-reduces the equalities. Returns pivot expressions and the free
    /// variables, or `None` if the equalities are inconsistent.
    fn reduce_equalities(&self) -> Option<(Vec<Pivot>, Vec<usize>)> {
        let n = self.num_vars;
        let mut m: Vec<Row> = self.eq.clone();
        let mut pivot_cols = Vec::new();
        let mut r = 0;
        for col in 0..n {
            let Some(sel) = (r..m.len()).find(|&i| !m[i].coeffs[col].is_zero()) else { continue };
            m.swap(r, sel);
            let lead = m[r].coeffs[col].clone();
            for c in &mut m[r].coeffs {
                *c /= &lead;
            }
            m[r].rhs /= &lead;
            let pivot_row = m[r].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i == r || row.coeffs[col].is_zero() {
                    continue;
                }
                let f = row.coeffs[col].clone();
                for (c, pc) in row.coeffs.iter_mut().zip(&pivot_row.coeffs) {
                    *c -= &f * pc;
                }
                row.rhs -= &f * &pivot_row.rhs;
            }
            pivot_cols.push(col);
            r += 1;
        }
        if m[r..].iter().any(|row| !row.rhs.is_zero()) {
            return None;
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
        let pivots = pivot_cols
            .iter()
            .enumerate()
            .map(|(i, &var)| Pivot {
                var,
                constant: m[i].rhs.clone(),
                free_coeffs: free.iter().map(|&f| m[i].coeffs[f].clone()).collect(),
            })
            .collect();
        Some((pivots, free))
    }
}

/// `x_var = constant - Σ free_coeffs[k] · x_free[k]`.
#[derive(Debug)]
struct Pivot {
    var: usize,
    constant: Rational,
    free_coeffs: Vec<Rational>,
}

/// Normalizes and deduplicates rows, dropping trivially true ones. `None`
/// on a constant row `0 ≥ b` with `b > 0`.
fn prune(rows: Vec<Row>) -> Option<Vec<Row>> {
    let mut out = BTreeSet::new();
    for row in rows {
        if row.coeffs.iter().all(Zero::is_zero) {
            if row.rhs.is_positive() {
                return None;
            }
            continue;
        }
        out.insert(row.normalized());
    }
    Some(out.into_iter().collect())
}
