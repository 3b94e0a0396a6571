//! Reduction from integer partition to a ball-intersection instance.
//!
//! For `a ∈ ℤⁿ` the instance `P0` maximizes `xᵀx` subject to
//!
//! ```text
//! xᵀx ± xᵢ ≤ 1 + n   (i = 1..n),     xᵀx ± aᵀx ≤ n,
//! ```
//!
//! whose optimal value is `n` exactly when some `x ∈ {−1, 1}ⁿ` has `aᵀx = 0`. Completing the
//! squares gives the balls `‖x ± eᵢ/2‖² ≤ n + 5/4` and `‖x ± a/2‖² ≤ n + ‖a‖²/4`, a set
//! symmetric about the origin, so the Chebyshev center is `0`.

use nalgebra::DVector;
use serde::Serialize;

use crate::ccb;
use crate::error::{Error, Result};
use crate::problem::{CcbInstance, UqConstraint, UqInstance};
use crate::uq;

/// Largest `n` accepted by [`partition_bruteforce`].
pub const MAX_BRUTEFORCE_DIM: usize = 30;

/// Absolute tolerance for `v(P0) = n`.
pub const VALUE_TOL: f64 = 1e-6;

/// Builds the quadratic and the ball form of `P0` for `a`.
pub fn reduce_to_p0(a: &[i64]) -> Result<(UqInstance, CcbInstance)> {
    let n = a.len();
    if n == 0 {
        return Err(Error::InvalidInstance("partition input must be nonempty".into()));
    }
    let nf = n as f64;
    // Adding 0.0 turns −0 into +0, keeping written instance files free of negative zeros.
    let half = |s: f64| DVector::from_iterator(n, a.iter().map(move |&v| s * v as f64 / 2.0 + 0.0));
    let mut constraints = Vec::with_capacity(2 * n + 2);
    for i in 0..n {
        let e = |s: f64| DVector::from_fn(n, |k, _| if k == i { s / 2.0 } else { 0.0 });
        // xᵀx + xᵢ ≤ 1 + n, then xᵀx − xᵢ ≤ 1 + n.
        constraints.push(UqConstraint {
            a: e(-1.0),
            b: -(1.0 + nf),
        });
        constraints.push(UqConstraint { a: e(1.0), b: -(1.0 + nf) });
    }
    constraints.push(UqConstraint {
        a: half(1.0),
        b: -nf,
    });
    constraints.push(UqConstraint {
        a: half(-1.0),
        b: -nf,
    });
    let uq = UqInstance::new(DVector::zeros(n), constraints)?;
    let balls = uq.to_balls()?;
    Ok((uq, balls))
}

/// First `x ∈ {−1, 1}ⁿ` with `aᵀx = 0` in lexicographic order with `+1` before `−1`.
pub fn partition_bruteforce(a: &[i64]) -> Result<Option<Vec<i8>>> {
    let n = a.len();
    if n > MAX_BRUTEFORCE_DIM {
        return Err(Error::BudgetExceeded {
            required: 1u128 << n.min(127),
            budget: 1u128 << MAX_BRUTEFORCE_DIM,
        });
    }
    for mask in 0u64..(1u64 << n) {
        // Bit n−1−i of the mask set means xᵢ = −1, so counting up is lexicographic.
        let sum: i128 = a
            .iter()
            .enumerate()
            .map(|(i, &v)| if mask >> (n - 1 - i) & 1 == 1 { -(v as i128) } else { v as i128 })
            .sum();
        if sum == 0 {
            return Ok(Some(
                (0..n)
                    .map(|i| if mask >> (n - 1 - i) & 1 == 1 { -1 } else { 1 })
                    .collect(),
            ));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub n: usize,
    pub v_p0: f64,
    pub partition: Option<Vec<i8>>,
    /// `|v(P0) − n| ≤ 1e−6`.
    pub value_equals_n: bool,
    /// `value_equals_n` agrees with the existence of a partition.
    pub consistent: bool,
    /// Norm of the ellipsoid-method Chebyshev center, expected to vanish by symmetry.
    pub center_norm: f64,
    pub center_eps: f64,
}

/// Compares the optimal value of `P0` with a brute-force partition search, and checks that
/// the ellipsoid method centers the symmetric instance at the origin.
pub fn check_lemma_cp(a: &[i64], center_eps: f64) -> Result<LemmaReport> {
    let n = a.len();
    let (uq, balls) = reduce_to_p0(a)?;
    let v_p0 = uq::solve_exact(&uq)?.value;
    let partition = partition_bruteforce(a)?;
    let value_equals_n = (v_p0 - n as f64).abs() <= VALUE_TOL;
    let center = match ccb::solve_ccb_ellipsoid(&balls, center_eps, usize::MAX) {
        Ok(sol) => sol.center,
        Err(Error::IterationLimit { best: Some(best), .. }) => best.center,
        Err(e) => return Err(e),
    };
    Ok(LemmaReport {
        n,
        v_p0,
        consistent: value_equals_n == partition.is_some(),
        partition,
        value_equals_n,
        center_norm: center.norm(),
        center_eps,
    })
}
