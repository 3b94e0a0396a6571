//! Central-cut ellipsoid method for minimizing a convex, possibly nonsmooth function over a
//! Euclidean ball `Q = {z : ‖z − c‖ ≤ r}`.
//!
//! The iteration is the textbook one: with `g` a subgradient of the objective when `y_k ∈ Q`
//! and of `‖z − c‖² − r²` otherwise,
//!
//! ```text
//! y_{k+1} = y_k − 1/(n+1) · H g / √(gᵀHg)
//! H_{k+1} = n²/(n²−1) · (H − 2/(n+1) · H g gᵀ H / gᵀHg)
//! ```
//!
//! starting from `H_0 = R² I`. For `n = 1` the update is undefined and a bisection on the
//! sign of the subgradient is used instead.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::Result;

/// A ball used as the localization set of the method.
#[derive(Clone, Debug)]
pub struct BallRegion {
    pub center: DVector<f64>,
    pub radius: f64,
}

impl BallRegion {
    fn contains(&self, z: &DVector<f64>) -> bool {
        (z - &self.center).norm() <= self.radius * (1.0 + 1e-12)
    }
}

/// Iterate of the method.
#[derive(Clone, Debug)]
pub struct EllipsoidState {
    pub y: DVector<f64>,
    pub h: DMatrix<f64>,
    pub k: usize,
    pub best_point: Option<DVector<f64>>,
    pub best_value: f64,
}

/// Per-iteration record, collected only when requested.
#[derive(Clone, Debug, Default)]
pub struct EllipsoidTrace {
    /// Best feasible value after each iteration (`+∞` until a feasible iterate is seen).
    pub best_values: Vec<f64>,
    /// Whether `H_k` admitted a Cholesky factorization after each iteration.
    pub h_positive_definite: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct EllipsoidRun {
    pub state: EllipsoidState,
    pub iterations: usize,
    /// True if the loop ended before the requested iteration count, either because a zero
    /// subgradient certified optimality or because `gᵀHg` degenerated.
    pub stopped_early: bool,
    pub trace: Option<EllipsoidTrace>,
}

/// Iteration count `⌈2(n+1)² ln(M R² / (ρ ε))⌉` after which the best feasible value is within
/// `ε` of the optimum, for an `M`-Lipschitz objective, a localization ball of radius `R` and an
/// inscribed ball of radius `ρ`.
pub fn iteration_bound(n: usize, lipschitz: f64, outer: f64, inner: f64, eps: f64) -> usize {
    let ratio = lipschitz * outer * outer / (inner * eps);
    if !(ratio > 1.0) {
        return 1;
    }
    let nf = (n + 1) as f64;
    (2.0 * nf * nf * ratio.ln()).ceil().max(1.0) as usize
}

/// Bisection steps needed in one dimension for the same guarantee.
pub fn bisection_bound(lipschitz: f64, radius: f64, eps: f64) -> usize {
    let ratio = lipschitz * 2.0 * radius / eps;
    if !(ratio > 1.0) {
        return 1;
    }
    ratio.log2().ceil() as usize + 1
}

/// Runs the method for at most `iterations` steps.
///
/// `oracle` returns the objective value and a subgradient at a point of `Q`; it is never
/// called outside `Q`.
pub fn minimize_over_ball<F>(
    region: &BallRegion,
    iterations: usize,
    record_trace: bool,
    mut oracle: F,
) -> Result<EllipsoidRun>
where
    F: FnMut(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    let n = region.center.len();
    if n == 1 {
        return bisect(region, iterations, record_trace, oracle);
    }

    let nf = n as f64;
    let mut state = EllipsoidState {
        y: region.center.clone(),
        h: DMatrix::identity(n, n) * (region.radius * region.radius),
        k: 0,
        best_point: None,
        best_value: f64::INFINITY,
    };
    let mut trace = record_trace.then(EllipsoidTrace::default);
    let mut stopped_early = false;

    while state.k < iterations {
        let g = if region.contains(&state.y) {
            let (value, g) = oracle(&state.y)?;
            if value < state.best_value {
                state.best_value = value;
                state.best_point = Some(state.y.clone());
            }
            if g.iter().all(|v| *v == 0.0) {
                stopped_early = true;
                break;
            }
            g
        } else {
            (&state.y - &region.center) * 2.0
        };

        let hg = &state.h * &g;
        let ghg = g.dot(&hg);
        if !(ghg > 0.0) || !ghg.is_finite() {
            stopped_early = true;
            break;
        }
        let step = &hg / ghg.sqrt();
        state.y -= step / (nf + 1.0);
        let mut h = &state.h - (&hg * hg.transpose()) * (2.0 / ((nf + 1.0) * ghg));
        h *= nf * nf / (nf * nf - 1.0);
        state.h = (&h + h.transpose()) * 0.5;
        state.k += 1;

        if let Some(t) = trace.as_mut() {
            t.best_values.push(state.best_value);
            t.h_positive_definite
                .push(Cholesky::new(state.h.clone()).is_some());
        }
    }

    // The last iterate has not been evaluated yet.
    if !stopped_early && region.contains(&state.y) {
        let (value, _) = oracle(&state.y)?;
        if value < state.best_value {
            state.best_value = value;
            state.best_point = Some(state.y.clone());
        }
    }

    Ok(EllipsoidRun {
        iterations: state.k,
        state,
        stopped_early,
        trace,
    })
}

fn bisect<F>(
    region: &BallRegion,
    iterations: usize,
    record_trace: bool,
    mut oracle: F,
) -> Result<EllipsoidRun>
where
    F: FnMut(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    let c = region.center[0];
    let (mut lo, mut hi) = (c - region.radius, c + region.radius);
    let mut best_value = f64::INFINITY;
    let mut best_point = None;
    let mut trace = record_trace.then(EllipsoidTrace::default);
    let mut k = 0;
    let mut stopped_early = false;

    while k < iterations {
        let mid = DVector::from_element(1, 0.5 * (lo + hi));
        let (value, g) = oracle(&mid)?;
        if value < best_value {
            best_value = value;
            best_point = Some(mid.clone());
        }
        k += 1;
        if let Some(t) = trace.as_mut() {
            t.best_values.push(best_value);
            t.h_positive_definite.push(true);
        }
        if g[0] > 0.0 {
            hi = mid[0];
        } else if g[0] < 0.0 {
            lo = mid[0];
        } else {
            stopped_early = true;
            break;
        }
    }

    let half = 0.5 * (hi - lo);
    Ok(EllipsoidRun {
        state: EllipsoidState {
            y: DVector::from_element(1, 0.5 * (lo + hi)),
            h: DMatrix::from_element(1, 1, half * half),
            k,
            best_point,
            best_value,
        },
        iterations: k,
        stopped_early,
        trace,
    })
}
