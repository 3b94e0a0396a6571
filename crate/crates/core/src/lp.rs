//! Dense two-phase simplex and the linear relaxation of a [`UqInstance`].
//!
//! Replacing `xᵀx` by a free scalar `y` turns the inner maximization into
//!
//! ```text
//! max  y − 2a₀ᵀx   s.t.  y − 2aᵢᵀx + bᵢ ≤ 0,  i = 1..p
//! ```
//!
//! whose dual lives on the unit simplex:
//!
//! ```text
//! min  −Σ bᵢλᵢ   s.t.  Σ λᵢaᵢ = a₀,  Σ λᵢ = 1,  λ ≥ 0.
//! ```
//!
//! The relaxation is finite exactly when `a₀ ∈ conv{a₁, …, a_p}`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::UqInstance;

const PIVOT_TOL: f64 = 1e-10;
const OPT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarBound {
    Free,
    NonNegative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// `max cᵀx` subject to linear rows and per-variable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub bounds: Vec<VarBound>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, bounds: Vec<VarBound>) -> Self {
        assert_eq!(objective.len(), bounds.len(), "one bound per variable");
        Self {
            objective,
            rows: Vec::new(),
            bounds,
        }
    }

    pub fn with_row(mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> Self {
        self.add_row(coeffs, sense, rhs);
        self
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) {
        assert_eq!(coeffs.len(), self.objective.len(), "row length must match variable count");
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of the rows and bounds at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let viol = match row.sense {
                RowSense::Le => lhs - row.rhs,
                RowSense::Ge => row.rhs - lhs,
                RowSense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (b, v) in self.bounds.iter().zip(x) {
            if *b == VarBound::NonNegative {
                worst = worst.max(-v);
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Result of [`simplex`].
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal vertex, or the feasible point a ray starts from when unbounded. Empty when
    /// infeasible.
    pub x: Vec<f64>,
    /// `cᵀx`; `+∞` when unbounded, `−∞` when infeasible.
    pub value: f64,
    /// One multiplier per row, sign convention of `min bᵀy` over the dual cone: `≤` rows give
    /// `y ≥ 0`, `≥` rows give `y ≤ 0`.
    pub duals: Vec<f64>,
    /// Improving direction with `cᵀd > 0` that keeps every row satisfied, when unbounded.
    pub ray: Option<Vec<f64>>,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn eligible_pivot(&self, r: usize, c: usize) -> bool {
        let row = &self.rows[r];
        let row_max = row[..self.ncols].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        row[c] > PIVOT_TOL * row_max.max(f64::MIN_POSITIVE)
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (dj, v) in d.iter_mut().zip(row) {
                    *dj -= cb * v;
                }
            }
        }
        d
    }

    /// Bland's rule: first improving column, then the minimum-ratio row with the smallest
    /// basic index among ties. Returns `Err(col)` when `col` is an unbounded direction.
    fn optimize(
        &mut self,
        cost: &[f64],
        allowed: &[bool],
        budget: usize,
    ) -> Result<std::result::Result<(), usize>> {
        let scale = 1.0 + cost.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        loop {
            if self.pivots > budget {
                return Err(Error::NumericalFailure(format!(
                    "simplex exceeded pivot budget of {budget}"
                )));
            }
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..self.ncols).find(|&j| allowed[j] && d[j] > OPT_TOL * scale) else {
                return Ok(Ok(()));
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                if !self.eligible_pivot(r, enter) {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / self.rows[r][enter];
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Ok(Err(enter)),
            }
        }
    }
}

/// Solves `problem` with a dense two-phase tableau simplex.
///
/// Free variables are split into a difference of two nonnegative columns, so the reported
/// point is a basic solution: a vertex when the feasible set has one, and otherwise the
/// basic point with every free part at zero.
pub fn simplex(problem: &LpProblem) -> Result<LpSolution> {
    let nvars = problem.num_vars();
    if problem.objective.iter().any(|v| !v.is_finite())
        || problem
            .rows
            .iter()
            .any(|r| !r.rhs.is_finite() || r.coeffs.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::InvalidInstance("LP data must be finite".into()));
    }

    // Column map: each variable gets a positive part, free ones also a negative part.
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(nvars);
    let mut ncols = 0;
    for b in &problem.bounds {
        match b {
            VarBound::NonNegative => {
                var_cols.push((ncols, None));
                ncols += 1;
            }
            VarBound::Free => {
                var_cols.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
    }
    let nstruct = ncols;

    // Normalize to nonnegative right-hand sides.
    let m = problem.rows.len();
    let mut flips = vec![1.0; m];
    let mut senses = Vec::with_capacity(m);
    for (i, row) in problem.rows.iter().enumerate() {
        let mut sense = row.sense;
        if row.rhs < 0.0 {
            flips[i] = -1.0;
            sense = match sense {
                RowSense::Le => RowSense::Ge,
                RowSense::Ge => RowSense::Le,
                RowSense::Eq => RowSense::Eq,
            };
        }
        senses.push(sense);
    }
    let mut slack_col = vec![None; m];
    for (i, s) in senses.iter().enumerate() {
        if *s != RowSense::Eq {
            slack_col[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut identity_col = vec![0; m];
    let mut is_artificial = vec![false; 0];
    is_artificial.resize(ncols, false);
    for (i, s) in senses.iter().enumerate() {
        if *s == RowSense::Le {
            identity_col[i] = slack_col[i].unwrap();
        } else {
            identity_col[i] = ncols;
            ncols += 1;
            is_artificial.push(true);
        }
    }

    let mut rows = vec![vec![0.0; ncols + 1]; m];
    for (i, row) in problem.rows.iter().enumerate() {
        let f = flips[i];
        for (j, a) in row.coeffs.iter().enumerate() {
            let (pos, neg) = var_cols[j];
            rows[i][pos] = f * a;
            if let Some(neg) = neg {
                rows[i][neg] = -f * a;
            }
        }
        match senses[i] {
            RowSense::Le => rows[i][slack_col[i].unwrap()] = 1.0,
            RowSense::Ge => {
                rows[i][slack_col[i].unwrap()] = -1.0;
                rows[i][identity_col[i]] = 1.0;
            }
            RowSense::Eq => rows[i][identity_col[i]] = 1.0,
        }
        rows[i][ncols] = f * row.rhs;
    }

    let mut tab = Tableau {
        rows,
        basis: identity_col.clone(),
        ncols,
        pivots: 0,
    };
    let budget = 50 * (m + ncols) + 1000;

    // Phase 1: maximize −Σ artificials.
    if is_artificial.iter().any(|a| *a) {
        let cost: Vec<f64> = is_artificial.iter().map(|a| if *a { -1.0 } else { 0.0 }).collect();
        let allowed = vec![true; ncols];
        tab.optimize(&cost, &allowed, budget)?
            .map_err(|_| Error::NumericalFailure("phase one reported unboundedness".into()))?;
        let infeasibility: f64 = (0..m)
            .filter(|&r| is_artificial[tab.basis[r]])
            .map(|r| tab.rhs(r))
            .sum();
        let bscale = 1.0 + problem.rows.iter().fold(0.0f64, |s, r| s.max(r.rhs.abs()));
        if infeasibility > FEAS_TOL * bscale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                value: f64::NEG_INFINITY,
                duals: vec![0.0; m],
                ray: None,
                pivots: tab.pivots,
            });
        }
        // Drive zero-level artificials out of the basis where possible; rows where that is
        // impossible are redundant and keep their artificial at zero.
        for r in 0..m {
            if !is_artificial[tab.basis[r]] {
                continue;
            }
            if let Some(c) = (0..ncols).find(|&c| {
                !is_artificial[c] && {
                    let row = &tab.rows[r];
                    let row_max = row[..ncols].iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
                    row[c].abs() > PIVOT_TOL * row_max
                }
            }) {
                tab.pivot(r, c);
            }
        }
    }

    // Phase 2.
    let mut cost = vec![0.0; ncols];
    for (j, c) in problem.objective.iter().enumerate() {
        let (pos, neg) = var_cols[j];
        cost[pos] = *c;
        if let Some(neg) = neg {
            cost[neg] = -c;
        }
    }
    let allowed: Vec<bool> = is_artificial.iter().map(|a| !a).collect();
    let outcome = tab.optimize(&cost, &allowed, tab.pivots + budget)?;

    let mut col_values = vec![0.0; ncols];
    for (r, &b) in tab.basis.iter().enumerate() {
        col_values[b] = tab.rhs(r).max(0.0);
    }
    let to_vars = |cols: &[f64]| -> Vec<f64> {
        var_cols
            .iter()
            .map(|&(pos, neg)| cols[pos] - neg.map_or(0.0, |n| cols[n]))
            .collect()
    };
    let x = to_vars(&col_values);
    let d = tab.reduced_costs(&cost);
    let duals: Vec<f64> = (0..m).map(|i| -d[identity_col[i]] * flips[i]).collect();

    match outcome {
        Ok(()) => {
            let value = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                value,
                duals,
                ray: None,
                pivots: tab.pivots,
            })
        }
        Err(enter) => {
            let mut dir = vec![0.0; ncols];
            dir[enter] = 1.0;
            for (r, &b) in tab.basis.iter().enumerate() {
                dir[b] -= tab.rows[r][enter];
            }
            let ray = to_vars(&dir[..nstruct.max(ncols)]);
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                x,
                value: f64::INFINITY,
                duals,
                ray: Some(ray),
                pivots: tab.pivots,
            })
        }
    }
}

/// Outcome of the linear relaxation or its dual for a [`UqInstance`].
#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Relaxation point `x*` (for the dual problem, recovered from its multipliers).
    pub x: DVector<f64>,
    /// Relaxation value `y*` standing in for `xᵀx`.
    pub y: f64,
    /// `v(LP)`, `+∞` when unbounded, `−∞` when infeasible.
    pub value: f64,
    /// Simplex weights `λ` with `Σλᵢaᵢ = a₀` (empty unless a finite optimum exists).
    pub lambda: Vec<f64>,
}

impl LpOutcome {
    pub fn is_finite(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// `max y − 2a₀ᵀx  s.t.  y − 2aᵢᵀx ≤ −bᵢ` with `x` and `y` free.
pub fn uq_lp_problem(uq: &UqInstance) -> LpProblem {
    let n = uq.dim();
    let mut objective: Vec<f64> = uq.a0().iter().map(|a| -2.0 * a).collect();
    objective.push(1.0);
    let mut lp = LpProblem::new(objective, vec![VarBound::Free; n + 1]);
    for c in uq.constraints() {
        let mut coeffs: Vec<f64> = c.a.iter().map(|a| -2.0 * a).collect();
        coeffs.push(1.0);
        lp.add_row(coeffs, RowSense::Le, -c.b);
    }
    lp
}

pub fn uq_lp(uq: &UqInstance) -> Result<LpOutcome> {
    let n = uq.dim();
    let sol = simplex(&uq_lp_problem(uq))?;
    Ok(match sol.status {
        LpStatus::Optimal => LpOutcome {
            status: LpStatus::Optimal,
            x: DVector::from_column_slice(&sol.x[..n]),
            y: sol.x[n],
            value: sol.value,
            lambda: sol.duals,
        },
        status => LpOutcome {
            status,
            x: DVector::zeros(n),
            y: f64::NAN,
            value: sol.value,
            lambda: Vec::new(),
        },
    })
}

/// `min −Σbᵢλᵢ  s.t.  Σλᵢaᵢ = a₀, Σλᵢ = 1, λ ≥ 0`, solved as `max Σbᵢλᵢ`.
pub fn uq_dlp(uq: &UqInstance) -> Result<LpOutcome> {
    let n = uq.dim();
    let p = uq.len();
    let objective: Vec<f64> = uq.constraints().iter().map(|c| c.b).collect();
    let mut lp = LpProblem::new(objective, vec![VarBound::NonNegative; p]);
    for k in 0..n {
        let coeffs = uq.constraints().iter().map(|c| c.a[k]).collect();
        lp.add_row(coeffs, RowSense::Eq, uq.a0()[k]);
    }
    lp.add_row(vec![1.0; p], RowSense::Eq, 1.0);
    let sol = simplex(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => {
            // Multipliers (u, w) of the equality rows solve min a₀ᵀu + w s.t. aᵢᵀu + w ≥ bᵢ,
            // which is the relaxation under x = u/2, y = −w.
            let x = DVector::from_iterator(n, sol.duals[..n].iter().map(|u| 0.5 * u));
            LpOutcome {
                status: LpStatus::Optimal,
                x,
                y: -sol.duals[n],
                value: -sol.value,
                lambda: sol.x,
            }
        }
        LpStatus::Infeasible => LpOutcome {
            status: LpStatus::Infeasible,
            x: DVector::zeros(n),
            y: f64::NAN,
            value: f64::INFINITY,
            lambda: Vec::new(),
        },
        LpStatus::Unbounded => {
            return Err(Error::NumericalFailure(
                "dual relaxation is bounded below on its feasible set".into(),
            ))
        }
    })
}
