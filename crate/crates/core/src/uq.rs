//! Uniform quadratic maximization: relaxation tightness, exact enumeration and rounding.

use itertools::Itertools;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, RowSense, VarBound};
use crate::oracle::{self, OracleConfig};
use crate::problem::UqInstance;

/// Default cap on the number of active sets examined by [`solve_exact`].
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Relative tolerance for the `y* = x*ᵀx*` comparison.
pub const TRICHOTOMY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum TrichotomyCase {
    /// `x*ᵀx* = y*`: the relaxation point is feasible and optimal for the original problem.
    A,
    /// `x*ᵀx* > y*`: the semidefinite relaxation is tight.
    B,
    /// `x*ᵀx* < y*`: the linear and semidefinite relaxations agree.
    C,
}

impl TrichotomyCase {
    pub fn label(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrichotomyResult {
    pub case: TrichotomyCase,
    pub x: DVector<f64>,
    pub y: f64,
    pub lp_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Trichotomy {
    Finite(TrichotomyResult),
    Unbounded,
}

pub fn classify(x: &DVector<f64>, y: f64) -> TrichotomyCase {
    let xx = x.norm_squared();
    let tol = TRICHOTOMY_TOL * y.abs().max(1.0);
    if (xx - y).abs() <= tol {
        TrichotomyCase::A
    } else if xx > y {
        TrichotomyCase::B
    } else {
        TrichotomyCase::C
    }
}

/// Solves the linear relaxation and classifies the vertex it returns.
pub fn trichotomy(uq: &UqInstance) -> Result<Trichotomy> {
    let out = lp::uq_lp(uq)?;
    match out.status {
        LpStatus::Optimal => Ok(Trichotomy::Finite(TrichotomyResult {
            case: classify(&out.x, out.y),
            x: out.x,
            y: out.y,
            lp_value: out.value,
        })),
        LpStatus::Unbounded => Ok(Trichotomy::Unbounded),
        LpStatus::Infeasible => Err(Error::NumericalFailure(
            "linear relaxation reported infeasible".into(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct DualityConditionReport {
    /// `a₀ ∉ conv{aᵢ}`.
    pub cond_i: bool,
    /// The cone `{x : (aᵢ − a₀)ᵀx ≥ 0 ∀i}` contains a nonzero vector.
    pub cond_ii: bool,
    pub strong_duality_guaranteed: bool,
}

/// Checks the two sufficient conditions for the semidefinite relaxation to be tight.
pub fn duality_conditions(uq: &UqInstance) -> Result<DualityConditionReport> {
    let cond_i = lp::uq_dlp(uq)?.status == LpStatus::Infeasible;

    let n = uq.dim();
    let mut cond_ii = false;
    'outer: for j in 0..n {
        for s in [1.0, -1.0] {
            let mut objective = vec![0.0; n];
            objective[j] = s;
            let mut lp = LpProblem::new(objective.clone(), vec![VarBound::Free; n]);
            for c in uq.constraints() {
                let row = (&c.a - uq.a0()).iter().copied().collect();
                lp.add_row(row, RowSense::Ge, 0.0);
            }
            lp.add_row(objective, RowSense::Le, 1.0);
            let sol = lp::simplex(&lp)?;
            // The cone is scale invariant, so the optimum is 0 or 1.
            if sol.status == LpStatus::Optimal && sol.value > 0.5 {
                cond_ii = true;
                break 'outer;
            }
        }
    }
    Ok(DualityConditionReport {
        cond_i,
        cond_ii,
        strong_duality_guaranteed: cond_i || cond_ii,
    })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UqCertificate {
    /// Global optimum found by enumeration; the point is a root of the system in which the
    /// constraints of `active_set` hold with equality.
    ExactEnumeration { active_set: Vec<usize>, root: usize },
    /// The relaxation point satisfies `x*ᵀx* = y*` and is therefore optimal.
    ExactLpTight,
    /// `value ≥ ratio · upper_bound`.
    ApproxRatio { ratio: f64, upper_bound: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct UqSolution {
    pub x: DVector<f64>,
    pub value: f64,
    pub certificate: UqCertificate,
    pub upper_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnumerationConfig {
    pub budget: u128,
    /// Relative slack allowed when checking candidates against the constraints.
    pub feas_tol: f64,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            feas_tol: 1e-8,
        }
    }
}

/// `Σ_{k=1}^{min(p,n)} C(p, k)`, saturating.
pub fn enumeration_size(p: usize, n: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for k in 1..=p.min(n) {
        binom = binom.saturating_mul((p - k + 1) as u128) / k as u128;
        total = total.saturating_add(binom);
    }
    total
}

pub fn solve_exact(uq: &UqInstance) -> Result<UqSolution> {
    solve_exact_with(uq, &EnumerationConfig::default())
}

/// Best candidate so far; ordered by value, then by the lexicographically smaller active
/// set, then by root index, which makes the reduction associative.
#[derive(Clone, Debug)]
struct Candidate {
    z: f64,
    subset: Vec<usize>,
    root: usize,
    u: Vec<f64>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.z != other.z {
            return self.z > other.z;
        }
        match self.subset.cmp(&other.subset) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.root < other.root,
        }
    }
}

/// Exact global maximization by enumerating active sets.
///
/// In coordinates `u = x − a₀` the objective is `‖u‖² − ‖a₀‖²` and constraint `i` is the
/// ball `‖u − cᵢ‖² ≤ Rᵢ` with `cᵢ = aᵢ − a₀`, `Rᵢ = ‖aᵢ‖² − bᵢ`. For each set `J` of at most
/// `n` constraints with affinely independent centers, the points where all of `J` are tight
/// form a sphere inside an affine subspace `S`; the two candidates are the points of that
/// sphere farthest from and nearest to the origin along the direction of `S`. Every local
/// maximizer of the original problem is such a candidate for its own active set, so the best
/// feasible candidate is the global optimum.
pub fn solve_exact_with(uq: &UqInstance, cfg: &EnumerationConfig) -> Result<UqSolution> {
    let n = uq.dim();
    let p = uq.len();
    let required = enumeration_size(p, n);
    if required > cfg.budget {
        return Err(Error::BudgetExceeded {
            required,
            budget: cfg.budget,
        });
    }

    let a0 = uq.a0();
    let centers: Vec<Vec<f64>> = uq
        .constraints()
        .iter()
        .map(|c| (&c.a - a0).iter().copied().collect())
        .collect();
    let radii2: Vec<f64> = uq.constraints().iter().map(|c| c.squared_radius()).collect();
    let scales: Vec<f64> = uq
        .constraints()
        .iter()
        .zip(&radii2)
        .map(|(c, r)| 1f64.max(c.b.abs()).max(*r))
        .collect();

    let mut best: Option<Candidate> = None;
    if radii2.iter().all(|r| *r >= 0.0) {
        let mut kernel = SubsetKernel::new(n);
        for k in 1..=p.min(n) {
            for subset in (0..p).combinations(k) {
                let Some((m, rho, dir)) = kernel.sphere(&subset, &centers, &radii2) else {
                    continue;
                };
                for (root, sign) in [(0usize, 1.0), (1usize, -1.0)] {
                    let u: Vec<f64> = m.iter().zip(dir).map(|(mi, di)| mi + sign * rho * di).collect();
                    let feasible = centers.iter().zip(&radii2).zip(&scales).all(|((c, r), s)| {
                        let d2: f64 = u.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                        d2 - r <= cfg.feas_tol * s
                    });
                    if !feasible {
                        continue;
                    }
                    let cand = Candidate {
                        z: u.iter().map(|v| v * v).sum(),
                        subset: subset.clone(),
                        root,
                        u,
                    };
                    if best.as_ref().is_none_or(|b| cand.beats(b)) {
                        best = Some(cand);
                    }
                    if rho == 0.0 {
                        break;
                    }
                }
            }
        }
    }

    let Some(best) = best else {
        let fallback = oracle::oracle_uq(uq, &OracleConfig::default());
        return Err(Error::NoCandidate {
            fallback_value: fallback.as_ref().map(|f| f.value),
            fallback_point: fallback.map(|f| f.point.iter().copied().collect()),
        });
    };

    let x = a0 + DVector::from_vec(best.u);
    let value = uq.objective(&x);
    Ok(UqSolution {
        x,
        value,
        certificate: UqCertificate::ExactEnumeration {
            active_set: best.subset,
            root: best.root,
        },
        upper_bound: value,
    })
}

/// Reusable buffers for the per-subset linear algebra.
struct SubsetKernel {
    n: usize,
    q: Vec<f64>,
    l: Vec<f64>,
    t: Vec<f64>,
    m: Vec<f64>,
    dir: Vec<f64>,
    row: Vec<f64>,
}

impl SubsetKernel {
    fn new(n: usize) -> Self {
        Self {
            n,
            q: vec![0.0; n * n],
            l: vec![0.0; n * n],
            t: vec![0.0; n],
            m: vec![0.0; n],
            dir: vec![0.0; n],
            row: vec![0.0; n],
        }
    }

    /// Center, radius and unit outward direction of the sphere on which every constraint of
    /// `subset` is tight, or `None` when the centers are affinely dependent or the sphere is
    /// empty. The farthest point from the origin is `m + ρ·dir`.
    fn sphere(
        &mut self,
        subset: &[usize],
        centers: &[Vec<f64>],
        radii2: &[f64],
    ) -> Option<(&[f64], f64, &[f64])> {
        let n = self.n;
        let c0 = &centers[subset[0]];
        let r0 = radii2[subset[0]];
        let rows = subset.len() - 1;
        let c0_sq: f64 = c0.iter().map(|v| v * v).sum();

        // Modified Gram–Schmidt on the rows eᵢ = 2(cᵢ − c₀), tracking E = L Qᵀ, and forward
        // substitution for the coordinates t of m − c₀ in the row space.
        let mut max_norm: f64 = 0.0;
        for i in 0..rows {
            let ci = &centers[subset[i + 1]];
            for k in 0..n {
                self.row[k] = 2.0 * (ci[k] - c0[k]);
            }
            let norm0 = self.row.iter().map(|v| v * v).sum::<f64>().sqrt();
            max_norm = max_norm.max(norm0);
            let ci_sq: f64 = ci.iter().map(|v| v * v).sum();
            let h = ci_sq - c0_sq + r0 - radii2[subset[i + 1]];
            let mut rhs = h - self.row.iter().zip(c0).map(|(a, b)| a * b).sum::<f64>();
            for l in 0..i {
                let ql = &self.q[l * n..(l + 1) * n];
                let coef: f64 = ql.iter().zip(&self.row).map(|(a, b)| a * b).sum();
                for k in 0..n {
                    self.row[k] -= coef * ql[k];
                }
                self.l[i * n + l] = coef;
                rhs -= coef * self.t[l];
            }
            let norm = self.row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 1e-10 * max_norm) {
                return None;
            }
            self.l[i * n + i] = norm;
            for k in 0..n {
                self.q[i * n + k] = self.row[k] / norm;
            }
            self.t[i] = rhs / norm;
        }

        let t_sq: f64 = self.t[..rows].iter().map(|v| v * v).sum();
        let rho2 = r0 - t_sq;
        if rho2 < -1e-12 * r0.max(1.0) {
            return None;
        }
        let rho = rho2.max(0.0).sqrt();

        self.m.copy_from_slice(c0);
        for l in 0..rows {
            let ql = &self.q[l * n..(l + 1) * n];
            for k in 0..n {
                self.m[k] += self.t[l] * ql[k];
            }
        }

        // Component of m orthogonal to the row space, i.e. along S.
        self.dir.copy_from_slice(&self.m);
        self.project_out(rows);
        let m_norm = self.m.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d_norm = self.dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if d_norm > 1e-12 * (1.0 + m_norm) {
            for v in self.dir.iter_mut() {
                *v /= d_norm;
            }
        } else {
            // Every point of the sphere is equally far from the origin; use the coordinate axis
            // with the largest component along S, oriented so the far root lies on its
            // negative side.
            let mut best = (0, -1.0);
            for axis in 0..n {
                self.dir.iter_mut().for_each(|v| *v = 0.0);
                self.dir[axis] = 1.0;
                self.project_out(rows);
                let norm = self.dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > best.1 + 1e-12 {
                    best = (axis, norm);
                }
            }
            self.dir.iter_mut().for_each(|v| *v = 0.0);
            self.dir[best.0] = 1.0;
            self.project_out(rows);
            for v in self.dir.iter_mut() {
                *v /= -best.1;
            }
        }
        Some((&self.m, rho, &self.dir))
    }

    fn project_out(&mut self, rows: usize) {
        let n = self.n;
        for l in 0..rows {
            let ql = &self.q[l * n..(l + 1) * n];
            let coef: f64 = ql.iter().zip(&self.dir).map(|(a, b)| a * b).sum();
            for k in 0..n {
                self.dir[k] -= coef * ql[k];
            }
        }
    }
}

/// Value of the semidefinite relaxation without solving a conic program.
///
/// If the relaxation vertex falls in case A or C the linear relaxation value is returned;
/// in case B, and when the linear relaxation is unbounded (so `a₀` lies outside the hull of
/// the centers), the semidefinite relaxation is tight and the exact value is returned.
pub fn sdp_value(uq: &UqInstance) -> Result<f64> {
    sdp_value_with(uq, &EnumerationConfig::default())
}

pub fn sdp_value_with(uq: &UqInstance, cfg: &EnumerationConfig) -> Result<f64> {
    match trichotomy(uq)? {
        Trichotomy::Finite(t) if t.case != TrichotomyCase::B => Ok(t.lp_value),
        _ => Ok(solve_exact_with(uq, cfg)?.value),
    }
}

/// `((1 − γ)/(√2 + γ))²`.
pub fn approximation_ratio(gamma: f64) -> f64 {
    let r = (1.0 - gamma) / (std::f64::consts::SQRT_2 + gamma);
    r * r
}

/// Rounds the relaxation vertex to a feasible point with a guaranteed fraction of `v(LP)`.
///
/// Requires every `bᵢ < 0`. Case A returns the relaxation point, case B and an unbounded
/// relaxation fall back to [`solve_exact`], and case C runs the rounding.
pub fn approx_round(uq: &UqInstance) -> Result<UqSolution> {
    if let Some((i, c)) = uq.constraints().iter().enumerate().find(|(_, c)| c.b >= 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "constraint {i} has b = {} ≥ 0; the origin must be strictly feasible",
            c.b
        )));
    }
    let t = match trichotomy(uq)? {
        Trichotomy::Unbounded => return solve_exact(uq),
        Trichotomy::Finite(t) => t,
    };
    match t.case {
        TrichotomyCase::A => Ok(UqSolution {
            value: uq.objective(&t.x),
            x: t.x,
            certificate: UqCertificate::ExactLpTight,
            upper_bound: t.lp_value,
        }),
        TrichotomyCase::B => solve_exact(uq),
        TrichotomyCase::C => Ok(round_case_c(uq, &t)),
    }
}

fn round_case_c(uq: &UqInstance, t: &TrichotomyResult) -> UqSolution {
    let n = uq.dim();
    let x_star = &t.x;
    let d = t.y - x_star.norm_squared();
    let mut dir = DVector::zeros(n);
    dir[0] = d.sqrt();

    // Positive root of dβ² + 2Bβ − d = 0, which places x* + βt on the level set f₀ = v(LP).
    let b_lin = (x_star - uq.a0()).dot(&dir);
    let disc = (b_lin * b_lin + d * d).sqrt();
    let beta = if b_lin > 0.0 { d / (b_lin + disc) } else { (disc - b_lin) / d };

    let norm = (1.0 + beta * beta).sqrt();
    let (u1, u2) = (1.0 / norm, beta / norm);
    let s1 = x_star * u1 + &dir * u2;
    let s2 = x_star * u2 - &dir * u1;
    let cands = [s1 / u1, s2 / u2];

    let inv_radius: Vec<f64> = uq
        .constraints()
        .iter()
        .map(|c| 1.0 / (c.a.norm_squared() - c.b).sqrt())
        .collect();
    let spread = |x: &DVector<f64>| {
        uq.constraints()
            .iter()
            .zip(&inv_radius)
            .map(|(c, rho)| rho * (x - &c.a).norm())
            .fold(0.0, f64::max)
    };
    let j = if spread(&cands[1]) < spread(&cands[0]) { 1 } else { 0 };
    let mut x_bar = cands[j].clone();
    if uq.a0().dot(&x_bar) > 0.0 {
        x_bar = -x_bar;
    }

    // Largest τ ∈ [0, 1] with fᵢ(τx̄) ≤ 0 for all i.
    let xx = x_bar.norm_squared();
    let mut tau: f64 = 1.0;
    if xx > 0.0 {
        for c in uq.constraints() {
            let ax = c.a.dot(&x_bar);
            let root = (ax + (ax * ax - xx * c.b).sqrt()) / xx;
            tau = tau.min(root);
        }
    }
    let x = x_bar * tau;

    let gamma = uq
        .constraints()
        .iter()
        .zip(&inv_radius)
        .map(|(c, rho)| c.a.norm() * rho)
        .fold(0.0, f64::max);
    UqSolution {
        value: uq.objective(&x),
        x,
        certificate: UqCertificate::ApproxRatio {
            ratio: approximation_ratio(gamma),
            upper_bound: t.lp_value,
        },
        upper_bound: t.lp_value,
    }
}
