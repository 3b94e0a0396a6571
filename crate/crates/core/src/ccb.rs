//! Chebyshev-center solvers: the simplex-constrained quadratic relaxation with its ratio
//! certificate, and the ellipsoid method driven by exact inner maximization.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ellipsoid::{self, BallRegion};
use crate::error::{Error, Result};
use crate::problem::{find_interior_point, inner_uq, CcbInstance};
use crate::uq;

/// Default Frank–Wolfe gap at which [`solve_sqp`] stops.
pub const SQP_GAP_TOL: f64 = 1e-10;

const SQP_MAX_ITER: usize = 100_000;

/// Optimum of `min Σλᵢ(rᵢ² − ‖aᵢ‖²) + ‖Σλᵢaᵢ‖²` over the unit simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SqpResult {
    pub lambda: Vec<f64>,
    /// `z̄ = Σλᵢaᵢ`.
    pub z_bar: DVector<f64>,
    pub value: f64,
    /// Frank–Wolfe duality gap `∇qᵀλ − minᵢ ∂ᵢq` at `lambda`.
    pub stationarity_gap: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSource {
    /// Minimax scaled distance of an interior point.
    ChebOptimal,
    /// `d_max / (√2 r_min)`.
    DmaxBound,
}

/// Bounds `ratio · v(SQP) ≤ v(CC_B) ≤ max_{x∈Ω} ‖x − z̄‖² ≤ v(SQP)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioCertificate {
    pub gamma: f64,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub achieved: f64,
    pub gamma_source: GammaSource,
    /// False when neither bound gives `γ < 1`; the ratio is then reported as 0.
    pub gamma_below_one: bool,
    /// Whether `lower ≤ achieved ≤ upper` held within `1e−7`.
    pub sandwich_holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CcbMethod {
    Sqp,
    Ellipsoid,
    Planar,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CcbCertificate {
    Ratio(RatioCertificate),
    /// The reported value is within `eps` of the optimum after `iterations` steps, which is
    /// at least `iteration_bound` unless the run stopped on a zero subgradient.
    EpsilonBound {
        eps: f64,
        iterations: usize,
        iteration_bound: usize,
    },
    /// Exact planar construction; `shortcut` is the ball whose own circle is optimal, if any.
    Planar {
        shortcut: Option<usize>,
        endpoints: usize,
        pairs: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Ok,
    /// The ellipsoid method stopped on the iteration cap before reaching its bound.
    IterationLimit,
    /// The planar construction failed its post-check and the ellipsoid result was used.
    PlanarFallback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CcbSolution {
    pub center: DVector<f64>,
    /// `max_{x∈Ω} ‖x − center‖²`.
    pub squared_radius: f64,
    pub method: CcbMethod,
    pub certificate: Option<CcbCertificate>,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Farthest points of `Ω` found while evaluating iterates; all lie in `Ω`, so the
    /// smallest ball containing them bounds the optimum from below.
    pub witnesses: Vec<DVector<f64>>,
}

fn sqp_parts(inst: &CcbInstance) -> (DMatrix<f64>, Vec<f64>) {
    let n = inst.dim();
    let p = inst.len();
    let a = DMatrix::from_fn(n, p, |k, i| inst.balls()[i].center[k]);
    let c = inst
        .balls()
        .iter()
        .map(|b| b.radius * b.radius - b.center.norm_squared())
        .collect();
    (a, c)
}

/// `Σλᵢ(rᵢ² − ‖aᵢ‖²) + ‖Σλᵢaᵢ‖²`.
pub fn sqp_objective(inst: &CcbInstance, lambda: &[f64]) -> f64 {
    let (a, c) = sqp_parts(inst);
    let l = DVector::from_column_slice(lambda);
    c.iter().zip(lambda).map(|(ci, li)| ci * li).sum::<f64>() + (&a * l).norm_squared()
}

/// Frank–Wolfe with away steps and exact line search, finished by solving the optimality
/// system on the current support.
pub fn solve_sqp(inst: &CcbInstance, gap_tol: f64) -> Result<SqpResult> {
    let p = inst.len();
    let (a, c) = sqp_parts(inst);
    let objective = |l: &DVector<f64>| c.iter().zip(l.iter()).map(|(ci, li)| ci * li).sum::<f64>() + (&a * l).norm_squared();
    let gradient = |l: &DVector<f64>| {
        let al = &a * l;
        DVector::from_fn(p, |i, _| c[i] + 2.0 * a.column(i).dot(&al))
    };

    // Start at the vertex of the smallest ball (q(eᵢ) = rᵢ²).
    let start = (0..p)
        .min_by(|&i, &j| inst.balls()[i].radius.total_cmp(&inst.balls()[j].radius))
        .unwrap();
    let mut lambda = DVector::zeros(p);
    lambda[start] = 1.0;
    let mut value = objective(&lambda);

    let fw_gap = |l: &DVector<f64>, g: &DVector<f64>| g.dot(l) - g.min();
    let mut iterations = 0;
    let mut gap;
    loop {
        let g = gradient(&lambda);
        gap = fw_gap(&lambda, &g);
        let scale = value.abs().max(1.0);
        if gap <= gap_tol * scale {
            break;
        }
        if iterations >= SQP_MAX_ITER {
            return Err(Error::IterationLimit {
                iterations,
                gap_estimate: gap,
                best: None,
            });
        }
        iterations += 1;

        let s = g.argmin().0;
        let v = (0..p)
            .filter(|&i| lambda[i] > 0.0)
            .max_by(|&i, &j| g[i].total_cmp(&g[j]).then(j.cmp(&i)))
            .unwrap();
        let mut d_fw = -lambda.clone();
        d_fw[s] += 1.0;
        let mut d_away = lambda.clone();
        d_away[v] -= 1.0;
        let (d, t_max) = if -g.dot(&d_fw) >= -g.dot(&d_away) || lambda[v] >= 1.0 {
            (d_fw, 1.0)
        } else {
            let lv = lambda[v];
            (d_away, lv / (1.0 - lv))
        };
        let slope = g.dot(&d);
        let curv = (&a * &d).norm_squared();
        let t = if curv > 0.0 { (-slope / (2.0 * curv)).clamp(0.0, t_max) } else { t_max };
        lambda += &d * t;
        for l in lambda.iter_mut() {
            if *l < 1e-16 {
                *l = 0.0;
            }
        }
        let total = lambda.sum();
        lambda /= total;
        value = objective(&lambda);

        if let Some(polished) = polish_on_support(&a, &c, &lambda) {
            let pv = objective(&polished);
            if pv <= value {
                lambda = polished;
                value = pv;
            }
        }
    }

    let z_bar = &a * &lambda;
    Ok(SqpResult {
        lambda: lambda.iter().copied().collect(),
        z_bar,
        value,
        stationarity_gap: gap.max(0.0),
        iterations,
    })
}

/// Minimizer of the quadratic on the affine hull of the current support, if it stays in the
/// simplex: solves `2AₛᵀAₛλ + cₛ = μ1`, `1ᵀλ = 1`.
fn polish_on_support(a: &DMatrix<f64>, c: &[f64], lambda: &DVector<f64>) -> Option<DVector<f64>> {
    let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
    let k = support.len();
    if k < 2 {
        return None;
    }
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for (r, &i) in support.iter().enumerate() {
        for (s, &j) in support.iter().enumerate() {
            kkt[(r, s)] = 2.0 * a.column(i).dot(&a.column(j));
        }
        kkt[(r, k)] = -1.0;
        kkt[(k, r)] = 1.0;
        rhs[r] = -c[i];
    }
    rhs[k] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) || sol.rows(0, k).iter().any(|v| *v < 0.0) {
        return None;
    }
    let mut out = DVector::zeros(lambda.len());
    for (r, &i) in support.iter().enumerate() {
        out[i] = sol[r];
    }
    let total = out.sum();
    Some(out / total)
}

/// `max_{x∈Ω} ‖x − z‖²` together with the deterministic maximizer.
pub fn farthest_point(inst: &CcbInstance, z: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let sol = uq::solve_exact(&inner_uq(inst, z)?)?;
    Ok(((&sol.x - z).norm_squared(), sol.x))
}

pub fn evaluate_center(inst: &CcbInstance, z: &DVector<f64>) -> Result<f64> {
    Ok(farthest_point(inst, z)?.0)
}

/// `2(z − x*(z))` with `x*(z)` the maximizer returned by [`farthest_point`].
pub fn ccb_subgradient(inst: &CcbInstance, z: &DVector<f64>) -> Result<DVector<f64>> {
    let (_, x) = farthest_point(inst, z)?;
    Ok((z - x) * 2.0)
}

/// `(γ, source)` with `γ` the smaller of the interior-point value and `d_max/(√2 r_min)`.
pub fn certificate_gamma(inst: &CcbInstance) -> (f64, GammaSource) {
    let cheb = find_interior_point(inst, 1e-10).gamma;
    let balls = inst.balls();
    let mut d_max: f64 = 0.0;
    for i in 0..balls.len() {
        for j in i + 1..balls.len() {
            d_max = d_max.max((&balls[i].center - &balls[j].center).norm());
        }
    }
    let r_min = balls.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
    let dmax_gamma = d_max / (std::f64::consts::SQRT_2 * r_min);
    if dmax_gamma < 1.0 && dmax_gamma < cheb {
        (dmax_gamma, GammaSource::DmaxBound)
    } else {
        (cheb, GammaSource::ChebOptimal)
    }
}

pub fn sqp_certificate(inst: &CcbInstance, sqp: &SqpResult) -> Result<RatioCertificate> {
    let (gamma, gamma_source) = certificate_gamma(inst);
    let gamma_below_one = gamma < 1.0;
    let ratio = if gamma_below_one { uq::approximation_ratio(gamma) } else { 0.0 };
    let achieved = evaluate_center(inst, &sqp.z_bar)?;
    let lower = ratio * sqp.value;
    let slack = 1e-7 * sqp.value.abs().max(1.0);
    Ok(RatioCertificate {
        gamma,
        ratio,
        lower,
        upper: sqp.value,
        achieved,
        gamma_source,
        gamma_below_one,
        sandwich_holds: lower <= achieved + slack && achieved <= sqp.value + slack,
    })
}

/// Solves the relaxation and reports `z̄` with its ratio certificate.
pub fn solve_ccb_sqp(inst: &CcbInstance, gap_tol: f64) -> Result<CcbSolution> {
    let sqp = solve_sqp(inst, gap_tol)?;
    let cert = sqp_certificate(inst, &sqp)?;
    let (squared_radius, witness) = farthest_point(inst, &sqp.z_bar)?;
    Ok(CcbSolution {
        center: sqp.z_bar,
        squared_radius,
        method: CcbMethod::Sqp,
        certificate: Some(CcbCertificate::Ratio(cert)),
        status: SolveStatus::Ok,
        iterations: sqp.iterations,
        witnesses: vec![witness],
    })
}

/// Index of the localization ball: the smallest radius, first on ties.
fn localization_ball(inst: &CcbInstance) -> usize {
    (0..inst.len())
        .min_by(|&i, &j| inst.balls()[i].radius.total_cmp(&inst.balls()[j].radius))
        .unwrap()
}

/// Iterations the ellipsoid method needs for accuracy `eps`, with the smallest ball as the
/// localization set (`R = ρ = r`, `M = 4(‖a‖ + r)`).
pub fn ellipsoid_iteration_bound(inst: &CcbInstance, eps: f64) -> usize {
    let q = &inst.balls()[localization_ball(inst)];
    let lipschitz = 4.0 * (q.center.norm() + q.radius);
    if inst.dim() == 1 {
        ellipsoid::bisection_bound(lipschitz, q.radius, eps)
    } else {
        ellipsoid::iteration_bound(inst.dim(), lipschitz, q.radius, q.radius, eps)
    }
}

/// Minimizes `f(z) = max_{x∈Ω} ‖x − z‖²` over the smallest ball with the ellipsoid method
/// (bisection when `n = 1`), using `2(z − x*(z))` as subgradient.
///
/// Runs [`ellipsoid_iteration_bound`] iterations; if that exceeds `max_iter`, runs `max_iter`
/// and returns [`Error::IterationLimit`] carrying the best solution found.
pub fn solve_ccb_ellipsoid(inst: &CcbInstance, eps: f64, max_iter: usize) -> Result<CcbSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInstance(format!("eps must be positive, got {eps}")));
    }
    let q = &inst.balls()[localization_ball(inst)];
    let bound = ellipsoid_iteration_bound(inst, eps);
    let iterations = bound.min(max_iter);
    let region = BallRegion {
        center: q.center.clone(),
        radius: q.radius,
    };
    let mut witnesses = Vec::new();
    let run = ellipsoid::minimize_over_ball(&region, iterations, false, |z| {
        let (value, x) = farthest_point(inst, z)?;
        let g = (z - &x) * 2.0;
        witnesses.push(x);
        Ok((value, g))
    })?;

    let center = run
        .state
        .best_point
        .clone()
        .unwrap_or_else(|| region.center.clone());
    let solution = CcbSolution {
        squared_radius: run.state.best_value.min(evaluate_center(inst, &center)?),
        center,
        method: CcbMethod::Ellipsoid,
        certificate: Some(CcbCertificate::EpsilonBound {
            eps,
            iterations: run.iterations,
            iteration_bound: bound,
        }),
        status: SolveStatus::Ok,
        iterations: run.iterations,
        witnesses,
    };
    if bound > max_iter && !run.stopped_early {
        let nf = (inst.dim() + 1) as f64;
        let lipschitz = 4.0 * (q.center.norm() + q.radius);
        let gap_estimate = if inst.dim() == 1 {
            lipschitz * 2.0 * q.radius / 2f64.powi(run.iterations.min(1000) as i32)
        } else {
            lipschitz * q.radius * (-(run.iterations as f64) / (2.0 * nf * nf)).exp()
        };
        return Err(Error::IterationLimit {
            iterations: run.iterations,
            gap_estimate,
            best: Some(Box::new(CcbSolution {
                status: SolveStatus::IterationLimit,
                ..solution
            })),
        });
    }
    Ok(solution)
}
