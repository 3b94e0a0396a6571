//! Problem representations and the bridge between the Chebyshev-center problem and its inner
//! uniform quadratic maximization.
//!
//! A [`CcbInstance`] is a list of balls `‖x − aᵢ‖ ≤ rᵢ` in ℝⁿ; its Chebyshev center minimizes
//! `max_{x∈Ω} ‖x − z‖²` over `z`, where `Ω` is the intersection. For fixed `z` the inner
//! problem is a [`UqInstance`]: maximize `xᵀx − 2a₀ᵀx` subject to
//! `xᵀx − 2aᵢᵀx + bᵢ ≤ 0`.

use nalgebra::DVector;

use crate::ellipsoid::{self, BallRegion};
use crate::error::{Error, Result};

/// Default relative feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;

/// Margin below 1 that `gamma` must clear for the interior to count as nonempty.
pub const INTERIOR_MARGIN: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: DVector<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInstance(format!("radius must be positive and finite, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance("ball center has non-finite entries".into()));
        }
        Ok(Self { center, radius })
    }

    pub fn from_slice(center: &[f64], radius: f64) -> Result<Self> {
        Self::new(DVector::from_column_slice(center), radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// An intersection of `p ≥ 1` balls in ℝⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct CcbInstance {
    dim: usize,
    balls: Vec<Ball>,
}

impl CcbInstance {
    pub fn new(balls: Vec<Ball>) -> Result<Self> {
        let Some(first) = balls.first() else {
            return Err(Error::InvalidInstance("at least one ball is required".into()));
        };
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        for b in &balls {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.dim(),
                });
            }
        }
        Ok(Self { dim, balls })
    }

    /// Builds an instance from `(center, radius)` pairs.
    pub fn from_pairs(pairs: &[(&[f64], f64)]) -> Result<Self> {
        let balls = pairs
            .iter()
            .map(|(c, r)| Ball::from_slice(c, *r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(balls)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// `max_i ‖x − aᵢ‖ / rᵢ`.
    pub fn scaled_distance(&self, x: &DVector<f64>) -> f64 {
        self.balls
            .iter()
            .map(|b| (x - &b.center).norm() / b.radius)
            .fold(0.0, f64::max)
    }

    /// Same instance with every center moved by `d`.
    pub fn translated(&self, d: &DVector<f64>) -> Self {
        Self {
            dim: self.dim,
            balls: self
                .balls
                .iter()
                .map(|b| Ball {
                    center: &b.center + d,
                    radius: b.radius,
                })
                .collect(),
        }
    }

    pub(crate) fn check_point(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: z.len(),
            });
        }
        Ok(())
    }
}

/// One constraint `xᵀx − 2aᵀx + b ≤ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct UqConstraint {
    pub a: DVector<f64>,
    pub b: f64,
}

impl UqConstraint {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        x.norm_squared() - 2.0 * self.a.dot(x) + self.b
    }

    /// Squared radius `‖a‖² − b` of the ball this constraint describes.
    pub fn squared_radius(&self) -> f64 {
        self.a.norm_squared() - self.b
    }
}

/// `max xᵀx − 2a₀ᵀx  s.t.  xᵀx − 2aᵢᵀx + bᵢ ≤ 0, i = 1..p`.
#[derive(Clone, Debug, PartialEq)]
pub struct UqInstance {
    dim: usize,
    a0: DVector<f64>,
    constraints: Vec<UqConstraint>,
}

impl UqInstance {
    pub fn new(a0: DVector<f64>, constraints: Vec<UqConstraint>) -> Result<Self> {
        let dim = a0.len();
        if dim == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        if constraints.is_empty() {
            return Err(Error::InvalidInstance("at least one constraint is required".into()));
        }
        for c in &constraints {
            if c.a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.a.len(),
                });
            }
            if !c.b.is_finite() || c.a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance("constraint data must be finite".into()));
            }
        }
        if a0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("objective center must be finite".into()));
        }
        Ok(Self { dim, a0, constraints })
    }

    /// Builds an instance from slices: `a0` and `(aᵢ, bᵢ)` pairs.
    pub fn from_parts(a0: &[f64], constraints: &[(&[f64], f64)]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(a0),
            constraints
                .iter()
                .map(|(a, b)| UqConstraint {
                    a: DVector::from_column_slice(a),
                    b: *b,
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a0(&self) -> &DVector<f64> {
        &self.a0
    }

    pub fn constraints(&self) -> &[UqConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// `f₀(x) = xᵀx − 2a₀ᵀx`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        x.norm_squared() - 2.0 * self.a0.dot(x)
    }

    /// Whether every `bᵢ < 0`, i.e. the origin is strictly feasible.
    pub fn origin_interior(&self) -> bool {
        self.constraints.iter().all(|c| c.b < 0.0)
    }

    /// The same feasible set written as balls: center `aᵢ`, radius `√(‖aᵢ‖² − bᵢ)`.
    pub fn to_balls(&self) -> Result<CcbInstance> {
        let balls = self
            .constraints
            .iter()
            .map(|c| {
                let r2 = c.squared_radius();
                if !(r2 > 0.0) {
                    return Err(Error::InvalidInstance(format!(
                        "constraint has nonpositive squared radius {r2}"
                    )));
                }
                Ball::new(c.a.clone(), r2.sqrt())
            })
            .collect::<Result<Vec<_>>>()?;
        CcbInstance::new(balls)
    }

    /// Constraints reordered by `perm` (`perm[k]` is the old index placed at position `k`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            dim: self.dim,
            a0: self.a0.clone(),
            constraints: perm.iter().map(|&i| self.constraints[i].clone()).collect(),
        }
    }

    pub(crate) fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// A point `x₀` together with `γ = max_i ‖x₀ − aᵢ‖ / rᵢ`; `γ < 1` certifies `x₀ ∈ int Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct InteriorCertificate {
    pub point: DVector<f64>,
    pub gamma: f64,
}

/// Approximately minimizes `max_i ‖x − aᵢ‖ / rᵢ`.
///
/// The minimizer lies in the convex hull of the centers, so the search runs the ellipsoid
/// method over the ball around the centroid that contains every center. The returned `gamma`
/// is within `tol` of the minimum.
pub fn find_interior_point(inst: &CcbInstance, tol: f64) -> InteriorCertificate {
    let n = inst.dim();
    let p = inst.len() as f64;
    let mean = inst
        .balls()
        .iter()
        .fold(DVector::zeros(n), |acc, b| acc + &b.center)
        / p;
    let spread = inst
        .balls()
        .iter()
        .map(|b| (&b.center - &mean).norm())
        .fold(0.0, f64::max);

    let mut best = InteriorCertificate {
        gamma: inst.scaled_distance(&mean),
        point: mean.clone(),
    };
    if spread == 0.0 {
        return best;
    }

    let lipschitz = inst
        .balls()
        .iter()
        .map(|b| 1.0 / b.radius)
        .fold(0.0, f64::max);
    let radius = spread * (1.0 + 1e-9);
    let tol = tol.max(f64::EPSILON);
    let iterations = if n == 1 {
        ellipsoid::bisection_bound(lipschitz, radius, tol)
    } else {
        ellipsoid::iteration_bound(n, lipschitz, radius, radius, tol)
    };
    let region = BallRegion {
        center: mean,
        radius,
    };

    let run = ellipsoid::minimize_over_ball(&region, iterations, false, |x| {
        let (mut value, mut arg) = (f64::NEG_INFINITY, 0);
        for (i, b) in inst.balls().iter().enumerate() {
            let v = (x - &b.center).norm() / b.radius;
            if v > value {
                value = v;
                arg = i;
            }
        }
        let d = x - &inst.balls()[arg].center;
        let norm = d.norm();
        let g = if norm > 0.0 {
            d / (norm * inst.balls()[arg].radius)
        } else {
            DVector::zeros(n)
        };
        Ok((value, g))
    })
    .expect("scaled-distance oracle is infallible");

    if let Some(point) = run.state.best_point {
        let gamma = inst.scaled_distance(&point);
        if gamma < best.gamma {
            best = InteriorCertificate { point, gamma };
        }
    }
    best
}

/// Certifies that the intersection has nonempty interior.
pub fn validate(inst: &CcbInstance) -> Result<InteriorCertificate> {
    for b in inst.balls() {
        if b.dim() != inst.dim() {
            return Err(Error::DimensionMismatch {
                expected: inst.dim(),
                found: b.dim(),
            });
        }
    }
    let cert = find_interior_point(inst, 1e-10);
    if cert.gamma >= 1.0 - INTERIOR_MARGIN {
        return Err(Error::EmptyInterior { gamma: cert.gamma });
    }
    Ok(cert)
}

/// Inner maximization at center `z`: `a₀ = z`, `aᵢ` the ball centers,
/// `bᵢ = ‖aᵢ‖² − rᵢ²`. Adding `‖z‖²` to its optimal value gives `max_{x∈Ω} ‖x − z‖²`.
pub fn inner_uq(inst: &CcbInstance, z: &DVector<f64>) -> Result<UqInstance> {
    inst.check_point(z)?;
    let constraints = inst
        .balls()
        .iter()
        .map(|b| UqConstraint {
            a: b.center.clone(),
            b: b.center.norm_squared() - b.radius * b.radius,
        })
        .collect();
    UqInstance::new(z.clone(), constraints)
}

/// A translated copy of a [`UqInstance`] whose origin is a given strictly feasible point.
#[derive(Clone, Debug)]
pub struct Recentered {
    pub instance: UqInstance,
    /// The original point that became the origin.
    pub shift: DVector<f64>,
    /// Original objective value = translated objective value + `value_offset`.
    pub value_offset: f64,
}

impl Recentered {
    pub fn to_original(&self, x: &DVector<f64>) -> DVector<f64> {
        x + &self.shift
    }

    pub fn from_original(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.shift
    }

    pub fn value_to_original(&self, v: f64) -> f64 {
        v + self.value_offset
    }
}

/// Substitutes `x = x̃ + x₀`. Since `fᵢ(x̃ + x₀) = x̃ᵀx̃ − 2(aᵢ − x₀)ᵀx̃ + fᵢ(x₀)`, the new data
/// are `aᵢ − x₀` and `bᵢ' = fᵢ(x₀) < 0`.
pub fn recenter(uq: &UqInstance, x0: &DVector<f64>, tol: f64) -> Result<Recentered> {
    uq.check_point(x0)?;
    let mut constraints = Vec::with_capacity(uq.len());
    for (index, c) in uq.constraints().iter().enumerate() {
        let value = c.eval(x0);
        if value >= -tol * c.b.abs().max(1.0) {
            return Err(Error::NotInterior { index, value });
        }
        constraints.push(UqConstraint {
            a: &c.a - x0,
            b: value,
        });
    }
    Ok(Recentered {
        instance: UqInstance::new(uq.a0() - x0, constraints)?,
        shift: x0.clone(),
        value_offset: uq.objective(x0),
    })
}

/// `fᵢ(x) ≤ tol · max(1, |bᵢ|)` for every constraint.
pub fn feasible(uq: &UqInstance, x: &DVector<f64>, tol: f64) -> bool {
    uq.constraints()
        .iter()
        .all(|c| c.eval(x) <= tol * c.b.abs().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn example_31() -> UqInstance {
        UqInstance::from_parts(&[0.0], &[(&[-0.5], -4.0), (&[0.5], 0.0)]).unwrap()
    }

    /// Brute-force minimum of max_i ‖x − aᵢ‖/rᵢ on a grid (n ≤ 2).
    fn grid_min_scaled(inst: &CcbInstance, lo: f64, hi: f64, steps: usize) -> f64 {
        let h = (hi - lo) / steps as f64;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            if inst.dim() == 1 {
                best = best.min(inst.scaled_distance(&v(&[lo + i as f64 * h])));
                continue;
            }
            for j in 0..=steps {
                let x = v(&[lo + i as f64 * h, lo + j as f64 * h]);
                best = best.min(inst.scaled_distance(&x));
            }
        }
        best
    }

    #[test]
    fn single_ball_certificate_is_center() {
        let inst = CcbInstance::from_pairs(&[(&[1.0, -2.0], 3.0)]).unwrap();
        let cert = validate(&inst).unwrap();
        assert_eq!(cert.point, v(&[1.0, -2.0]));
        assert_eq!(cert.gamma, 0.0);
    }

    #[test]
    fn two_unit_balls_midpoint() {
        let inst = CcbInstance::from_pairs(&[(&[0.0, 0.0], 1.0), (&[1.0, 0.0], 1.0)]).unwrap();
        let grid = grid_min_scaled(&inst, -0.5, 1.5, 400);
        assert!((grid - 0.5).abs() < 1e-9);
        let cert = validate(&inst).unwrap();
        assert!((cert.gamma - 0.5).abs() < 1e-6);
        assert!((&cert.point - v(&[0.5, 0.0])).norm() < 1e-5);
        assert!((inst.scaled_distance(&cert.point) - cert.gamma).abs() < 1e-10);
    }

    #[test]
    fn disjoint_balls_are_rejected() {
        let inst = CcbInstance::from_pairs(&[(&[0.0, 0.0], 1.0), (&[3.0, 0.0], 1.0)]).unwrap();
        assert!(matches!(validate(&inst), Err(Error::EmptyInterior { .. })));
    }

    #[test]
    fn tangent_balls_are_rejected() {
        let inst = CcbInstance::from_pairs(&[(&[0.0, 0.0], 1.0), (&[2.0, 0.0], 1.0)]).unwrap();
        assert!(matches!(validate(&inst), Err(Error::EmptyInterior { .. })));
    }

    #[test]
    fn identical_balls_have_zero_gamma() {
        let inst =
            CcbInstance::from_pairs(&[(&[1.0, 1.0], 2.0), (&[1.0, 1.0], 2.0), (&[1.0, 1.0], 2.0)]).unwrap();
        let cert = find_interior_point(&inst, 1e-10);
        assert_eq!(cert.gamma, 0.0);
        assert_eq!(cert.point, v(&[1.0, 1.0]));
    }

    #[test]
    fn symmetric_radius_two_pair() {
        let inst = CcbInstance::from_pairs(&[(&[-1.0, 0.0], 2.0), (&[1.0, 0.0], 2.0)]).unwrap();
        let grid = grid_min_scaled(&inst, -2.0, 2.0, 400);
        assert!((grid - 0.5).abs() < 1e-9);
        let cert = find_interior_point(&inst, 1e-10);
        assert!((cert.gamma - 0.5).abs() < 1e-6);
        assert!(cert.point.norm() < 1e-5);
    }

    #[test]
    fn one_dimensional_interior_point() {
        let inst = CcbInstance::from_pairs(&[(&[-0.5], 4.25f64.sqrt()), (&[0.5], 0.5)]).unwrap();
        let grid = grid_min_scaled(&inst, -1.0, 1.0, 20000);
        let cert = find_interior_point(&inst, 1e-10);
        assert!(cert.gamma <= grid + 1e-9);
        assert!(cert.gamma >= grid - 1e-4);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = CcbInstance::new(vec![
            Ball::from_slice(&[0.0, 0.0], 1.0).unwrap(),
            Ball::from_slice(&[0.0], 1.0).unwrap(),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 1 }));
        let inst = CcbInstance::from_pairs(&[(&[0.0, 0.0], 1.0)]).unwrap();
        assert!(inner_uq(&inst, &v(&[1.0])).is_err());
        assert!(Ball::from_slice(&[0.0], 0.0).is_err());
        assert!(Ball::from_slice(&[f64::NAN], 1.0).is_err());
    }

    #[test]
    fn inner_uq_examples() {
        let unit = CcbInstance::from_pairs(&[(&[0.0], 1.0)]).unwrap();
        let uq = inner_uq(&unit, &v(&[0.0])).unwrap();
        assert_eq!(uq.a0(), &v(&[0.0]));
        assert_eq!(uq.constraints()[0].a, v(&[0.0]));
        assert_eq!(uq.constraints()[0].b, -1.0);

        let ex41 = CcbInstance::from_pairs(&[(&[-0.5], 4.25f64.sqrt()), (&[0.5], 0.5)]).unwrap();
        let uq = inner_uq(&ex41, &v(&[0.0])).unwrap();
        assert!((uq.constraints()[0].b + 4.0).abs() < 1e-12);
        assert_eq!(uq.constraints()[1].b, 0.0);

        let off = CcbInstance::from_pairs(&[(&[1.0, 1.0], 2.0)]).unwrap();
        let uq = inner_uq(&off, &v(&[3.0, 0.0])).unwrap();
        assert_eq!(uq.a0(), &v(&[3.0, 0.0]));
        assert_eq!(uq.constraints()[0].b, -2.0);
    }

    #[test]
    fn recenter_identity_at_origin() {
        let uq = UqInstance::from_parts(&[0.3], &[(&[0.1], -1.0), (&[-0.2], -2.0)]).unwrap();
        let rc = recenter(&uq, &v(&[0.0]), FEAS_TOL).unwrap();
        assert_eq!(rc.instance, uq);
        assert_eq!(rc.value_offset, 0.0);
    }

    #[test]
    fn recenter_shift_formula() {
        let uq = UqInstance::from_parts(&[0.0], &[(&[0.5], 0.0)]).unwrap();
        let x0 = v(&[0.5]);
        let rc = recenter(&uq, &x0, FEAS_TOL).unwrap();
        assert!((rc.instance.constraints()[0].b + 0.25).abs() < 1e-15);
        // fᵢ(x + x₀) must agree with the translated constraint everywhere.
        for k in 0..10 {
            let x = v(&[-2.0 + 0.45 * k as f64]);
            let lhs = uq.constraints()[0].eval(&(&x + &x0));
            let rhs = rc.instance.constraints()[0].eval(&x);
            assert!((lhs - rhs).abs() < 1e-12);
        }
        assert!(matches!(
            recenter(&uq, &v(&[0.0]), FEAS_TOL),
            Err(Error::NotInterior { index: 0, .. })
        ));
    }

    #[test]
    fn feasible_examples() {
        let uq = example_31();
        assert!(feasible(&uq, &v(&[1.0]), FEAS_TOL));
        assert!(!feasible(&uq, &v(&[1.1]), FEAS_TOL));
        assert!(feasible(&uq, &v(&[0.5]), FEAS_TOL));
        let centered = UqInstance::from_parts(&[0.2], &[(&[0.1], -1.0)]).unwrap();
        assert!(feasible(&centered, &v(&[0.0]), FEAS_TOL));
    }

    #[test]
    fn to_balls_round_trip() {
        let inst = CcbInstance::from_pairs(&[(&[0.0, 1.0], 2.0), (&[1.0, 0.0], 1.5)]).unwrap();
        let back = inner_uq(&inst, &v(&[0.0, 0.0])).unwrap().to_balls().unwrap();
        for (a, b) in inst.balls().iter().zip(back.balls()) {
            assert_eq!(a.center, b.center);
            assert!((a.radius - b.radius).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn recenter_preserves_objective(
            a0 in -2.0..2.0f64, a1 in -1.0..1.0f64, a2 in -1.0..1.0f64,
            x0 in -0.3..0.3f64, x in -3.0..3.0f64,
        ) {
            let uq = UqInstance::from_parts(&[a0], &[(&[a1], -1.0), (&[a2], -1.5)]).unwrap();
            let rc = recenter(&uq, &v(&[x0]), FEAS_TOL).unwrap();
            let y = rc.from_original(&v(&[x]));
            let there = rc.value_to_original(rc.instance.objective(&y));
            let back = rc.to_original(&y);
            prop_assert!((there - uq.objective(&v(&[x]))).abs() < 1e-12);
            prop_assert!((back[0] - x).abs() < 1e-15);
            for (c, d) in uq.constraints().iter().zip(rc.instance.constraints()) {
                prop_assert!((c.eval(&v(&[x])) - d.eval(&y)).abs() < 1e-12);
            }
        }

        #[test]
        fn interior_point_translation_equivariant(
            dx in -50.0..50.0f64, dy in -50.0..50.0f64,
            cx in -1.0..1.0f64, cy in -1.0..1.0f64, r1 in 1.0..2.0f64, r2 in 1.0..2.0f64,
        ) {
            let inst = CcbInstance::from_pairs(&[(&[0.0, 0.0], r1), (&[cx, cy], r2), (&[cy, -cx], 1.5)]).unwrap();
            let d = v(&[dx, dy]);
            let a = find_interior_point(&inst, 1e-10);
            let b = find_interior_point(&inst.translated(&d), 1e-10);
            prop_assert!((a.gamma - b.gamma).abs() < 1e-9);
            prop_assert!((&a.point + &d - &b.point).norm() < 1e-6);
        }

        #[test]
        fn interior_point_not_below_grid(
            cx in -1.0..1.0f64, cy in -1.0..1.0f64, r1 in 0.5..2.0f64, r2 in 0.5..2.0f64,
        ) {
            let inst = CcbInstance::from_pairs(&[(&[0.0, 0.0], r1), (&[cx, cy], r2)]).unwrap();
            let cert = find_interior_point(&inst, 1e-10);
            let grid = grid_min_scaled(&inst, -1.5, 1.5, 300);
            prop_assert!(cert.gamma >= grid - 2e-2);
            prop_assert!(cert.gamma <= grid + 1e-9);
        }
    }
}
