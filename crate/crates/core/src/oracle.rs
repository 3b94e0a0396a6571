//! Brute-force reference computations used to check the solvers.
//!
//! Everything here works on plain slices with its own distance and feasibility code, so a
//! bug in the solvers' linear algebra cannot hide itself by also appearing in the reference.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::problem::{CcbInstance, UqInstance};

/// Cap on the number of grid points visited by [`oracle_uq`].
pub const MAX_GRID_POINTS: f64 = 2.0e6;

/// Bisection steps when shooting rays to the boundary.
pub const RAY_STEPS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub samples: usize,
    pub grid_step: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            grid_step: 0.01,
            seed: 0,
        }
    }
}

/// A feasible point and its objective value, with the resolution of the search that found it.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub point: DVector<f64>,
    pub resolution: f64,
}

/// Smallest ball around a point sample, with the sampling resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleBall {
    pub center: DVector<f64>,
    pub squared_radius: f64,
    pub resolution: f64,
}

/// Balls `‖x − cᵢ‖² ≤ Rᵢ` as plain vectors.
struct Balls {
    centers: Vec<Vec<f64>>,
    r2: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Balls {
    fn from_uq(uq: &UqInstance) -> Self {
        let centers: Vec<Vec<f64>> = uq.constraints().iter().map(|c| c.a.iter().copied().collect()).collect();
        let r2 = uq
            .constraints()
            .iter()
            .zip(&centers)
            .map(|(c, a)| a.iter().map(|v| v * v).sum::<f64>() - c.b)
            .collect();
        Self { centers, r2 }
    }

    fn from_ccb(inst: &CcbInstance) -> Self {
        Self {
            centers: inst.balls().iter().map(|b| b.center.iter().copied().collect()).collect(),
            r2: inst.balls().iter().map(|b| b.radius * b.radius).collect(),
        }
    }

    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.centers.iter().zip(&self.r2).all(|(c, r2)| sq_dist(x, c) <= *r2)
    }

    fn scaled(&self, x: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, (c, r2)) in self.centers.iter().zip(&self.r2).enumerate() {
            let v = sq_dist(x, c).sqrt() / r2.sqrt();
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Subgradient descent on `max_i ‖x − cᵢ‖/√Rᵢ` from the centroid; `None` unless the
    /// result is strictly inside every ball.
    fn interior_point(&self) -> Option<Vec<f64>> {
        if self.r2.iter().any(|r| !(*r > 0.0)) {
            return None;
        }
        let n = self.dim();
        let p = self.centers.len() as f64;
        let mut x: Vec<f64> = (0..n)
            .map(|k| self.centers.iter().map(|c| c[k]).sum::<f64>() / p)
            .collect();
        let spread = self
            .centers
            .iter()
            .map(|c| sq_dist(c, &x).sqrt())
            .fold(0.0, f64::max)
            .max(self.r2.iter().map(|r| r.sqrt()).fold(f64::INFINITY, f64::min));
        let (mut best_val, mut best) = (self.scaled(&x).0, x.clone());
        for k in 1..=20_000 {
            let (val, i) = self.scaled(&x);
            if val < best_val {
                best_val = val;
                best = x.clone();
            }
            let d: Vec<f64> = x.iter().zip(&self.centers[i]).map(|(a, b)| a - b).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = spread / (k as f64).sqrt() * 0.5;
            for (xk, dk) in x.iter_mut().zip(&d) {
                *xk -= step * dk / norm;
            }
        }
        (best_val < 1.0 - 1e-9).then_some(best)
    }

    /// Largest feasible point on the segment from the interior point `from` to `to`.
    fn pull_back(&self, from: &[f64], to: &[f64], steps: usize) -> Vec<f64> {
        let (mut lo, mut hi) = (0.0, 1.0);
        let at = |t: f64| -> Vec<f64> { from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect() };
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            if self.contains(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(lo)
    }
}

fn uq_objective(a0: &[f64], x: &[f64]) -> f64 {
    x.iter().zip(a0).map(|(v, a)| v * v - 2.0 * a * v).sum()
}

/// Lower bound on the optimum of `uq` from a grid (`n ≤ 3`) or ray sampling (`n > 3`),
/// followed by a local ascent that projects trial points back onto the feasible set.
///
/// Returns `None` if no feasible point is found at all.
pub fn oracle_uq(uq: &UqInstance, cfg: &OracleConfig) -> Option<OracleEstimate> {
    let balls = Balls::from_uq(uq);
    if balls.r2.iter().any(|r| *r < 0.0) {
        return None;
    }
    let n = balls.dim();
    let a0: Vec<f64> = uq.a0().iter().copied().collect();
    let interior = balls.interior_point();

    // Box that contains every feasible point.
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for (c, r2) in balls.centers.iter().zip(&balls.r2) {
        let r = r2.sqrt();
        for k in 0..n {
            lo[k] = lo[k].max(c[k] - r);
            hi[k] = hi[k].min(c[k] + r);
        }
    }
    if (0..n).any(|k| lo[k] > hi[k]) {
        return None;
    }
    let far = (0..n)
        .map(|k| (lo[k] - a0[k]).abs().max((hi[k] - a0[k]).abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let grad_bound = 2.0 * far;

    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |x: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        if balls.contains(&x) {
            let v = uq_objective(&a0, &x);
            if best.as_ref().is_none_or(|b| v > b.0) {
                *best = Some((v, x));
            }
        }
    };

    let resolution;
    if n <= 3 {
        let extent = (0..n).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let mut h = cfg.grid_step.max(f64::MIN_POSITIVE);
        while ((extent / h).floor() + 1.0).powi(n as i32) > MAX_GRID_POINTS {
            h *= 1.25;
        }
        let counts: Vec<usize> = (0..n).map(|k| ((hi[k] - lo[k]) / h).floor() as usize + 1).collect();
        let total: usize = counts.iter().product();
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let x: Vec<f64> = (0..n).map(|k| lo[k] + idx[k] as f64 * h).collect();
            consider(x, &mut best);
            for k in 0..n {
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        resolution = grad_bound * h * (n as f64).sqrt() / 2.0 + h * h * n as f64;
    } else {
        let x0 = interior.as_ref()?;
        let reach = 2.0 * balls.r2.iter().map(|r| r.sqrt()).fold(f64::INFINITY, f64::min);
        for s in 0..cfg.samples {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(s as u64);
            let u = gaussian_direction(&mut rng, n);
            let to: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| a + reach * b).collect();
            consider(balls.pull_back(x0, &to, 60), &mut best);
        }
        let spacing = reach * (cfg.samples as f64).powf(-1.0 / (n as f64 - 1.0));
        resolution = grad_bound * spacing;
    }
    if best.is_none() {
        if let Some(x0) = interior.as_ref() {
            consider(x0.clone(), &mut best);
        }
    }
    let (mut value, mut x) = best?;

    if let Some(x0) = interior.as_ref() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut step = (hi.iter().zip(&lo).map(|(a, b)| a - b).fold(0.0, f64::max) / 50.0).max(1e-6);
        while step > 1e-10 * scale {
            let mut improved = false;
            for _ in 0..50 {
                let mut pass = false;
                let mut dirs: Vec<Vec<f64>> = Vec::new();
                for k in 0..n {
                    for s in [1.0, -1.0] {
                        let mut d = vec![0.0; n];
                        d[k] = s;
                        dirs.push(d);
                    }
                }
                for _ in 0..4 * n {
                    dirs.push(gaussian_direction(&mut rng, n));
                }
                for d in dirs {
                    let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
                    let y = if balls.contains(&y) { y } else { balls.pull_back(x0, &y, 60) };
                    let v = uq_objective(&a0, &y);
                    if v > value && balls.contains(&y) {
                        value = v;
                        x = y;
                        pass = true;
                    }
                }
                if !pass {
                    break;
                }
                improved = true;
            }
            if !improved {
                step *= 0.5;
            }
        }
    }

    Some(OracleEstimate {
        value,
        point: DVector::from_vec(x),
        resolution,
    })
}

fn gaussian_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return u.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Boundary points found by shooting rays from an interior point in random directions and
/// bisecting `RAY_STEPS` times on the segment of length `2 r_min`.
///
/// Each sample uses its own random stream, so the result depends only on the seed.
pub fn sample_boundary(inst: &CcbInstance, cfg: &OracleConfig) -> Vec<DVector<f64>> {
    let balls = Balls::from_ccb(inst);
    let Some(x0) = balls.interior_point() else {
        return Vec::new();
    };
    (0..cfg.samples)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(s as u64);
            let u = gaussian_direction(&mut rng, balls.dim());
            DVector::from_vec(shoot(&balls, &x0, &u))
        })
        .collect()
}

fn shoot(balls: &Balls, x0: &[f64], u: &[f64]) -> Vec<f64> {
    let reach = 2.0 * balls.r2.iter().map(|r| r.sqrt()).fold(f64::INFINITY, f64::min);
    let to: Vec<f64> = x0.iter().zip(u).map(|(a, b)| a + reach * b).collect();
    balls.pull_back(x0, &to, RAY_STEPS)
}

/// Smallest ball enclosing boundary samples of `Ω`, refined by resampling narrowing cones
/// around the directions of the current support points.
///
/// The samples lie in `Ω`, so the squared radius is a lower bound on the optimum up to the
/// reported resolution.
pub fn oracle_ccb(inst: &CcbInstance, cfg: &OracleConfig) -> OracleBall {
    let balls = Balls::from_ccb(inst);
    let n = balls.dim();
    let Some(x0) = balls.interior_point() else {
        let c = DVector::from_column_slice(&balls.centers[0]);
        return OracleBall {
            center: c,
            squared_radius: 0.0,
            resolution: f64::INFINITY,
        };
    };
    let mut points: Vec<Vec<f64>> = sample_boundary(inst, cfg).into_iter().map(|p| p.iter().copied().collect()).collect();
    let (mut center, mut r2, mut support) = meb_with_support(&points);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x2545_f491_4f6c_dd1d);
    let mut width = 0.2;
    let per_support = 64;
    for _ in 0..12 {
        for s in &support {
            let dir: Vec<f64> = s.iter().zip(&x0).map(|(a, b)| a - b).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            for _ in 0..per_support {
                let g = gaussian_direction(&mut rng, n);
                let u: Vec<f64> = dir.iter().zip(&g).map(|(d, e)| d / norm + width * e).collect();
                points.push(shoot(&balls, &x0, &u));
            }
        }
        (center, r2, support) = meb_with_support(&points);
        width *= 0.3;
    }

    let reach = 2.0 * balls.r2.iter().map(|r| r.sqrt()).fold(f64::INFINITY, f64::min);
    let max_dist = points.iter().map(|p| sq_dist(p, &x0).sqrt()).fold(0.0, f64::max);
    let delta = reach * 0.5f64.powi(RAY_STEPS as i32) + width * max_dist;
    OracleBall {
        center: DVector::from_vec(center),
        squared_radius: r2,
        resolution: 2.0 * r2.sqrt() * delta + delta * delta,
    }
}

/// Minimum enclosing ball of `points` (center, squared radius) by move-to-front Welzl.
pub fn meb(points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let (c, r2, _) = meb_with_support(points);
    (c, r2)
}

type SupportBall = (Vec<f64>, f64, Vec<Vec<f64>>);

fn meb_with_support(points: &[Vec<f64>]) -> SupportBall {
    let Some(first) = points.first() else {
        return (Vec::new(), 0.0, Vec::new());
    };
    let n = first.len();
    let mut pts = points.to_vec();
    let mut support = Vec::new();
    let (c, r2, sup) = mtf(&mut pts, points.len(), &mut support, n);
    // Guard against round-off in the support solve.
    let r2 = points.iter().map(|p| sq_dist(p, &c)).fold(r2, f64::max);
    (c, r2, sup)
}

fn mtf(pts: &mut Vec<Vec<f64>>, end: usize, support: &mut Vec<Vec<f64>>, n: usize) -> SupportBall {
    let (c, r2) = ball_on(support, n);
    let mut ball = (c, r2, support.clone());
    if support.len() == n + 1 {
        return ball;
    }
    let mut i = 0;
    while i < end {
        let inside = !ball.0.is_empty() && sq_dist(&pts[i], &ball.0) <= ball.1 * (1.0 + 1e-12) + 1e-300;
        if !inside {
            support.push(pts[i].clone());
            ball = mtf(pts, i, support, n);
            support.pop();
            let p = pts.remove(i);
            pts.insert(0, p);
        }
        i += 1;
    }
    ball
}

/// Smallest ball with every support point on its boundary.
fn ball_on(support: &[Vec<f64>], n: usize) -> (Vec<f64>, f64) {
    match support.len() {
        0 => (Vec::new(), -1.0),
        1 => (support[0].clone(), 0.0),
        k => {
            let s0 = &support[0];
            let m = k - 1;
            let q = DMatrix::from_fn(n, m, |r, c| support[c + 1][r] - s0[r]);
            let gram = q.transpose() * &q;
            let rhs = DVector::from_fn(m, |j, _| 0.5 * gram[(j, j)]);
            let lambda = gram
                .clone()
                .svd(true, true)
                .solve(&rhs, 1e-14 * gram.norm())
                .unwrap_or_else(|_| DVector::zeros(m));
            let offset = &q * lambda;
            let center: Vec<f64> = s0.iter().zip(offset.iter()).map(|(a, b)| a + b).collect();
            let r2 = support.iter().map(|p| sq_dist(p, &center)).fold(0.0, f64::max);
            (center, r2)
        }
    }
}
