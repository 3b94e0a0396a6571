//! Exact Chebyshev center in the plane.
//!
//! The boundary of `Ω` is a union of arcs of the input circles. If some boundary arc spans at
//! least half of its circle, that ball is itself the optimal cover. Otherwise every arc is a
//! minor arc and the smallest circle enclosing all arc endpoints is optimal; it is found with
//! Welzl's randomized algorithm.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ccb::{self, CcbCertificate, CcbMethod, CcbSolution, SolveStatus};
use crate::error::{Error, Result};
use crate::problem::CcbInstance;

/// Tolerance, in radians, for treating an arc as spanning half its circle.
pub const MAJOR_ARC_TOL: f64 = 1e-9;

const MERGE_TOL: f64 = 1e-12;
const WELZL_SEED: u64 = 0x5eed;

pub type Point = [f64; 2];

/// A counter-clockwise arc `[start, start + span]` of one circle.
#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub span: f64,
    pub start_point: Point,
    pub end_point: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleArcs {
    pub ball: usize,
    /// No other ball cuts this circle, so the whole circle lies in every other ball.
    pub full_circle: bool,
    pub arcs: Vec<Arc>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArcSet {
    pub circles: Vec<CircleArcs>,
    /// Unordered ball pairs examined; always `p(p−1)/2`.
    pub pairs_examined: usize,
}

impl ArcSet {
    /// All arc endpoints, with near-duplicates (within `1e−9`) removed.
    pub fn endpoints(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for arc in self.circles.iter().flat_map(|c| &c.arcs) {
            for p in [arc.start_point, arc.end_point] {
                if !out.iter().any(|q| dist(*q, p) <= 1e-9) {
                    out.push(p);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
    pub support: Vec<Point>,
}

impl Circle {
    fn contains(&self, p: Point) -> bool {
        dist(self.center, p) <= self.radius + 1e-12 * self.radius.max(1.0)
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn point_on(center: &DVector<f64>, radius: f64, angle: f64) -> Point {
    [center[0] + radius * angle.cos(), center[1] + radius * angle.sin()]
}

/// Angular interval of a circle lying inside another ball: `None` for the whole circle,
/// `Some(None)` for the empty set, otherwise `Some(Some((start, span)))`.
type Interval = Option<Option<(f64, f64)>>;

/// The [`Interval`] of circle `i` inside ball `j`.
fn allowed_interval(inst: &CcbInstance, i: usize, j: usize) -> Interval {
    let (bi, bj) = (&inst.balls()[i], &inst.balls()[j]);
    let v = &bi.center - &bj.center;
    let d = v.norm();
    if d == 0.0 {
        return if bj.radius >= bi.radius { None } else { Some(None) };
    }
    // cos(θ − φ) ≤ s with φ the direction of aᵢ − aⱼ.
    let s = (bj.radius * bj.radius - bi.radius * bi.radius - d * d) / (2.0 * bi.radius * d);
    if s >= 1.0 {
        return None;
    }
    if s < -1.0 {
        return Some(None);
    }
    let half = PI - s.acos();
    let mid = v[1].atan2(v[0]) + PI;
    Some(Some(((mid - half).rem_euclid(TAU), 2.0 * half)))
}

/// Intersects a sorted list of intervals (relative to a reference angle) with one circular
/// interval `[start, start + span]`, also relative to the reference.
fn intersect(current: &[(f64, f64)], start: f64, span: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(lo, hi) in current {
        for shift in [-TAU, 0.0, TAU] {
            let (s, e) = (start + shift, start + span + shift);
            let (a, b) = (lo.max(s), hi.min(e));
            if b >= a - MERGE_TOL {
                out.push((a, b.max(a)));
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for iv in out {
        match merged.last_mut() {
            Some(last) if iv.0 <= last.1 + MERGE_TOL => last.1 = last.1.max(iv.1),
            _ => merged.push(iv),
        }
    }
    merged
}

/// Splits every circle into the arcs that lie on the boundary of `Ω`.
pub fn arc_decomposition(inst: &CcbInstance) -> Result<ArcSet> {
    if inst.dim() != 2 {
        return Err(Error::DimensionError(inst.dim()));
    }
    let p = inst.len();
    let mut constraints: Vec<Vec<Interval>> = vec![Vec::new(); p];
    let mut pairs_examined = 0;
    for i in 0..p {
        for j in i + 1..p {
            pairs_examined += 1;
            constraints[i].push(allowed_interval(inst, i, j));
            constraints[j].push(allowed_interval(inst, j, i));
        }
    }

    let mut circles = Vec::with_capacity(p);
    for (i, cons) in constraints.iter().enumerate() {
        let ball = &inst.balls()[i];
        let mut entry = CircleArcs {
            ball: i,
            full_circle: false,
            arcs: Vec::new(),
        };
        if cons.contains(&Some(None)) {
            circles.push(entry);
            continue;
        }
        let cuts: Vec<(f64, f64)> = cons.iter().filter_map(|c| c.and_then(|x| x)).collect();
        let Some(&(reference, first_span)) = cuts.first() else {
            entry.full_circle = true;
            circles.push(entry);
            continue;
        };
        let mut current = vec![(0.0, first_span)];
        for &(start, span) in &cuts[1..] {
            current = intersect(&current, (start - reference).rem_euclid(TAU), span);
            if current.is_empty() {
                break;
            }
        }
        entry.arcs = current
            .into_iter()
            .map(|(lo, hi)| {
                let start = (reference + lo).rem_euclid(TAU);
                Arc {
                    start,
                    span: hi - lo,
                    start_point: point_on(&ball.center, ball.radius, start),
                    end_point: point_on(&ball.center, ball.radius, reference + hi),
                }
            })
            .collect();
        circles.push(entry);
    }
    Ok(ArcSet {
        circles,
        pairs_examined,
    })
}

/// Returns ball `i` as the answer when its circle is entirely on the boundary or has a
/// boundary arc spanning at least `π − 1e−9`: `Ω` then contains two antipodal points of a
/// circle that encloses it.
pub fn major_arc_shortcut(arcs: &ArcSet, inst: &CcbInstance) -> Option<CcbSolution> {
    let hit = arcs.circles.iter().find(|c| {
        c.full_circle || c.arcs.iter().any(|a| a.span >= PI - MAJOR_ARC_TOL)
    })?;
    let ball = &inst.balls()[hit.ball];
    Some(CcbSolution {
        center: ball.center.clone(),
        squared_radius: ball.radius * ball.radius,
        method: CcbMethod::Planar,
        certificate: Some(CcbCertificate::Planar {
            shortcut: Some(hit.ball),
            endpoints: 0,
            pairs: arcs.pairs_examined,
        }),
        status: SolveStatus::Ok,
        iterations: 0,
        witnesses: Vec::new(),
    })
}

fn circle_from_two(a: Point, b: Point) -> Circle {
    Circle {
        center: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
        radius: 0.5 * dist(a, b),
        support: vec![a, b],
    }
}

fn circle_from_three(a: Point, b: Point, c: Point) -> Circle {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let det = 2.0 * (bx * cy - by * cx);
    let scale = (bx * bx + by * by).max(cx * cx + cy * cy);
    if det.abs() <= 1e-14 * scale {
        // Collinear: the farthest pair spans the other point.
        return [circle_from_two(a, b), circle_from_two(a, c), circle_from_two(b, c)]
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .unwrap();
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / det;
    let uy = (bx * c2 - cx * b2) / det;
    let center = [a[0] + ux, a[1] + uy];
    Circle {
        center,
        radius: [a, b, c].iter().map(|p| dist(center, *p)).fold(0.0, f64::max),
        support: vec![a, b, c],
    }
}

/// Smallest circle enclosing `points`. The input order is shuffled with `seed`, which only
/// affects running time.
pub fn welzl(points: &[Point], seed: u64) -> Circle {
    if points.is_empty() {
        return Circle {
            center: [0.0, 0.0],
            radius: 0.0,
            support: Vec::new(),
        };
    }
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut c = Circle {
        center: pts[0],
        radius: 0.0,
        support: vec![pts[0]],
    };
    for i in 1..pts.len() {
        if c.contains(pts[i]) {
            continue;
        }
        c = Circle {
            center: pts[i],
            radius: 0.0,
            support: vec![pts[i]],
        };
        for j in 0..i {
            if c.contains(pts[j]) {
                continue;
            }
            c = circle_from_two(pts[i], pts[j]);
            for k in 0..j {
                if !c.contains(pts[k]) {
                    c = circle_from_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    c
}

/// Exact planar solver.
///
/// The result is checked against the inner maximization at the returned center; if the two
/// disagree by more than `1e−6` the ellipsoid method is used instead and the status says so.
pub fn solve_planar(inst: &CcbInstance) -> Result<CcbSolution> {
    let arcs = arc_decomposition(inst)?;
    if let Some(sol) = major_arc_shortcut(&arcs, inst) {
        return Ok(sol);
    }
    let endpoints = arcs.endpoints();
    let circle = welzl(&endpoints, WELZL_SEED);
    let center = DVector::from_column_slice(&circle.center);
    let (value, witness) = ccb::farthest_point(inst, &center)?;
    let r2 = circle.radius * circle.radius;
    if (value - r2).abs() <= 1e-6 * r2.max(1.0) {
        return Ok(CcbSolution {
            center,
            squared_radius: value,
            method: CcbMethod::Planar,
            certificate: Some(CcbCertificate::Planar {
                shortcut: None,
                endpoints: endpoints.len(),
                pairs: arcs.pairs_examined,
            }),
            status: SolveStatus::Ok,
            iterations: 0,
            witnesses: vec![witness],
        });
    }
    let fallback = match ccb::solve_ccb_ellipsoid(inst, 1e-8, 1_000_000) {
        Ok(sol) => sol,
        Err(Error::IterationLimit { best: Some(best), .. }) => *best,
        Err(e) => return Err(e),
    };
    Ok(CcbSolution {
        status: SolveStatus::PlanarFallback,
        ..fallback
    })
}
