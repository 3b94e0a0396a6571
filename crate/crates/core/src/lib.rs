//! Chebyshev center of an intersection of balls.
//!
//! Given balls `‖x − aᵢ‖ ≤ rᵢ` in ℝⁿ with intersection `Ω`, find the `z` minimizing
//! `max_{x∈Ω} ‖x − z‖²`. The inner maximization is a nonconvex quadratic program with identity
//! quadratic forms; this crate provides
//!
//! - its linear relaxation and dual ([`lp`]), tightness analysis, an exact active-set
//!   enumeration and a rounding with a guaranteed ratio ([`uq`]);
//! - the simplex-constrained quadratic relaxation with its ratio certificate and the ellipsoid
//!   method with exact inner maximization ([`ccb`]);
//! - an exact planar algorithm ([`planar`]);
//! - the reduction from integer partition ([`hardness`]);
//! - brute-force reference computations ([`oracle`]), instance files ([`io`]) and a random
//!   instance generator ([`gen`]).

pub mod ccb;
pub mod ellipsoid;
pub mod error;
pub mod gen;
pub mod hardness;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod planar;
pub mod problem;
pub mod uq;

pub use ccb::{
    ccb_subgradient, evaluate_center, farthest_point, solve_ccb_ellipsoid, solve_ccb_sqp, solve_sqp,
    sqp_certificate, CcbCertificate, CcbMethod, CcbSolution, RatioCertificate, SqpResult,
};
pub use error::{Error, Result};
pub use lp::{simplex, uq_dlp, uq_lp, LpOutcome, LpProblem, LpStatus};
pub use planar::solve_planar;
pub use problem::{
    feasible, find_interior_point, inner_uq, recenter, validate, Ball, CcbInstance, InteriorCertificate,
    UqConstraint, UqInstance,
};
pub use uq::{approx_round, duality_conditions, sdp_value, solve_exact, trichotomy, UqSolution};
