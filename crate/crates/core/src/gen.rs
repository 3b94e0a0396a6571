//! Random instances with a nonempty interior by construction.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{Ball, CcbInstance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenConfig {
    pub dim: usize,
    pub balls: usize,
    pub seed: u64,
    /// Anchor and centers are drawn from `[−spread, spread]ⁿ`.
    pub spread: f64,
    /// Radii are `‖x₀ − aᵢ‖(1 + margin) + margin`, so `γ ≤ 1/(1 + margin)`.
    pub margin: f64,
}

impl GenConfig {
    pub fn new(dim: usize, balls: usize, seed: u64) -> Self {
        Self {
            dim,
            balls,
            seed,
            spread: 1.0,
            margin: 0.5,
        }
    }
}

/// Draws an anchor `x₀` and `p` centers uniformly from the cube and sizes each ball so that
/// `x₀` is strictly inside it.
pub fn generate(cfg: &GenConfig) -> Result<CcbInstance> {
    if cfg.dim == 0 || cfg.balls == 0 {
        return Err(Error::InvalidInstance("dimension and ball count must be positive".into()));
    }
    if !(cfg.spread > 0.0) || !(cfg.margin > 0.0) {
        return Err(Error::InvalidInstance("spread and margin must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draw = |rng: &mut ChaCha8Rng| DVector::from_fn(cfg.dim, |_, _| rng.random_range(-cfg.spread..=cfg.spread));
    let anchor = draw(&mut rng);
    let balls = (0..cfg.balls)
        .map(|_| {
            let center = draw(&mut rng);
            let radius = (&anchor - &center).norm() * (1.0 + cfg.margin) + cfg.margin;
            Ball::new(center, radius)
        })
        .collect::<Result<Vec<_>>>()?;
    CcbInstance::new(balls)
}
