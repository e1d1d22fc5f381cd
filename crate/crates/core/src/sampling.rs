//! Seeded random pure Gaussian states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::params::PhysParams;
use crate::phase_space::GaussianState;

/// Largest variance squeezing factor e^{2r} drawn by default (20 dB).
pub const MAX_SQUEEZE_FACTOR: f64 = 100.0;

/// Draws pure Gaussian states: squeezing factor e^{2r} log-uniform on
/// [1, max_factor], squeezing angle uniform, mean standard normal in
/// oscillator units.
pub struct StateSampler {
    rng: ChaCha8Rng,
    max_factor: f64,
    mean_scale: f64,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        Self::with_range(seed, MAX_SQUEEZE_FACTOR, 1.0)
    }

    pub fn with_range(seed: u64, max_factor: f64, mean_scale: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_factor: max_factor.max(1.0),
            mean_scale,
        }
    }

    /// (r, phi) of the next draw.
    pub fn squeeze(&mut self) -> (f64, f64) {
        let u: f64 = self.rng.random();
        let r = 0.5 * u * self.max_factor.ln();
        let phi = self.rng.random::<f64>() * std::f64::consts::PI;
        (r, phi)
    }

    pub fn sample(&mut self, p: &PhysParams) -> GaussianState {
        let (r, phi) = self.squeeze();
        let mq: f64 = StandardNormal.sample(&mut self.rng);
        let mp: f64 = StandardNormal.sample(&mut self.rng);
        let mut s = GaussianState::squeezed_vacuum(p, r, phi);
        s.mean = p.mean_to_raw([self.mean_scale * mq, self.mean_scale * mp]);
        s
    }

    pub fn take(&mut self, p: &PhysParams, n: usize) -> Vec<GaussianState> {
        (0..n).map(|_| self.sample(p)).collect()
    }
}
