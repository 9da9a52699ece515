//! Seeded sampling of probe states. All bound checks in this crate sample
//! Gaussian vectors scaled to a ladder of radii so the same seed always
//! reproduces the same verdict.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Radii used by the default probes.
pub const PROBE_RADII: [f64; 3] = [1.0, 10.0, 100.0];

/// A deterministic stream of Gaussian states scaled to cycling radii.
pub struct StateSampler {
    rng: ChaCha8Rng,
    dim: usize,
    radii: Vec<f64>,
    count: usize,
}

impl StateSampler {
    pub fn new(dim: usize, radii: &[f64], seed: u64) -> Self {
        assert!(dim >= 1 && !radii.is_empty());
        StateSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim,
            radii: radii.to_vec(),
            count: 0,
        }
    }

    /// Draws the next state: a standard Gaussian vector scaled by
    /// `radius / sqrt(dim)`, so its norm concentrates near the radius.
    pub fn next_state(&mut self) -> DVector<f64> {
        let radius = self.radii[self.count % self.radii.len()];
        self.count += 1;
        let scale = radius / (self.dim as f64).sqrt();
        DVector::from_fn(self.dim, |_, _| {
            scale * self.rng.sample::<f64, _>(StandardNormal)
        })
    }

    /// Draws a pair of distinct states at the same radius.
    pub fn next_pair(&mut self) -> (DVector<f64>, DVector<f64>) {
        loop {
            let x = self.next_state();
            self.count -= 1; // keep the pair on one radius rung
            let y = self.next_state();
            if (&x - &y).norm() > 1e-12 {
                return (x, y);
            }
        }
    }
}
