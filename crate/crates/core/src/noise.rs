//! Brownian increments from a counter-based stream.
//!
//! Increment `k` of the stream keyed by `seed` is a function of `(seed, k)` alone:
//! it consumes ChaCha8 words `4k..4k+4` (two `u64`s) and maps them to one standard
//! normal by Box-Muller. Regenerating a single increment is a seek, so paths can be
//! split into segments or reproduced from any offset bit-for-bit.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const WORDS_PER_INCREMENT: u128 = 4;

/// splitmix64 finalizer; decorrelates per-replicate seeds derived from one master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn unit_open(bits: u64) -> f64 {
    // (0, 1]: never zero, so the logarithm below is finite.
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Standard normal number `k` of the stream keyed by `seed`.
pub fn standard_normal_at(seed: u64, k: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(WORDS_PER_INCREMENT * k as u128);
    standard_normal(&mut rng)
}

/// `K` i.i.d. `N(0, dt)` increments of a scalar Brownian motion.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    seed: u64,
    dt: f64,
    increments: Vec<f64>,
}

impl NoisePath {
    pub fn generate(seed: u64, steps: usize, dt: f64) -> Result<Self> {
        Self::generate_from(seed, 0, steps, dt)
    }

    /// Increments `offset..offset + steps` of the stream, i.e. the path of
    /// `B(t + offset dt) - B(offset dt)`.
    pub fn generate_from(seed: u64, offset: u64, steps: usize, dt: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("noise path needs at least one step".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(WORDS_PER_INCREMENT * offset as u128);
        let scale = dt.sqrt();
        let increments = (0..steps).map(|_| scale * standard_normal(&mut rng)).collect();
        Ok(Self { seed, dt, increments })
    }

    /// Stateless regeneration of increment `k`.
    pub fn increment_at(seed: u64, k: u64, dt: f64) -> f64 {
        dt.sqrt() * standard_normal_at(seed, k)
    }

    /// Builds a path from explicit increments (e.g. deterministic test drivers).
    pub fn from_increments(dt: f64, increments: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || increments.is_empty() {
            return Err(Error::Config(
                "explicit noise path needs dt > 0 and at least one increment".into(),
            ));
        }
        Ok(Self {
            seed: 0,
            dt,
            increments,
        })
    }

    /// The same Brownian path sampled on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.increments.len().is_multiple_of(factor) {
            return Err(Error::Config(format!(
                "cannot coarsen {} increments by {factor}",
                self.increments.len()
            )));
        }
        Ok(Self {
            seed: self.seed,
            dt: self.dt * factor as f64,
            increments: self.increments.chunks(factor).map(|c| c.iter().sum()).collect(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_path() {
        let a = NoisePath::generate(7, 1000, 1e-3).unwrap();
        let b = NoisePath::generate(7, 1000, 1e-3).unwrap();
        assert_eq!(a, b);
        let c = NoisePath::generate(8, 1000, 1e-3).unwrap();
        assert_ne!(a.increments(), c.increments());
    }

    #[test]
    fn stateless_access_matches_sequential() {
        let p = NoisePath::generate(42, 300, 0.01).unwrap();
        for k in [0usize, 1, 17, 299] {
            assert_eq!(
                NoisePath::increment_at(42, k as u64, 0.01).to_bits(),
                p.increments()[k].to_bits()
            );
        }
        let tail = NoisePath::generate_from(42, 100, 200, 0.01).unwrap();
        assert_eq!(tail.increments(), &p.increments()[100..]);
    }

    #[test]
    fn coarsening_sums_increments() {
        let p = NoisePath::generate(3, 8, 0.5).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.dt(), 2.0);
        let s: f64 = p.increments()[4..].iter().sum();
        assert_eq!(c.increments()[1], s);
        assert!(p.coarsen(3).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(1, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn rejects_empty_or_bad_step() {
        assert!(NoisePath::generate(0, 0, 1e-3).is_err());
        assert!(NoisePath::generate(0, 10, 0.0).is_err());
    }
}
