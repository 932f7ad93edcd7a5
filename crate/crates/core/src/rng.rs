//! Counter-based random streams and on-site disorder.
//!
//! Every random number is addressed by `(seed, realization, purpose, site)`,
//! so a value never depends on how many other values were drawn before it or
//! on which thread asked for it.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::params::ModelParams;

/// Independent stream families. Each realization index gets its own stream
/// within a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Phase1d = 0,
    Phase2d = 1,
    Disorder1d = 2,
    Disorder2d = 3,
    Quasimomentum = 4,
}

#[inline]
fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

/// Site key for a 2D index; both coordinates must fit in 31 bits.
#[inline]
pub fn site_key_2d(l: i64, m: i64) -> u64 {
    debug_assert!(l.unsigned_abs() < (1 << 31) && m.unsigned_abs() < (1 << 31));
    (zigzag(l) << 32) | zigzag(m)
}

#[inline]
pub fn site_key_1d(l: i64) -> u64 {
    zigzag(l)
}

/// Uniform deviate in `[0, 1)` at a fixed address.
pub fn uniform_at(seed: u64, realization: u64, purpose: Purpose, key: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(realization.wrapping_mul(8) | purpose as u64);
    rng.set_word_pos(u128::from(key) * 2);
    rng.gen::<f64>()
}

/// Uniform phase in `[0, 2 pi)` at a fixed address.
pub fn phase_at(seed: u64, realization: u64, purpose: Purpose, key: u64) -> f64 {
    2.0 * PI * uniform_at(seed, realization, purpose, key)
}

/// One disorder realization: on-site energies uniform in `[-eps/2, eps/2)`.
///
/// The realization is a pure function of its key, so it can be evaluated on
/// any window, including windows that grow during a propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderRealization {
    pub eps: f64,
    pub seed: u64,
    pub realization: u64,
}

impl DisorderRealization {
    pub fn none() -> Self {
        DisorderRealization {
            eps: 0.0,
            seed: 0,
            realization: 0,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.eps == 0.0
    }

    pub fn energy_1d(&self, l: i64) -> f64 {
        if self.eps == 0.0 {
            return 0.0;
        }
        self.eps
            * (uniform_at(
                self.seed,
                self.realization,
                Purpose::Disorder1d,
                site_key_1d(l),
            ) - 0.5)
    }

    pub fn energy_2d(&self, l: i64, m: i64) -> f64 {
        if self.eps == 0.0 {
            return 0.0;
        }
        self.eps
            * (uniform_at(
                self.seed,
                self.realization,
                Purpose::Disorder2d,
                site_key_2d(l, m),
            ) - 0.5)
    }

    pub fn values_1d(&self, sites: RangeInclusive<i64>) -> Vec<f64> {
        sites.map(|l| self.energy_1d(l)).collect()
    }
}

/// Draws the disorder realization `realization` for the parameter set `p`.
pub fn disorder(p: &ModelParams, realization: u64) -> DisorderRealization {
    DisorderRealization {
        eps: p.eps,
        seed: p.seed,
        realization,
    }
}
