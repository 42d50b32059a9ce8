//! Seed derivation and random draws.
//!
//! Every stream is a ChaCha12 generator (`rand_chacha`) seeded through
//! `seed_from_u64` with a 64-bit seed. Seeds for a trial and a user inside
//! it are derived with SplitMix64 finalization, so a trial's channel depends
//! only on `(master_seed, trial_index, user_index)` and never on scheduling.
//!
//! Standard normals come from `rand_distr::StandardNormal` (ziggurat); a
//! circularly symmetric complex Gaussian of unit variance is
//! `(x + j y)/sqrt(2)` with `x` drawn before `y`.

use core::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::C64;

/// Generator used for every stream in the crate.
pub type StreamRng = ChaCha12Rng;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a parent seed with an index into a child seed.
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// `mix(master, trial, user)`: seed of one user's stream in one trial.
pub fn mix(master: u64, trial: u64, user: u64) -> u64 {
    derive(derive(master, trial), user)
}

pub fn stream(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Zero-mean, unit-variance circularly symmetric complex Gaussian.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re = standard_normal(rng);
    let im = standard_normal(rng);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Uniform draw on `[lo, hi]`; returns `lo` for an empty interval.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        lo + (hi - lo) * rng.random::<f64>()
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(mix(1, 0, 0), mix(1, 0, 1));
        assert_ne!(mix(1, 0, 0), mix(1, 1, 0));
        assert_ne!(mix(1, 0, 0), mix(2, 0, 0));
        assert_eq!(mix(7, 3, 2), mix(7, 3, 2));
    }

    #[test]
    fn complex_gaussian_unit_power() {
        let mut rng = stream(42);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| complex_gaussian(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02);
    }
}
