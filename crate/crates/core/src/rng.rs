//! Seeded random number generation.
//!
//! Every stochastic operation draws from [`Xoshiro256PlusPlus`], seeded
//! through [`SeedableRng::seed_from_u64`] (a SplitMix64 expansion of the
//! `u64` seed). Both algorithms are fixed by `rand_xoshiro` and do not change
//! between releases, so a seed always maps to the same stream. Gaussian draws
//! use the ziggurat sampler of `rand_distr::StandardNormal`.
//!
//! Work split into independent trials or paths uses `seed + index`
//! (wrapping) as the per-unit seed.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus as SeededRng;

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

pub fn derived(seed: u64, index: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed.wrapping_add(index))
}
