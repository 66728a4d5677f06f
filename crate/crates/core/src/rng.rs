//! Seeded random number generation.
//!
//! Every stochastic operation in the crate takes an explicit `u64` seed and
//! builds a [`SimRng`] from it. Independent streams are derived with
//! [`SimRng::stream`] (ChaCha's 64-bit stream selector), so results never
//! depend on call order between unrelated consumers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// The single generator used throughout the simulation.
pub type SimRng = ChaCha20Rng;

pub trait SimRngExt {
    /// Generator for `(seed, stream)`.
    fn stream(seed: u64, stream: u64) -> Self;
    /// Uniform draw on `[0, 1)`.
    fn unit(&mut self) -> f64;
}

impl SimRngExt for SimRng {
    fn stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    fn unit(&mut self) -> f64 {
        self.random::<f64>()
    }
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::stream(seed, 0)
}

/// Mixes a seed with a sub-index (splitmix64 finaliser); used to derive
/// per-run seeds that are themselves valid seeds for [`seeded`].
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
