//! Random streams.
//!
//! Every random quantity comes from a ChaCha8 stream seeded with a 64-bit value through
//! `SeedableRng::seed_from_u64`. Independent streams (replicates, grid cells, settings) get
//! their seeds from a master seed via [`derive_seed`], a SplitMix64 finaliser applied to the
//! master seed and a stream counter. Results are therefore identical across platforms and
//! independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Seed for a two-level stream, e.g. (grid cell, replicate).
pub fn derive_seed2(master: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(master, a), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_spreads() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
        assert_ne!(derive_seed2(1, 2, 3), derive_seed2(1, 3, 2));
    }

    #[test]
    fn stream_is_reproducible() {
        let a: Vec<u64> = rng_from_seed(42).random_iter().take(5).collect();
        let b: Vec<u64> = rng_from_seed(42).random_iter().take(5).collect();
        assert_eq!(a, b);
    }
}
