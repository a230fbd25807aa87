//! Seed derivation for independent deterministic random streams.
//!
//! Every consumer of randomness derives its own stream from the run seed and
//! a label, so adding draws in one place never shifts another stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a seed together with any number of stream coordinates.
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Uniform draw in [0, 1) addressed by (seed, parts).
pub fn unit(seed: u64, parts: &[u64]) -> f64 {
    (mix(seed, parts) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, parts))
}

/// Stable 64-bit label for a stream name.
pub fn label(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
