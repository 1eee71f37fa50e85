//! Per-instance seed derivation.
//!
//! `instance_seed(base, n, i) = mix(mix(mix(base) ^ n) ^ i)` where `mix` is the
//! SplitMix64 finalizer. The derivation is frozen: sweep outputs depend on it
//! byte for byte.

/// SplitMix64 finalizer.
#[inline]
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for instance `index` at size `n`.
pub fn instance_seed(base: u64, n: usize, index: u64) -> u64 {
    mix(mix(mix(base) ^ n as u64) ^ index)
}

/// Independent stream for the measurement sampler of the same instance.
pub fn run_seed(base: u64, n: usize, index: u64) -> u64 {
    mix(instance_seed(base, n, index) ^ 0x5851_F42D_4C95_7F2D)
}
