//! Shared fixtures for the criterion benches.

use halfsearch::{generate_instance, PartitionInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const BENCH_BITS: u32 = 10;

pub fn instance(n: usize) -> PartitionInstance {
    generate_instance(n, BENCH_BITS, 0xBE7C_0000 + n as u64).expect("valid bench instance")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
