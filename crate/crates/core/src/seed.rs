//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! master seed and a stream label: `child = mix(master, fnv1a(label))`. The
//! derivation is stable across platforms and releases, so a master seed pins
//! data generation, environment layouts, network init and policy sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for a named stream.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    mix64(master ^ mix64(fnv1a(label.as_bytes())))
}

/// Child seed for the `index`-th member of a named family of streams.
pub fn derive_indexed(master: u64, label: &str, index: u64) -> u64 {
    mix64(derive_seed(master, label) ^ mix64(index.wrapping_add(1)))
}

pub fn rng_for(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label))
}

pub fn rng_indexed(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_indexed(master, label, index))
}
