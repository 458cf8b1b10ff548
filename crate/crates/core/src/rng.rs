//! Seed plumbing.
//!
//! All randomness in the crate flows through `ChaCha8Rng` streams derived
//! deterministically from a user seed, so outputs are reproducible across
//! runs and independent of thread count: every parallel cell derives its own
//! stream from `(seed, label, index)` and results are merged in index order.

use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// splitmix64 step, used to decorrelate derived seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed for a named stage and cell index.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut h = seed;
    for b in label.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label, index))
}
