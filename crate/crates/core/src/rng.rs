//! Deterministic randomness.
//!
//! Every random draw in the crate flows from an explicit `u64` seed. Watermark
//! chips use SplitMix64 directly so the sequence is bit-exact across
//! platforms; bulk Gaussian/uniform sampling uses ChaCha8 seeded from a
//! SplitMix64-mixed value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 (Steele, Lea, Flood 2014).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform index in `0..n` by rejection (no modulo bias).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }
}

/// One SplitMix64 finalization step; used to decorrelate derived seeds.
pub fn mix64(x: u64) -> u64 {
    SplitMix64::new(x).next_u64()
}

/// Derive a per-stage seed by mixing an FNV-1a hash of `stage` into `base`.
pub fn derive_seed(base: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix64(base ^ h)
}

/// Derive the seed for item `index` of a stage.
pub fn derive_indexed(base: u64, stage: &str, index: u64) -> u64 {
    mix64(derive_seed(base, stage) ^ mix64(index.wrapping_add(1)))
}

pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed))
}
