//! Counter-based deterministic random streams.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(master_seed, experiment, player, purpose)`. A stream is a pure function
//! of its key and a draw counter, so experiments can run in parallel without
//! stream overlap and any run replays bit-identically from its seed.

use std::f64::consts::TAU;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Bijective on u64 with strong avalanche.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// What a stream is used for. Distinct purposes give disjoint streams even
/// for the same (seed, experiment, player) triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Per-round true type draws.
    TrueType,
    /// Randomness consumed by a player's declaration strategy.
    Declare,
    /// Per-round delivery shuffles in the broadcast bus.
    BusShuffle,
    /// Scratch streams for tests and standalone sampling.
    Aux,
}

impl StreamPurpose {
    fn tag(self) -> u64 {
        match self {
            StreamPurpose::TrueType => 1,
            StreamPurpose::Declare => 2,
            StreamPurpose::BusShuffle => 3,
            StreamPurpose::Aux => 4,
        }
    }
}

/// A counter-based generator: output `i` is `mix64(key + i * GOLDEN)`,
/// i.e. SplitMix64 started at a key derived from the stream coordinates.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, experiment: u64, player: u64, purpose: StreamPurpose) -> Self {
        let mut key = mix64(master_seed ^ 0xa076_1d64_78bd_642f);
        key = mix64(key ^ mix64(experiment ^ 0xe703_7ed1_a0b4_28db));
        key = mix64(key ^ mix64(player ^ 0x8ebc_6af0_9c88_c6e3));
        key = mix64(key ^ mix64(purpose.tag() ^ 0x5895_71d8_66f3_7fbd));
        Self { key, counter: 0 }
    }

    /// A stream independent of any keyed coordinates, for oracles in tests.
    pub fn from_raw_seed(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0xd6e8_feb8_6659_fd93),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter += 1;
        out
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound) by rejection-free widening multiply.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// One Normal(mu, sigma) draw via Box-Muller. Consumes two uniforms.
    pub fn next_normal(&mut self, mu: f64, sigma: f64) -> f64 {
        // Shift into (0, 1] so ln never sees zero.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        mu + sigma * (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
