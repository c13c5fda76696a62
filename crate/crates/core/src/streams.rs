//! Keyed random streams.
//!
//! Every random quantity in an experiment is addressed by a key rather than
//! drawn from a shared generator. The key selects a ChaCha8 seed
//! `(base_seed, replication, domain)`, a stream id and a word position, so a
//! value can be regenerated independently of the order in which it is asked
//! for. This gives common random numbers across policies and makes parallel
//! execution bit-identical to serial execution.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Disjoint key spaces for the different consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Feedback = 1,
    Exploration = 2,
    ArmRealization = 3,
    /// Independent copy of the feedback streams, used for unpaired estimates.
    IndependentFeedback = 4,
}

fn seed_bytes(base_seed: u64, replication: u64, domain: Domain) -> [u8; 32] {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&base_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&replication.to_le_bytes());
    seed[16..24].copy_from_slice(&(domain as u64).to_le_bytes());
    seed
}

/// A sequential generator for one `(base_seed, replication, domain, stream)`.
pub fn keyed_rng(base_seed: u64, replication: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(seed_bytes(base_seed, replication, domain));
    rng.set_stream(stream);
    rng
}

/// Maps 52 random bits to the open interval (0, 1).
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Stable 64-bit tag for a textual stream name (FNV-1a).
pub fn stream_tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Uniform draws for QoE feedback, addressed by `(arm, pull index, user)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackStream {
    pub base_seed: u64,
    pub replication: u64,
    pub domain: Domain,
}

impl FeedbackStream {
    pub fn new(base_seed: u64, replication: u64) -> Self {
        Self {
            base_seed,
            replication,
            domain: Domain::Feedback,
        }
    }

    /// Same key layout, statistically independent values.
    pub fn independent(self) -> Self {
        Self {
            domain: Domain::IndependentFeedback,
            ..self
        }
    }

    fn position(pull_index: u64, user: u64) -> u128 {
        // two 32-bit words per u64 draw
        ((u128::from(pull_index) << 32) | u128::from(user)) * 2
    }

    /// Writes the uniforms for users `0..out.len()` of one pull into `out`.
    pub fn fill_uniforms(&self, arm: usize, pull_index: u64, out: &mut [f64]) {
        assert!(pull_index >= 1, "pull indices start at 1");
        let mut rng = keyed_rng(self.base_seed, self.replication, self.domain, arm as u64);
        rng.set_word_pos(Self::position(pull_index, 0));
        for u in out.iter_mut() {
            *u = open_unit(rng.next_u64());
        }
    }

    /// The uniform for a single `(arm, pull, user)` key.
    pub fn uniform(&self, arm: usize, pull_index: u64, user: u64) -> f64 {
        let mut rng = keyed_rng(self.base_seed, self.replication, self.domain, arm as u64);
        rng.set_word_pos(Self::position(pull_index, user));
        open_unit(rng.next_u64())
    }
}
