//! Random streams and index sampling.
//!
//! A run has one root seed. Every random decision draws from its own
//! ChaCha8 stream whose 256-bit seed is a SplitMix64 hash of
//! `(root, tag, a, b)`, so streams never share state and a draw in one
//! stream cannot shift another. The `(a, b)` counters identify the decision
//! (for example epoch and inner step for a minibatch).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Stream tags. Values are part of the determinism contract.
pub mod tag {
    pub const DATASET: u64 = 1;
    pub const INITIAL_POINT: u64 = 2;
    pub const REFERENCE_BATCH: u64 = 3;
    pub const MINIBATCH: u64 = 4;
    pub const OUTPUT: u64 = 5;
    pub const RESTART: u64 = 6;
    pub const EXPERIMENT: u64 = 7;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit child seed of `root` for the decision `(tag, a, b)`.
pub fn derive_seed(root: u64, tag: u64, a: u64, b: u64) -> u64 {
    let mut s = root;
    let mut h = splitmix64(&mut s);
    for word in [tag, a, b] {
        let mut t = h ^ word;
        h = splitmix64(&mut t);
    }
    h
}

/// Independent generator for the decision `(tag, a, b)`.
pub fn stream(root: u64, tag: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut state = derive_seed(root, tag, a, b);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// `size` distinct indices from `0..n`, uniformly.
///
/// `size == n` returns `0..n` in order without consuming randomness.
pub fn sample_without_replacement(n: usize, size: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if size == 0 || size > n {
        return Err(Error::Config(format!("cannot draw {size} distinct indices from {n}")));
    }
    if size == n {
        return Ok((0..n).collect());
    }
    Ok(rand::seq::index::sample(rng, n, size).into_vec())
}

/// `size` i.i.d. uniform indices from `0..n`.
pub fn sample_with_replacement(n: usize, size: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..size).map(|_| rng.random_range(0..n)).collect()
}

/// Reservoir of size one over a stream of candidates: after `k` offers each
/// candidate is held with probability `1/k`.
#[derive(Debug)]
pub(crate) struct Reservoir<T> {
    rng: ChaCha8Rng,
    seen: u64,
    held: Option<T>,
}

impl<T> Reservoir<T> {
    pub(crate) fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, seen: 0, held: None }
    }

    pub(crate) fn offer(&mut self, item: impl FnOnce() -> T) {
        self.seen += 1;
        if self.rng.random_range(0..self.seen) == 0 {
            self.held = Some(item());
        }
    }

    pub(crate) fn take(self) -> Option<T> {
        self.held
    }
}
