//! Seeded RNG helpers. ChaCha12 keyed by a u64 seed gives a stable,
//! platform-independent stream; sampling helpers use rejection so the
//! distribution is exactly uniform.

use alloc::vec::Vec;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Uniform draw in `0..bound` (rejection sampling). `bound` must be > 0.
pub fn uniform_index(rng: &mut impl RngCore, bound: usize) -> usize {
    debug_assert!(bound > 0);
    let bound = bound as u64;
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % bound) as usize;
        }
    }
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_index(rng, i + 1);
        items.swap(i, j);
    }
}

/// Choose `k` distinct indices from `0..n` without replacement,
/// returned in draw order. Panics if `k > n`.
pub fn choose_indices(rng: &mut impl RngCore, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_index(rng, n - i);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}
