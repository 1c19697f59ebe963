//! Seeded randomness with named sub-streams.
//!
//! Every random draw in the crate flows from a single 64-bit seed through a
//! named stream (`init`, `split`, `shuffle`, ...). Streams are independent
//! ChaCha8 instances, so adding draws to one component never perturbs the
//! draws of another.

use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// FNV-1a hash of the stream name; picks the ChaCha stream id.
fn stream_id(name: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic generator for the given seed and stream name.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}

/// Uniform draw in `[0, 1)` with 53-bit resolution.
#[inline]
pub fn next_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[lo, hi)`.
#[inline]
pub fn next_in_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * next_f64(rng)
}

/// Unbiased uniform index in `[0, bound)` by rejection sampling.
pub fn next_index(rng: &mut ChaCha8Rng, bound: usize) -> usize {
    assert!(bound > 0);
    let bound = bound as u64;
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % bound) as usize;
        }
    }
}

/// In-place Fisher–Yates shuffle.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = next_index(rng, i + 1);
        items.swap(i, j);
    }
}

/// Standard normal draw (Box–Muller; two uniforms per call).
pub fn next_gaussian(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u = next_f64(rng);
        if u <= f64::MIN_POSITIVE {
            continue;
        }
        let v = next_f64(rng);
        let r = libm::sqrt(-2.0 * libm::log(u));
        return r * libm::cos(2.0 * core::f64::consts::PI * v);
    }
}

/// Draws `k` distinct indices from `[0, n)` in shuffled order.
pub fn sample_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(rng, &mut idx);
    idx.truncate(k);
    idx
}
