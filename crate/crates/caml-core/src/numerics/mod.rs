//! Dense matrix primitives, a seeded counter-based RNG, and a
//! finite-difference gradient checker.
//!
//! Everything here is 64-bit and deterministic: matrix products accumulate
//! row-major, left to right, and no operation depends on map iteration
//! order or platform math intrinsics (transcendentals go through `libm`).

mod gradcheck;
mod matrix;
mod rng;

pub use gradcheck::{finite_diff_check, FiniteDiffReport};
pub use matrix::Matrix;
pub use rng::Rng;

use alloc::vec::Vec;

/// Numerically stable softmax: shifts by the maximum before exponentiating.
///
/// Outputs are positive and sum to 1 (within 1e-12 for inputs in a sane
/// range). Panics on an empty slice.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "softmax of empty vector");
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|&x| libm::exp(x - max)).collect();
    let sum: f64 = out.iter().sum();
    for x in &mut out {
        *x /= sum;
    }
    out
}

/// Logistic sigmoid, computed without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Dot product with a fixed left-to-right summation order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Euclidean norm of a vector.
pub fn l2_norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// FNV-1a hash of a byte string; used for deterministic, platform-stable
/// fingerprints (vocabulary hashes, group assignment, seed derivation).
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
