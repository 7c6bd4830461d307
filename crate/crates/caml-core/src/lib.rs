//! Core engine for per-label attentional convolutional multi-label text
//! classification (CAML), with a max-pool CNN and a one-vs-rest logistic
//! regression baseline, extreme-multi-label metrics, and four snippet
//! extraction methods for explaining individual predictions.
//!
//! The crate is `no_std`-compatible (it allocates, but performs no I/O);
//! file formats and the command-line frontend live in the companion
//! `caml-cli` crate.
//!
//! All floating point work is `f64` and every operation is deterministic:
//! fixed summation orders, a counter-based seeded RNG, and ordered maps
//! throughout. Two runs with the same seed produce bit-identical results.

#![cfg_attr(not(test), no_std)]
// indexed loops over parallel tensors are the house style in the kernels;
// iterator chains obscure the summation order that the contracts pin down
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod corpus;
pub mod explain;
pub mod linear;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod training;

pub use numerics::{Matrix, Rng};
