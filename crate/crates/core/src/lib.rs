//! Link-level simulation core for two-way (full-duplex) image transmission.
//!
//! Everything needed to run a bidirectional link lives here: deterministic
//! RNG streams, baseband channel models with self-interference, a classical
//! separate-coding chain (block transform codec + QC-LDPC + QPSK), digital
//! self-interference cancellers, a small trained joint source-channel coder
//! with per-direction conditioning, image quality metrics, and the two-way
//! rate-region ("feasibility") calculus.
//!
//! The crate is `no_std` + `alloc` so the numeric kernels can be reused in
//! embedded or WASM harnesses; all float math goes through [`math`] (backed
//! by `libm`) so results are bit-identical across platforms. File formats,
//! CLI, and anything requiring `std` live in the companion `duplex-cli`
//! crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod baseline;
pub mod channel;
pub mod duplex;
pub mod feasibility;
pub mod image;
pub mod math;
pub mod metrics;
pub mod rng;
pub mod semantic;
pub mod sic;
pub mod signal;

/// Complex baseband sample type used throughout the crate.
pub type Cf64 = num_complex::Complex<f64>;
