//! Gray-mapped QPSK at unit symbol energy, with exact Gaussian-channel
//! soft demodulation.
//!
//! Bit pair `(b0, b1)` maps to `((1-2 b0) + j (1-2 b1)) / sqrt(2)`: the
//! first bit selects the sign of the real part, the second the imaginary
//! part, and `(0,0)` lands on `(1+j)/sqrt(2)`. Under complex AWGN with
//! total noise variance `nv` the per-bit LLRs (positive favors bit 0)
//! are `2 sqrt(2) Re(y) / nv` and `2 sqrt(2) Im(y) / nv`, clamped to the
//! decoder's saturation range.

use alloc::vec::Vec;

use crate::baseline::ldpc::LLR_MAX;
use crate::Cf64;

const INV_SQRT2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Map bits to QPSK symbols; bits `(2i, 2i+1)` become symbol `i`.
///
/// # Panics
/// Panics if `bits.len()` is odd.
pub fn qpsk_modulate(bits: &[u8]) -> Vec<Cf64> {
    assert!(bits.len().is_multiple_of(2), "QPSK needs an even number of bits");
    bits.chunks_exact(2)
        .map(|p| {
            let re = if p[0] & 1 == 1 { -INV_SQRT2 } else { INV_SQRT2 };
            let im = if p[1] & 1 == 1 { -INV_SQRT2 } else { INV_SQRT2 };
            Cf64::new(re, im)
        })
        .collect()
}

/// Per-bit LLRs for received symbols under complex AWGN of total variance
/// `noise_var`, clamped to `±LLR_MAX`.
///
/// # Panics
/// Panics if `noise_var <= 0`.
pub fn qpsk_llr(symbols: &[Cf64], noise_var: f64) -> Vec<f64> {
    assert!(noise_var > 0.0, "noise variance must be positive");
    let g = 2.0 * core::f64::consts::SQRT_2 / noise_var;
    let mut llr = Vec::with_capacity(symbols.len() * 2);
    for y in symbols {
        llr.push((g * y.re).clamp(-LLR_MAX, LLR_MAX));
        llr.push((g * y.im).clamp(-LLR_MAX, LLR_MAX));
    }
    llr
}

/// Hard decisions straight from symbol signs (no code).
pub fn qpsk_demod_hard(symbols: &[Cf64]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * 2);
    for y in symbols {
        bits.push(if y.re < 0.0 { 1 } else { 0 });
        bits.push(if y.im < 0.0 { 1 } else { 0 });
    }
    bits
}
