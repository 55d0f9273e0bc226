//! Deterministic, splittable random streams.
//!
//! Every stochastic quantity in a simulation run draws from an [`RngStream`]
//! keyed by `(master_seed, stream_id)`. Stream ids are derived from stable
//! labels (trial index, direction, role), never from draw order, so adding a
//! consumer or reordering code does not shift anyone else's randomness. That
//! is what makes paired-comparison sweeps (same noise for every paradigm)
//! and byte-identical rerun artifacts possible.
//!
//! The generator is SplitMix64: a 64-bit counter advanced by a Weyl constant
//! and finalized with an avalanche mix. It is tiny, has no rejection loops,
//! and passes BigCrush for this register size — more than enough for Monte
//! Carlo work.

use crate::math;
use crate::Cf64;

const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;

/// Mix a label path into a stream id.
///
/// Labels are small integers with stable meanings chosen by the caller
/// (e.g. `[TRIAL_BASE, trial, direction]`). The fold is itself a SplitMix64
/// chain so ids are well spread even for dense label values.
pub fn derive_stream_id(labels: &[u64]) -> u64 {
    let mut h: u64 = 0x6A09_E667_F3BC_C909; // fractional bits of sqrt(2)
    for &l in labels {
        h = mix(h.wrapping_add(WEYL).wrapping_add(l));
    }
    h
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// A single deterministic random stream (SplitMix64).
#[derive(Clone, Debug)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    /// Stream keyed by a master seed and a derived stream id.
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        // Pre-mix so (0, 0) does not start at the weak all-zero state and
        // nearby (seed, id) pairs decorrelate immediately.
        let state = mix(master_seed ^ mix(stream_id.wrapping_add(WEYL)));
        Self { state }
    }

    /// Next raw 64-bit value.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(WEYL);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` by 128-bit multiply (no modulo bias worth
    /// caring about at Monte Carlo scale; exact enough for index draws).
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// One random bit.
    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() >> 63) as u8
    }

    /// Standard circularly-symmetric complex Gaussian CN(0, 1)
    /// (unit total power, i.e. each component has variance 1/2).
    ///
    /// Box–Muller on two uniforms; `u` is flipped to `1 - u` so the log
    /// argument is in `(0, 1]` and never zero.
    pub fn next_cn(&mut self) -> Cf64 {
        let u = 1.0 - self.next_f64();
        let v = self.next_f64();
        let r = math::sqrt(-math::ln(u));
        let th = 2.0 * core::f64::consts::PI * v;
        Cf64::new(r * math::cos(th), r * math::sin(th))
    }

    /// Standard real Gaussian N(0, 1).
    pub fn next_gaussian(&mut self) -> f64 {
        let z = self.next_cn();
        // One Box-Muller draw yields two N(0, 1/2) components; use the real
        // part scaled back up. Wasting the imaginary part keeps the call
        // stateless (no cached spare), which keeps streams easy to reason
        // about when consumers interleave.
        z.re * math::sqrt(2.0)
    }
}
