//! Complex baseband signal helpers: power accounting, scaling, AWGN.
//!
//! Conventions used across the crate:
//! * a "signal" is a `&[Cf64]` of baseband samples at one sample per symbol;
//! * "power" is the mean of `|x|^2` over the slice;
//! * noise power is specified as total complex variance, split evenly
//!   between I and Q.

use alloc::vec::Vec;

use crate::math;
use crate::rng::RngStream;
use crate::Cf64;

/// Mean power `E[|x|^2]` of a sample slice. Empty slices have zero power.
pub fn power(x: &[Cf64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|s| s.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Scale a signal in place so its mean power becomes `target`.
///
/// A zero signal is left untouched (there is nothing to scale).
pub fn scale_to_power(x: &mut [Cf64], target: f64) {
    let p = power(x);
    if p <= 0.0 {
        return;
    }
    let g = math::sqrt(target / p);
    for s in x.iter_mut() {
        *s *= g;
    }
}

/// Add circularly-symmetric AWGN of total power `noise_power` in place.
pub fn add_awgn(x: &mut [Cf64], noise_power: f64, rng: &mut RngStream) {
    let sigma = math::sqrt(noise_power);
    for s in x.iter_mut() {
        *s += rng.next_cn() * sigma;
    }
}

/// Signal-to-interference-plus-noise ratio in dB from component powers.
pub fn sinr_db(p_signal: f64, p_interference: f64, p_noise: f64) -> f64 {
    math::lin_to_db(p_signal / (p_interference + p_noise))
}

/// Element-wise sum of two equal-length signals.
pub fn mix(a: &[Cf64], b: &[Cf64]) -> Vec<Cf64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}
