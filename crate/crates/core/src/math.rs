//! Scalar float helpers routed through `libm`.
//!
//! `core` has no float intrinsics without `std`, and even with `std` the
//! platform libm may differ between targets. Routing every transcendental
//! through one place keeps simulation output bit-identical everywhere and
//! gives the rest of the crate a tiny, greppable math vocabulary.

/// Natural exponential.
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Natural logarithm.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// Base-2 logarithm.
#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// Base-10 logarithm.
#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

/// Square root.
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Cosine.
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

/// Sine.
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// Hyperbolic tangent.
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

/// `x` raised to the real power `y`.
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Absolute value.
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Round half away from zero.
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Largest integer value not greater than `x`.
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Complementary error function (used for exact Q-function oracles).
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Convert a power ratio to decibels.
#[inline]
pub fn lin_to_db(p: f64) -> f64 {
    10.0 * log10(p)
}

/// Convert decibels to a power ratio.
#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    powf(10.0, db / 10.0)
}

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
#[inline]
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / sqrt(2.0))
}
