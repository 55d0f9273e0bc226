//! Baseband channel models: close-in path loss, Rician multipath,
//! self-interference coupling, and link-budget arithmetic.
//!
//! The desired link and the self-interference (SI) path are both modeled as
//! tapped delay lines at one tap per symbol. The SI path is Rician: the
//! direct transmit-to-receive leakage dominates (strong line-of-sight tap)
//! with a short exponentially-decaying diffuse tail from nearby reflectors.
//! Between the moment a canceller is calibrated and the moment it is used
//! the SI path drifts slightly ([`ChannelTaps::drifted`]); that drift is
//! what ultimately floors digital cancellation in this model.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::RngStream;
use crate::Cf64;

/// Speed of light in m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

/// Close-in (CI) path loss model with a 1 m reference distance.
#[derive(Clone, Copy, Debug)]
pub struct PathLossConfig {
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
    /// Path loss exponent (2 = free space).
    pub exponent: f64,
}

impl PathLossConfig {
    /// Path loss in dB at distance `d_m` meters (`d_m >= 1`).
    ///
    /// `PL(d) = FSPL(f, 1 m) + 10 n log10(d)` where the free-space term at
    /// the 1 m close-in reference is `20 log10(4 pi f / c)`.
    pub fn path_loss_db(&self, d_m: f64) -> f64 {
        let fspl_1m = 20.0 * math::log10(4.0 * core::f64::consts::PI * self.carrier_hz / C_LIGHT);
        fspl_1m + 10.0 * self.exponent * math::log10(d_m)
    }
}

/// Rician tapped-delay-line profile for the SI coupling path.
#[derive(Clone, Copy, Debug)]
pub struct RicianProfile {
    /// Number of taps (first tap carries the line-of-sight component).
    pub taps: usize,
    /// K-factor in dB: LOS power over diffuse power within the first tap.
    pub k_factor_db: f64,
    /// Exponential power-delay-profile decay constant, in taps.
    pub decay: f64,
    /// Fixed phase of the line-of-sight component, radians.
    pub los_phase: f64,
}

impl Default for RicianProfile {
    /// Leak-plus-reflection default: 3 taps at delays {0, 1, 2} symbols
    /// with powers {0, -10, -20} dB (decay constant `1/ln 10` makes the
    /// exponential PDP drop exactly 10 dB per tap) and a 10 dB K-factor
    /// on the direct tap.
    fn default() -> Self {
        Self {
            taps: 3,
            k_factor_db: 10.0,
            decay: 1.0 / core::f64::consts::LN_10,
            los_phase: 0.0,
        }
    }
}

impl RicianProfile {
    /// Draw one channel realization with unit average total power.
    ///
    /// Tap powers follow `exp(-m / decay)` normalized to sum to one. The
    /// first tap is Rician with the configured K-factor; later taps are
    /// Rayleigh (pure diffuse).
    pub fn draw(&self, rng: &mut RngStream) -> ChannelTaps {
        let mut pdp: Vec<f64> = (0..self.taps)
            .map(|m| math::exp(-(m as f64) / self.decay))
            .collect();
        let total: f64 = pdp.iter().sum();
        for p in pdp.iter_mut() {
            *p /= total;
        }
        let k = math::db_to_lin(self.k_factor_db);
        let taps = pdp
            .iter()
            .enumerate()
            .map(|(m, &p)| {
                let amp = math::sqrt(p);
                if m == 0 {
                    let los = math::sqrt(k / (k + 1.0));
                    let diffuse = math::sqrt(1.0 / (k + 1.0));
                    let los_dir =
                        Cf64::new(math::cos(self.los_phase), math::sin(self.los_phase));
                    (los_dir * los + rng.next_cn() * diffuse) * amp
                } else {
                    rng.next_cn() * amp
                }
            })
            .collect();
        ChannelTaps { taps }
    }
}

/// One realization of a tapped delay line.
#[derive(Clone, Debug)]
pub struct ChannelTaps {
    pub taps: Vec<Cf64>,
}

impl ChannelTaps {
    /// Single-tap channel with a fixed complex gain.
    pub fn flat(gain: Cf64) -> Self {
        Self { taps: vec![gain] }
    }

    /// Convolve a signal with the taps (same-length output, zero history).
    pub fn apply(&self, x: &[Cf64]) -> Vec<Cf64> {
        let mut y = vec![Cf64::new(0.0, 0.0); x.len()];
        for (m, &t) in self.taps.iter().enumerate() {
            for k in m..x.len() {
                y[k] += t * x[k - m];
            }
        }
        y
    }

    /// Total tap power `sum |h_m|^2`.
    pub fn power(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// A slightly different realization of the same physical path:
    /// each tap is perturbed by an independent CN(0, drift_rms^2) scaled by
    /// the overall tap-vector norm, modeling the small change in leakage
    /// between canceller calibration and use.
    pub fn drifted(&self, drift_rms: f64, rng: &mut RngStream) -> Self {
        let norm = math::sqrt(self.power());
        let taps = self
            .taps
            .iter()
            .map(|&t| t + rng.next_cn() * (drift_rms * norm))
            .collect();
        Self { taps }
    }
}

/// Linear SI power `I` that sets the pre-digital SINR to `target_sinr_db`:
/// solves `p_desired / (I + p_noise) = 10^(target/10)`. This is how the
/// propagation and analog suppression stages enter the simulation — as a
/// calibrated power level rather than a circuit model.
///
/// # Panics
/// Panics when `p_desired <= 0`, `p_noise < 0`, or the target is reachable
/// only with negative interference power (target above the noise-limited
/// SNR).
pub fn calibrate_si_power(target_sinr_db: f64, p_desired: f64, p_noise: f64) -> f64 {
    assert!(p_desired > 0.0, "desired power must be positive");
    assert!(p_noise >= 0.0, "noise power must be nonnegative");
    let i = p_desired / math::db_to_lin(target_sinr_db) - p_noise;
    assert!(
        i >= -1e-12 * p_noise.max(p_desired),
        "target SINR {target_sinr_db} dB is above the noise-limited SNR"
    );
    i.max(0.0)
}

/// Static link budget for one direction of the two-way link.
///
/// Only ratios matter to the simulation; this struct exists so scenario
/// configs can be written in physical units and reported back in dB.
#[derive(Clone, Copy, Debug)]
pub struct LinkBudget {
    /// Transmit power of each node in dBm.
    pub tx_power_dbm: f64,
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
    /// Distance between the two nodes in meters.
    pub distance_m: f64,
    /// Path loss exponent of the desired link.
    pub path_loss_exponent: f64,
    /// Combined propagation + analog SI suppression in dB
    /// (antenna isolation plus analog cancellation, before digital SIC).
    pub si_isolation_db: f64,
    /// Receiver noise floor in dBm.
    pub noise_floor_dbm: f64,
}

impl LinkBudget {
    /// Received desired-signal power in dBm.
    pub fn desired_rx_dbm(&self) -> f64 {
        let pl = PathLossConfig {
            carrier_hz: self.carrier_hz,
            exponent: self.path_loss_exponent,
        }
        .path_loss_db(self.distance_m);
        self.tx_power_dbm - pl
    }

    /// Residual self-interference power in dBm after the propagation and
    /// analog suppression stages.
    pub fn si_rx_dbm(&self) -> f64 {
        self.tx_power_dbm - self.si_isolation_db
    }

    /// SINR before digital cancellation, in dB.
    pub fn pre_digital_sinr_db(&self) -> f64 {
        let p_des = math::db_to_lin(self.desired_rx_dbm());
        let p_si = math::db_to_lin(self.si_rx_dbm());
        let p_n = math::db_to_lin(self.noise_floor_dbm);
        math::lin_to_db(p_des / (p_si + p_n))
    }

    /// Desired-signal SNR ignoring self-interference, in dB.
    pub fn desired_snr_db(&self) -> f64 {
        self.desired_rx_dbm() - self.noise_floor_dbm
    }
}
