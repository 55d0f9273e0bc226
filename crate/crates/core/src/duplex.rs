//! Two-way full-duplex link simulation.
//!
//! Ties the chains (separate-coding baseline, learned semantic), the
//! self-interference coupling channel, and the cancellation stages into
//! end-to-end per-paradigm runs and SINR sweeps. Propagation and analog
//! suppression enter as a single calibrated pre-digital SI power; the
//! digital stage is an explicit canceller fit on a calibration burst of the
//! receiver's own transmit waveform; whatever survives lands on the chain
//! decoder.
//!
//! Every run is deterministic given its seed: all randomness flows through
//! per-(direction, purpose) [`RngStream`]s derived from the seed, so runs
//! are independent and safe to execute concurrently.

use alloc::vec::Vec;

use crate::baseline::codec;
use crate::baseline::ldpc::{NominalRate, RateMatchedCode};
use crate::baseline::modem;
use crate::channel::{calibrate_si_power, ChannelTaps, RicianProfile};
use crate::feasibility::{Paradigm, NEG_INF_DB};
use crate::image::ImagePatch;
use crate::math;
use crate::metrics;
use crate::rng::{derive_stream_id, RngStream};
use crate::semantic::model::{JsccModel, ModelSpec};
use crate::sic::{self, MemoryPolynomialBasis, NonlinearBasis};
use crate::signal;
use crate::Cf64;

/// Digital-stage suppression reports are capped here (residual at the
/// numeric floor), mirroring the sic module's relative floor of 1e-12.
pub const SUPPRESSION_CAP_DB: f64 = 120.0;

const STREAM_DOMAIN: u64 = 0xD0B;
const PURPOSE_FADE: u64 = 1;
const PURPOSE_SI: u64 = 2;
const PURPOSE_CAL_PILOT: u64 = 3;
const PURPOSE_CAL_NOISE: u64 = 4;
const PURPOSE_DRIFT: u64 = 5;
const PURPOSE_NOISE: u64 = 6;
const PURPOSE_PROBE_DESIRED: u64 = 7;
const PURPOSE_PROBE_OWN: u64 = 8;
/// Direction labels 0/1 belong to link runs; anchor probes use this base.
const PROBE_LABEL_BASE: u64 = 0x1000;

/// Digital self-interference cancellation mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SicMode {
    /// No digital stage; the residual is the raw received signal.
    None,
    /// FIR canceller, least-squares fit on the calibration burst.
    Linear,
    /// Memory-polynomial canceller (odd orders up to 3), least-squares fit.
    Nonlinear,
    /// Oracle subtraction of the exact SI contribution; models the
    /// idealized "perfect SIC" comparison point.
    Perfect,
}

impl SicMode {
    pub fn label(&self) -> &'static str {
        match self {
            SicMode::None => "none",
            SicMode::Linear => "linear",
            SicMode::Nonlinear => "nonlinear",
            SicMode::Perfect => "perfect",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(SicMode::None),
            "linear" => Some(SicMode::Linear),
            "nonlinear" => Some(SicMode::Nonlinear),
            "perfect" => Some(SicMode::Perfect),
            _ => None,
        }
    }
}

/// Desired-link small-scale fading model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesiredFading {
    /// Single Rayleigh tap, unit mean power; the receiver equalizes with
    /// known gain.
    Rayleigh,
    /// Fixed unit gain (useful for exact-reproduction tests).
    Unit,
}

/// Physical-layer scenario shared by all paradigms: desired link, SI
/// coupling path, front end, and calibration burst.
///
/// Powers are normalized to the transmit constellation: both chains emit
/// unit-average-power symbols, the desired link has unit mean gain, and
/// `snr_db` sets the noise floor relative to that. Large-scale path loss is
/// thereby absorbed into the two dB knobs (`snr_db` here, the pre-digital
/// SINR on [`ParadigmConfig`]); `channel::PathLossConfig` maps physical
/// link budgets onto them.
#[derive(Clone, Copy, Debug)]
pub struct ScenarioConfig {
    /// Desired-link SNR in dB (`+inf` = noiseless).
    pub snr_db: f64,
    pub desired_fading: DesiredFading,
    /// SI coupling path drawn once per run and held for the whole run.
    pub si_profile: RicianProfile,
    /// RMS per-tap drift of the SI path between calibration and payload,
    /// relative to the tap-vector norm.
    pub si_drift_rms: f64,
    /// Receive front-end memoryless cubic coefficient: `y = x(1 + c3|x|^2)`
    /// applied to the combined over-the-air signal; additive noise is
    /// referred to the front-end output.
    pub fe_cubic_c3: f64,
    /// Calibration burst length in symbols (own transmit known, far end
    /// quiet).
    pub n_cal: usize,
    /// Share one desired-link fade draw between the two directions.
    /// The SI paths stay independent: they are per-node leakage, not a
    /// reciprocal over-the-air channel.
    pub reciprocal: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            snr_db: 15.0,
            desired_fading: DesiredFading::Rayleigh,
            si_profile: RicianProfile::default(),
            si_drift_rms: 3e-3,
            fe_cubic_c3: 1e-8,
            n_cal: 2048,
            reciprocal: false,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(ConfigError::Invalid("snr_db must be finite or +inf"));
        }
        if self.si_profile.taps == 0 {
            return Err(ConfigError::Invalid("si profile needs at least one tap"));
        }
        if !self.si_profile.k_factor_db.is_finite()
            || !self.si_profile.los_phase.is_finite()
            || !(self.si_profile.decay > 0.0 && self.si_profile.decay.is_finite())
        {
            return Err(ConfigError::Invalid("si profile parameters must be finite"));
        }
        if !(self.si_drift_rms >= 0.0 && self.si_drift_rms.is_finite()) {
            return Err(ConfigError::Invalid("si_drift_rms must be finite and >= 0"));
        }
        if !(self.fe_cubic_c3 >= 0.0 && self.fe_cubic_c3.is_finite()) {
            return Err(ConfigError::Invalid("fe_cubic_c3 must be finite and >= 0"));
        }
        // Least-squares fits need comfortable overdetermination for the
        // largest basis (memory polynomial: 2 terms per tap).
        if self.n_cal < 64 || self.n_cal < 20 * self.si_profile.taps {
            return Err(ConfigError::Invalid(
                "n_cal too short for the canceller bases (need >= 64 and >= 20 per si tap)",
            ));
        }
        Ok(())
    }
}

/// One paradigm's run configuration: which chain, how resources are split,
/// and how hard the digital stage works.
#[derive(Clone, Copy, Debug)]
pub struct ParadigmConfig {
    pub paradigm: Paradigm,
    /// FDD/TDD only: fraction of the symbol budget given to A→B; B→A gets
    /// the rest. Ignored by the full-duplex paradigms.
    pub resource_split_alpha: f64,
    pub sic_mode: SicMode,
    /// SINR at the digital-stage input, i.e. after propagation and analog
    /// suppression, in dB. `+inf` disables the SI path entirely.
    pub pre_digital_sinr_db: f64,
    /// Baseline-chain code rate.
    pub ldpc_rate: NominalRate,
    /// Belief-propagation iteration cap for the baseline chain.
    pub bp_max_iter: usize,
}

impl ParadigmConfig {
    /// Reference configuration for a paradigm: even split, FIR canceller,
    /// -40 dB pre-digital SINR, the rate-7/12 code.
    pub fn for_paradigm(paradigm: Paradigm) -> Self {
        Self {
            paradigm,
            resource_split_alpha: 0.5,
            sic_mode: SicMode::Linear,
            pre_digital_sinr_db: -40.0,
            ldpc_rate: NominalRate::SevenTwelfths,
            bp_max_iter: 50,
        }
    }

    /// Rejects inconsistent configurations before any simulation work.
    ///
    /// Besides range checks this enforces resource fairness: the baseline
    /// chain's symbol budget (`n_tx / 2` QPSK symbols) must equal the
    /// semantic chain's `k_symbols`, so paradigm comparisons share one
    /// bandwidth overhead.
    pub fn validate(&self, spec: &ModelSpec) -> Result<(), ConfigError> {
        if !(self.resource_split_alpha >= 0.0 && self.resource_split_alpha <= 1.0) {
            return Err(ConfigError::AlphaOutOfRange(self.resource_split_alpha));
        }
        if self.pre_digital_sinr_db.is_nan() || self.pre_digital_sinr_db == f64::NEG_INFINITY {
            return Err(ConfigError::Invalid(
                "pre_digital_sinr_db must be finite or +inf",
            ));
        }
        if self.bp_max_iter == 0 {
            return Err(ConfigError::Invalid("bp_max_iter must be positive"));
        }
        match self.paradigm {
            Paradigm::Ibfd | Paradigm::Sdd => {
                let n_tx = 2 * spec.k_symbols;
                let code = RateMatchedCode::new(self.ldpc_rate, n_tx)
                    .ok_or(ConfigError::CodeUnbuildable { n_tx })?;
                if code.n_tx() / 2 != spec.k_symbols {
                    return Err(ConfigError::SymbolBudget {
                        baseline: code.n_tx() / 2,
                        semantic: spec.k_symbols,
                    });
                }
            }
            Paradigm::FddTdd => {
                let (n_ab, n_ba) = fdd_split(self.resource_split_alpha, spec.k_symbols);
                if RateMatchedCode::new(self.ldpc_rate, 2 * n_ab).is_none()
                    && RateMatchedCode::new(self.ldpc_rate, 2 * n_ba).is_none()
                {
                    return Err(ConfigError::Invalid(
                        "resource split leaves no usable direction",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Configuration rejected before simulation.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    Invalid(&'static str),
    AlphaOutOfRange(f64),
    SymbolBudget { baseline: usize, semantic: usize },
    CodeUnbuildable { n_tx: usize },
    PatchGeometry { expected: usize, width: usize, height: usize },
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
            ConfigError::AlphaOutOfRange(a) => {
                write!(f, "resource_split_alpha must lie in [0, 1], got {a}")
            }
            ConfigError::SymbolBudget { baseline, semantic } => write!(
                f,
                "unequal symbol budgets: baseline {baseline} vs semantic {semantic}"
            ),
            ConfigError::CodeUnbuildable { n_tx } => {
                write!(f, "no rate-matched code exists for n_tx = {n_tx}")
            }
            ConfigError::PatchGeometry {
                expected,
                width,
                height,
            } => write!(
                f,
                "patch is {width}x{height}, chains need {expected}x{expected} (multiple of 8)"
            ),
        }
    }
}

/// Receive front-end memoryless cubic: `y = x (1 + c3 |x|^2)`.
///
/// With `c3 = 0` this is exactly the identity.
pub fn frontend_cubic(x: &[Cf64], c3: f64) -> Vec<Cf64> {
    x.iter().map(|&v| v * (1.0 + c3 * v.norm_sqr())).collect()
}

/// Per-direction end-to-end outcome.
#[derive(Clone, Debug)]
pub struct DirectionOutcome {
    pub ms_ssim: f64,
    pub ms_ssim_db: f64,
    pub psnr: f64,
    /// Message-bit error rate of the baseline chain; NaN when the direction
    /// carried no coded bits (semantic chain, or a dead FDD/TDD leg).
    pub ber: f64,
    /// Channel decode failed (or the source decoder rejected the payload);
    /// the reconstruction is then concealment output.
    pub failed: bool,
    /// SINR at the digital-stage input, dB (capped to ±300).
    pub sinr_pre_digital_db: f64,
    /// SINR after digital cancellation, dB (capped to ±300).
    pub sinr_post_digital_db: f64,
    /// SI power removed by the digital stage, dB; NaN when no SI was
    /// present (FDD/TDD, or `pre_digital_sinr_db = +inf`).
    pub digital_suppression_db: f64,
    /// Suppression hit the measurement floor and is a clamped lower bound.
    pub suppression_floored: bool,
    pub reconstruction: ImagePatch,
}

/// Result of one two-way exchange. Direction `ab` is the patch sent by A
/// and measured at B; `ba` the reverse.
#[derive(Clone, Debug)]
pub struct SimResult {
    pub paradigm: Paradigm,
    pub ab: DirectionOutcome,
    pub ba: DirectionOutcome,
    /// Seed the run was keyed by; every internal stream id derives from it.
    pub seed: u64,
    /// Wall-clock runtime, filled in by the harness (this library is
    /// clock-free); 0 until set.
    pub runtime_seconds: f64,
}

struct LegStreams {
    fade: RngStream,
    si: RngStream,
    cal_pilot: RngStream,
    cal_noise: RngStream,
    drift: RngStream,
    noise: RngStream,
}

fn leg_streams(seed: u64, fade_label: u64, label: u64) -> LegStreams {
    let s = |lbl: u64, purpose: u64| {
        RngStream::new(seed, derive_stream_id(&[STREAM_DOMAIN, lbl, purpose]))
    };
    LegStreams {
        fade: s(fade_label, PURPOSE_FADE),
        si: s(label, PURPOSE_SI),
        cal_pilot: s(label, PURPOSE_CAL_PILOT),
        cal_noise: s(label, PURPOSE_CAL_NOISE),
        drift: s(label, PURPOSE_DRIFT),
        noise: s(label, PURPOSE_NOISE),
    }
}

fn cn_vec(n: usize, rng: &mut RngStream) -> Vec<Cf64> {
    (0..n).map(|_| rng.next_cn()).collect()
}

fn noise_vec(n: usize, noise_power: f64, rng: &mut RngStream) -> Vec<Cf64> {
    let a = math::sqrt(noise_power);
    (0..n).map(|_| rng.next_cn() * a).collect()
}

fn vadd(a: &[Cf64], b: &[Cf64]) -> Vec<Cf64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn vsub(a: &[Cf64], b: &[Cf64]) -> Vec<Cf64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn clamp_db(x: f64) -> f64 {
    x.clamp(NEG_INF_DB, -NEG_INF_DB)
}

/// Ground-truth measurements at one receiver, after the digital stage.
struct LegOutput {
    /// Received signal after digital cancellation.
    residual: Vec<Cf64>,
    sinr_pre_db: f64,
    sinr_post_db: f64,
    suppression_db: f64,
    suppression_floored: bool,
    /// Residual SI power after the digital stage (linear).
    p_si_post: f64,
}

/// One receiver's physical pipeline: SI calibration burst, canceller fit,
/// tap drift, payload reception, digital cancellation. The simulator keeps
/// exact component attributions (its privilege) so stage SINRs are
/// measured, not estimated.
#[allow(clippy::too_many_arguments)]
fn receive_leg(
    tx_desired: &[Cf64],
    tx_own: Option<&[Cf64]>,
    h_des: Cf64,
    noise_power: f64,
    si_power: f64,
    sic_mode: SicMode,
    sc: &ScenarioConfig,
    st: &mut LegStreams,
) -> LegOutput {
    let n = tx_desired.len();
    let c3 = sc.fe_cubic_c3;
    let rx_des: Vec<Cf64> = tx_desired.iter().map(|&s| s * h_des).collect();
    let des_fe = frontend_cubic(&rx_des, c3);
    let p_des = signal::power(&des_fe);
    let noise = noise_vec(n, noise_power, &mut st.noise);

    if si_power <= 0.0 || tx_own.is_none() {
        let rx = vadd(&des_fe, &noise);
        return LegOutput {
            residual: rx,
            sinr_pre_db: clamp_db(signal::sinr_db(p_des, 0.0, noise_power)),
            sinr_post_db: clamp_db(signal::sinr_db(p_des, 0.0, noise_power)),
            suppression_db: f64::NAN,
            suppression_floored: false,
            p_si_post: 0.0,
        };
    }
    let tx_own = tx_own.unwrap();

    // The coupling path realization, scaled so its tap power delivers the
    // calibrated SI level for unit-power transmit symbols.
    let raw = sc.si_profile.draw(&mut st.si);
    let g = math::sqrt(si_power / raw.power());
    let si_taps = ChannelTaps {
        taps: raw.taps.iter().map(|&t| t * g).collect(),
    };

    // Calibration burst: own transmit known, far end quiet.
    let canceller: Option<Canceller> = match sic_mode {
        SicMode::None | SicMode::Perfect => None,
        SicMode::Linear | SicMode::Nonlinear => {
            let pilots = cn_vec(sc.n_cal, &mut st.cal_pilot);
            let mut rx_cal = frontend_cubic(&si_taps.apply(&pilots), c3);
            let cal_noise = noise_vec(sc.n_cal, noise_power, &mut st.cal_noise);
            for (r, w) in rx_cal.iter_mut().zip(&cal_noise) {
                *r += w;
            }
            Some(match sic_mode {
                SicMode::Linear => {
                    Canceller::Linear(sic::ls_fit_linear(&pilots, &rx_cal, sc.si_profile.taps))
                }
                _ => {
                    let basis = NonlinearBasis::MemoryPolynomial(MemoryPolynomialBasis {
                        max_order: 3,
                        memory: sc.si_profile.taps,
                    });
                    let (c, _trace) = sic::fit_nonlinear(&pilots, &rx_cal, &basis)
                        .expect("n_cal validated against basis size");
                    Canceller::Nonlinear(c)
                }
            })
        }
    };

    // Payload: the coupling path has drifted slightly since calibration.
    let drifted = si_taps.drifted(sc.si_drift_rms, &mut st.drift);
    let analog = vadd(&rx_des, &drifted.apply(tx_own));
    let total_fe = frontend_cubic(&analog, c3);
    let si_in_rx = vsub(&total_fe, &des_fe);
    let rx = vadd(&total_fe, &noise);

    let residual = match (&canceller, sic_mode) {
        // The oracle removes the interference term exactly: reassemble the
        // clean components rather than subtracting, so no rounding residue
        // from the sum survives into the decoder input.
        (_, SicMode::Perfect) => vadd(&des_fe, &noise),
        (Some(Canceller::Linear(c)), _) => sic::cancel(&rx, tx_own, c),
        (Some(Canceller::Nonlinear(c)), _) => sic::cancel(&rx, tx_own, c),
        (None, _) => rx.clone(),
    };

    let p_si_pre = signal::power(&si_in_rx);
    let si_post = vsub(&vsub(&residual, &des_fe), &noise);
    let p_si_post = signal::power(&si_post);
    let floor = p_si_pre * 1e-12;
    let floored = p_si_post <= floor;
    LegOutput {
        residual,
        sinr_pre_db: clamp_db(signal::sinr_db(p_des, p_si_pre, noise_power)),
        sinr_post_db: clamp_db(signal::sinr_db(p_des, p_si_post, noise_power)),
        suppression_db: 10.0 * math::log10(p_si_pre / p_si_post.max(floor)),
        suppression_floored: floored,
        p_si_post,
    }
}

enum Canceller {
    Linear(sic::LinearCanceller),
    Nonlinear(sic::NonlinearCanceller),
}

struct BaselineTx {
    symbols: Vec<Cf64>,
    msg_bits: Vec<u8>,
}

fn baseline_encode(patch: &ImagePatch, code: &RateMatchedCode) -> BaselineTx {
    let mut msg = match codec::encode_to_budget(patch, code.k_msg()) {
        Some((bits, _step)) => bits,
        // Pathologically small budget: transmit an empty payload; the
        // receiver's header check will conceal the patch.
        None => Vec::new(),
    };
    msg.resize(code.k_msg(), 0);
    let coded = code.encode(&msg);
    BaselineTx {
        symbols: modem::qpsk_modulate(&coded),
        msg_bits: msg,
    }
}

/// Quantizer step index claimed by a received bitstream header (bits 32..40,
/// MSB first), if plausible.
fn parse_step_idx(bits: &[u8]) -> Option<usize> {
    if bits.len() < codec::HEADER_BITS {
        return None;
    }
    let mut v = 0usize;
    for &b in &bits[32..40] {
        v = (v << 1) | (b & 1) as usize;
    }
    (v < codec::NUM_STEPS).then_some(v)
}

struct BaselineRx {
    patch: ImagePatch,
    failed: bool,
    ber: f64,
}

fn baseline_decode(
    equalized: &[Cf64],
    noise_var: f64,
    code: &RateMatchedCode,
    tx_msg: &[u8],
    patch_size: usize,
    bp_max_iter: usize,
) -> BaselineRx {
    let llr = modem::qpsk_llr(equalized, noise_var.max(1e-300));
    let out = code.decode(&llr, bp_max_iter);
    let errs = out
        .message
        .iter()
        .zip(tx_msg)
        .filter(|(a, b)| a != b)
        .count();
    let ber = errs as f64 / tx_msg.len() as f64;
    let (patch, codec_failed) = match parse_step_idx(&out.message) {
        Some(step) => {
            let o = codec::decode(&out.message, step, patch_size, patch_size);
            (o.patch, o.failed)
        }
        None => (
            ImagePatch::constant(patch_size, patch_size, 0.5),
            true,
        ),
    };
    BaselineRx {
        patch,
        failed: !out.converged || codec_failed,
        ber,
    }
}

fn measure_direction(
    original: &ImagePatch,
    reconstruction: ImagePatch,
    ber: f64,
    failed: bool,
    leg: Option<&LegOutput>,
) -> DirectionOutcome {
    let ms = metrics::ms_ssim(original, &reconstruction);
    let (pre, post, supp, floored) = match leg {
        Some(l) => (
            l.sinr_pre_db,
            l.sinr_post_db,
            l.suppression_db,
            l.suppression_floored,
        ),
        // Direction carried nothing: no receiver ran.
        None => (NEG_INF_DB, NEG_INF_DB, f64::NAN, false),
    };
    DirectionOutcome {
        ms_ssim: ms,
        ms_ssim_db: metrics::ms_ssim_db(ms),
        psnr: metrics::psnr(original, &reconstruction),
        ber,
        failed,
        sinr_pre_digital_db: pre,
        sinr_post_digital_db: post,
        digital_suppression_db: supp,
        suppression_floored: floored,
        reconstruction,
    }
}

fn validate_patch(patch: &ImagePatch, spec: &ModelSpec) -> Result<(), ConfigError> {
    let ok = patch.width == spec.patch_size
        && patch.height == spec.patch_size
        && spec.patch_size.is_multiple_of(8)
        && spec.patch_size >= 11;
    if ok {
        Ok(())
    } else {
        Err(ConfigError::PatchGeometry {
            expected: spec.patch_size,
            width: patch.width,
            height: patch.height,
        })
    }
}

fn draw_fade(fading: DesiredFading, rng: &mut RngStream) -> Cf64 {
    match fading {
        DesiredFading::Rayleigh => rng.next_cn(),
        DesiredFading::Unit => Cf64::new(1.0, 0.0),
    }
}

/// FDD/TDD symbol split: A→B gets `round(alpha * budget)`, B→A the rest.
fn fdd_split(alpha: f64, budget: usize) -> (usize, usize) {
    let n_ab = math::round(alpha * budget as f64) as usize;
    let n_ab = n_ab.min(budget);
    (n_ab, budget - n_ab)
}

/// Equalizer gain: the receiver knows the desired-link fade. The floor only
/// guards against a measure-zero exact null.
fn eq_gain(h: Cf64) -> Cf64 {
    if h.norm_sqr() >= 1e-24 {
        h
    } else {
        Cf64::new(1e-12, 0.0)
    }
}

/// Simulate one two-way patch exchange under `cfg.paradigm`.
///
/// Pipeline per direction: chain encode → desired-link fade → (full-duplex
/// paradigms only) SI coupling at the calibrated pre-digital power, front
/// end, digital SIC with the known own-transmit reference → genie-equalized
/// chain decode → metrics. FDD/TDD skips the SI path and instead
/// time-shares the symbol budget by `resource_split_alpha`.
///
/// Inconsistent configurations are rejected before any simulation work.
/// Fully deterministic given `seed`.
pub fn run_two_way(
    cfg: &ParadigmConfig,
    scenario: &ScenarioConfig,
    model: &JsccModel,
    patch_ab: &ImagePatch,
    patch_ba: &ImagePatch,
    seed: u64,
) -> Result<SimResult, ConfigError> {
    cfg.validate(&model.spec)?;
    scenario.validate()?;
    validate_patch(patch_ab, &model.spec)?;
    validate_patch(patch_ba, &model.spec)?;
    if cfg.pre_digital_sinr_db.is_finite() && cfg.pre_digital_sinr_db > scenario.snr_db {
        return Err(ConfigError::Invalid(
            "pre_digital_sinr_db exceeds the noise-limited snr_db",
        ));
    }

    let noise_power = math::db_to_lin(-scenario.snr_db);
    let si_power = if cfg.pre_digital_sinr_db.is_finite() {
        calibrate_si_power(cfg.pre_digital_sinr_db, 1.0, noise_power)
    } else {
        0.0
    };
    let originals = [patch_ab, patch_ba];
    let k = model.spec.k_symbols;
    let patch_size = model.spec.patch_size;

    let mut outcomes: Vec<DirectionOutcome> = Vec::with_capacity(2);
    match cfg.paradigm {
        Paradigm::FddTdd => {
            let splits = fdd_split(cfg.resource_split_alpha, k);
            let splits = [splits.0, splits.1];
            for dir in 0..2usize {
                let code = RateMatchedCode::new(cfg.ldpc_rate, 2 * splits[dir]);
                let mut st = leg_streams(
                    seed,
                    if scenario.reciprocal { 0 } else { dir as u64 },
                    dir as u64,
                );
                let outcome = match code {
                    None => measure_direction(
                        originals[dir],
                        ImagePatch::constant(patch_size, patch_size, 0.5),
                        f64::NAN,
                        true,
                        None,
                    ),
                    Some(code) => {
                        let tx = baseline_encode(originals[dir], &code);
                        let h = draw_fade(scenario.desired_fading, &mut st.fade);
                        let leg = receive_leg(
                            &tx.symbols,
                            None,
                            h,
                            noise_power,
                            0.0,
                            SicMode::None,
                            scenario,
                            &mut st,
                        );
                        let h = eq_gain(h);
                        let y: Vec<Cf64> = leg.residual.iter().map(|&v| v / h).collect();
                        let nv_eff = signal::power(&vsub(&y, &tx.symbols));
                        let rx = baseline_decode(
                            &y,
                            nv_eff,
                            &code,
                            &tx.msg_bits,
                            patch_size,
                            cfg.bp_max_iter,
                        );
                        measure_direction(
                            originals[dir],
                            rx.patch,
                            rx.ber,
                            rx.failed,
                            Some(&leg),
                        )
                    }
                };
                outcomes.push(outcome);
            }
        }
        Paradigm::Ibfd => {
            let code = RateMatchedCode::new(cfg.ldpc_rate, 2 * k).expect("validated");
            let tx: Vec<BaselineTx> = originals
                .iter()
                .map(|p| baseline_encode(p, &code))
                .collect();
            for dir in 0..2usize {
                let own = 1 - dir;
                let mut st = leg_streams(
                    seed,
                    if scenario.reciprocal { 0 } else { dir as u64 },
                    dir as u64,
                );
                let h = draw_fade(scenario.desired_fading, &mut st.fade);
                let leg = receive_leg(
                    &tx[dir].symbols,
                    Some(&tx[own].symbols),
                    h,
                    noise_power,
                    si_power,
                    cfg.sic_mode,
                    scenario,
                    &mut st,
                );
                let h = eq_gain(h);
                let y: Vec<Cf64> = leg.residual.iter().map(|&v| v / h).collect();
                let nv_eff = signal::power(&vsub(&y, &tx[dir].symbols));
                let rx = baseline_decode(
                    &y,
                    nv_eff,
                    &code,
                    &tx[dir].msg_bits,
                    patch_size,
                    cfg.bp_max_iter,
                );
                outcomes.push(measure_direction(
                    originals[dir],
                    rx.patch,
                    rx.ber,
                    rx.failed,
                    Some(&leg),
                ));
            }
        }
        Paradigm::Sdd => {
            let tx: Vec<Vec<Cf64>> = originals
                .iter()
                .enumerate()
                .map(|(dir, p)| model.encode(p, dir))
                .collect();
            for dir in 0..2usize {
                let own = 1 - dir;
                let mut st = leg_streams(
                    seed,
                    if scenario.reciprocal { 0 } else { dir as u64 },
                    dir as u64,
                );
                let h = draw_fade(scenario.desired_fading, &mut st.fade);
                let leg = receive_leg(
                    &tx[dir],
                    Some(&tx[own]),
                    h,
                    noise_power,
                    si_power,
                    cfg.sic_mode,
                    scenario,
                    &mut st,
                );
                let h = eq_gain(h);
                let y: Vec<Cf64> = leg.residual.iter().map(|&v| v / h).collect();
                let recon = model.decode(&y, dir);
                outcomes.push(measure_direction(
                    originals[dir],
                    recon,
                    f64::NAN,
                    false,
                    Some(&leg),
                ));
            }
        }
    }

    let ba = outcomes.pop().expect("two directions");
    let ab = outcomes.pop().expect("two directions");
    Ok(SimResult {
        paradigm: cfg.paradigm,
        ab,
        ba,
        seed,
        runtime_seconds: 0.0,
    })
}

/// Measure the mean post-digital residual SI power (relative to a unit
/// desired signal) at each requested pre-digital SINR, on the given
/// scenario. Feeds the semantic trainer's residual model with anchors that
/// match what the deployed pipeline actually leaves behind.
///
/// Probe signals are unit-power complex-normal symbol streams; draws are
/// shared across the SINR points (per trial), so the anchor curve is
/// smooth in the calibrated power alone.
///
/// # Panics
/// Panics if a requested point is not finite or exceeds the noise-limited
/// SNR, or if `trials == 0`, or if the scenario fails validation.
pub fn measure_residual_anchors(
    scenario: &ScenarioConfig,
    sic_mode: SicMode,
    pre_list_db: &[f64],
    trials: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    scenario.validate().expect("scenario must validate");
    assert!(trials > 0, "trials must be positive");
    let noise_power = math::db_to_lin(-scenario.snr_db);
    let n_probe = 256usize;
    pre_list_db
        .iter()
        .map(|&pre| {
            assert!(pre.is_finite(), "anchor points must be finite");
            let si_power = calibrate_si_power(pre, 1.0, noise_power);
            let mut acc = 0.0;
            for t in 0..trials {
                let label = PROBE_LABEL_BASE + t as u64;
                let mut st = leg_streams(seed, label, label);
                let desired = cn_vec(
                    n_probe,
                    &mut RngStream::new(
                        seed,
                        derive_stream_id(&[STREAM_DOMAIN, label, PURPOSE_PROBE_DESIRED]),
                    ),
                );
                let own = cn_vec(
                    n_probe,
                    &mut RngStream::new(
                        seed,
                        derive_stream_id(&[STREAM_DOMAIN, label, PURPOSE_PROBE_OWN]),
                    ),
                );
                let leg = receive_leg(
                    &desired,
                    Some(&own),
                    Cf64::new(1.0, 0.0),
                    noise_power,
                    si_power,
                    sic_mode,
                    scenario,
                    &mut st,
                );
                acc += leg.p_si_post;
            }
            (pre, acc / trials as f64)
        })
        .collect()
}

/// Everything about a sweep except the axis: scenario, canceller mode, and
/// chain parameters shared across the grid.
#[derive(Clone, Debug)]
pub struct SweepTemplate {
    pub paradigms: Vec<Paradigm>,
    pub scenario: ScenarioConfig,
    pub sic_mode: SicMode,
    pub resource_split_alpha: f64,
    pub ldpc_rate: NominalRate,
    pub bp_max_iter: usize,
}

impl Default for SweepTemplate {
    fn default() -> Self {
        Self {
            paradigms: Paradigm::ALL.to_vec(),
            scenario: ScenarioConfig::default(),
            sic_mode: SicMode::Linear,
            resource_split_alpha: 0.5,
            ldpc_rate: NominalRate::SevenTwelfths,
            bp_max_iter: 50,
        }
    }
}

/// One aggregated sweep point: both directions of all trials pooled.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub paradigm: Paradigm,
    pub sinr_db: f64,
    pub trials: usize,
    pub ms_ssim_mean: f64,
    /// Standard error of the MS-SSIM mean over the pooled samples.
    pub ms_ssim_stderr: f64,
    pub ms_ssim_db_mean: f64,
    /// NaN when the paradigm carried no coded bits (semantic chain).
    pub ber_mean: f64,
    pub failure_rate: f64,
    /// NaN when no digital stage ran (FDD/TDD).
    pub suppression_db_mean: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn stderr_of_mean(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    math::sqrt(var / v.len() as f64)
}

fn mean_finite(v: &[f64]) -> f64 {
    let finite: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if finite.is_empty() {
        f64::NAN
    } else {
        mean(&finite)
    }
}

/// Run `trials` two-way exchanges per (paradigm, SINR) grid point and
/// aggregate. Rows come back ordered by (paradigm, SINR ascending).
///
/// Trial `t` exchanges `patches_ab[t % len]` and `patches_ba[t % len]` and
/// is keyed by a seed derived from `(master_seed, t)` alone — common random
/// numbers across paradigms and SINR points, so curves differ by paradigm
/// and interference level, not by draw luck. Trials remain mutually
/// independent, and results are independent of execution order.
pub fn sweep(
    template: &SweepTemplate,
    sinr_list_db: &[f64],
    model: &JsccModel,
    patches_ab: &[ImagePatch],
    patches_ba: &[ImagePatch],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<SweepRow>, ConfigError> {
    if sinr_list_db.is_empty() {
        return Err(ConfigError::Invalid("sweep needs at least one SINR point"));
    }
    if sinr_list_db.iter().any(|s| s.is_nan()) {
        return Err(ConfigError::Invalid("SINR grid points must not be NaN"));
    }
    if patches_ab.is_empty() || patches_ba.is_empty() {
        return Err(ConfigError::Invalid("sweep needs a non-empty corpus"));
    }
    if trials == 0 {
        return Err(ConfigError::Invalid("sweep needs at least one trial"));
    }
    if template.paradigms.is_empty() {
        return Err(ConfigError::Invalid("sweep needs at least one paradigm"));
    }

    let mut grid: Vec<f64> = sinr_list_db.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("grid checked for NaN"));
    grid.dedup();

    let mut rows = Vec::new();
    for paradigm in Paradigm::ALL {
        if !template.paradigms.contains(&paradigm) {
            continue;
        }
        for &sinr in &grid {
            let cfg = ParadigmConfig {
                paradigm,
                resource_split_alpha: template.resource_split_alpha,
                sic_mode: template.sic_mode,
                pre_digital_sinr_db: sinr,
                ldpc_rate: template.ldpc_rate,
                bp_max_iter: template.bp_max_iter,
            };
            let mut ms = Vec::with_capacity(2 * trials);
            let mut msdb = Vec::with_capacity(2 * trials);
            let mut ber = Vec::with_capacity(2 * trials);
            let mut supp = Vec::with_capacity(2 * trials);
            let mut failures = 0usize;
            for t in 0..trials {
                let run_seed = derive_stream_id(&[master_seed, t as u64]);
                let res = run_two_way(
                    &cfg,
                    &template.scenario,
                    model,
                    &patches_ab[t % patches_ab.len()],
                    &patches_ba[t % patches_ba.len()],
                    run_seed,
                )?;
                for o in [&res.ab, &res.ba] {
                    ms.push(o.ms_ssim);
                    msdb.push(o.ms_ssim_db);
                    ber.push(o.ber);
                    supp.push(o.digital_suppression_db);
                    failures += o.failed as usize;
                }
            }
            rows.push(SweepRow {
                paradigm,
                sinr_db: sinr,
                trials,
                ms_ssim_mean: mean(&ms),
                ms_ssim_stderr: stderr_of_mean(&ms),
                ms_ssim_db_mean: mean(&msdb),
                ber_mean: mean_finite(&ber),
                failure_rate: failures as f64 / ms.len() as f64,
                suppression_db_mean: mean_finite(&supp),
            });
        }
    }
    Ok(rows)
}
