//! Experiment configuration: one TOML document covering every exposed
//! default, strict about unknown keys, echoed verbatim into each output
//! directory.
//!
//! The document is deserialized with every key optional (missing keys take
//! the documented defaults) and then *resolved* into the core types. The
//! resolved form — not the user's partial file — is what gets echoed, so
//! an output directory always records the complete effective setting.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use duplex_core::baseline::ldpc::NominalRate;
use duplex_core::channel::{LinkBudget, RicianProfile};
use duplex_core::duplex::{DesiredFading, ParadigmConfig, ScenarioConfig, SicMode};
use duplex_core::feasibility::{EfficiencyModel, Paradigm, NEG_INF_DB};
use duplex_core::semantic::model::{Conditioning, ModelSpec};
use duplex_core::semantic::train::{LossKind, ResidualShape, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "d_corpus_dir")]
    pub corpus_dir: String,
    #[serde(default = "d_out_dir")]
    pub out_dir: String,
    #[serde(default = "d_master_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub ldpc: LdpcSection,
    #[serde(default)]
    pub sic: SicSection,
    #[serde(default)]
    pub jscc: JsccSection,
    #[serde(default)]
    pub feasibility: FeasibilitySection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn d_corpus_dir() -> String {
    "crates/cli/assets/corpus".into()
}
fn d_out_dir() -> String {
    "out".into()
}
fn d_master_seed() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default = "d_snr_db")]
    pub snr_db: f64,
    /// "rayleigh" or "unit".
    #[serde(default = "d_desired_fading")]
    pub desired_fading: String,
    #[serde(default = "d_si_taps")]
    pub si_taps: usize,
    #[serde(default = "d_si_k_factor_db")]
    pub si_k_factor_db: f64,
    /// Exponential power-delay-profile decay constant, in taps.
    #[serde(default = "d_si_decay")]
    pub si_decay: f64,
    /// Fixed line-of-sight phase, radians.
    #[serde(default)]
    pub si_los_phase: f64,
    /// Relative per-tap drift between calibration and payload.
    #[serde(default = "d_si_drift_rms")]
    pub si_drift_rms: f64,
    /// Front-end cubic coefficient.
    #[serde(default = "d_fe_cubic_c3")]
    pub fe_cubic_c3: f64,
    /// Calibration burst length in symbols.
    #[serde(default = "d_n_cal")]
    pub n_cal: usize,
    #[serde(default)]
    pub reciprocal: bool,
}

fn d_snr_db() -> f64 {
    15.0
}
fn d_desired_fading() -> String {
    "rayleigh".into()
}
fn d_si_taps() -> usize {
    3
}
fn d_si_k_factor_db() -> f64 {
    10.0
}
fn d_si_decay() -> f64 {
    RicianProfile::default().decay
}
fn d_si_drift_rms() -> f64 {
    3e-3
}
fn d_fe_cubic_c3() -> f64 {
    1e-8
}
fn d_n_cal() -> usize {
    2048
}

impl Default for ChannelSection {
    fn default() -> Self {
        toml::from_str("").expect("empty channel section must resolve to defaults")
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LdpcSection {
    /// "1/3" or "7/12".
    #[serde(default = "d_rate")]
    pub rate: String,
    #[serde(default = "d_bp_max_iter")]
    pub bp_max_iter: usize,
}

fn d_rate() -> String {
    "7/12".into()
}
fn d_bp_max_iter() -> usize {
    50
}

impl Default for LdpcSection {
    fn default() -> Self {
        toml::from_str("").expect("empty ldpc section must resolve to defaults")
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SicSection {
    /// "none", "linear", "nonlinear" or "perfect".
    #[serde(default = "d_sic_mode")]
    pub mode: String,
}

fn d_sic_mode() -> String {
    "linear".into()
}

impl Default for SicSection {
    fn default() -> Self {
        toml::from_str("").expect("empty sic section must resolve to defaults")
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JsccSection {
    #[serde(default = "d_patch_size")]
    pub patch_size: usize,
    #[serde(default = "d_d_c")]
    pub d_c: usize,
    #[serde(default = "d_hidden")]
    pub hidden: usize,
    #[serde(default = "d_n_hidden_layers")]
    pub n_hidden_layers: usize,
    #[serde(default = "d_k_symbols")]
    pub k_symbols: usize,
    /// "embedding" or "separate".
    #[serde(default = "d_conditioning")]
    pub conditioning: String,
    #[serde(default = "d_true")]
    pub use_phase_signatures: bool,
    #[serde(default = "d_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "d_batch_size")]
    pub batch_size: usize,
    #[serde(default = "d_steps")]
    pub steps: usize,
    #[serde(default = "d_train_seed")]
    pub train_seed: u64,
    #[serde(default = "d_sinr_train_low_db")]
    pub sinr_train_low_db: f64,
    #[serde(default = "d_sinr_train_high_db")]
    pub sinr_train_high_db: f64,
    /// "mse" or "ms_ssim".
    #[serde(default = "d_loss")]
    pub loss: String,
    #[serde(default = "d_momentum")]
    pub momentum: f64,
    #[serde(default = "d_clip_norm")]
    pub clip_norm: f64,
    /// Residual statistics during training: "measured" (the receiver's own
    /// filtered signal at the measured post-SIC power) or "gaussian".
    #[serde(default = "d_residual_shape")]
    pub residual_shape: String,
    /// Where `train` writes the model and `sweep`/`demo` read it from,
    /// relative to the working directory.
    #[serde(default = "d_model_file")]
    pub model_file: String,
}

fn d_patch_size() -> usize {
    16
}
fn d_d_c() -> usize {
    8
}
fn d_hidden() -> usize {
    256
}
fn d_n_hidden_layers() -> usize {
    2
}
fn d_k_symbols() -> usize {
    128
}
fn d_conditioning() -> String {
    "embedding".into()
}
fn d_true() -> bool {
    true
}
fn d_learning_rate() -> f64 {
    0.05
}
fn d_batch_size() -> usize {
    16
}
fn d_steps() -> usize {
    8000
}
fn d_train_seed() -> u64 {
    7
}
fn d_sinr_train_low_db() -> f64 {
    -50.0
}
fn d_sinr_train_high_db() -> f64 {
    -30.0
}
fn d_loss() -> String {
    "mse".into()
}
fn d_momentum() -> f64 {
    0.9
}
fn d_clip_norm() -> f64 {
    5.0
}
fn d_residual_shape() -> String {
    "measured".into()
}
fn d_model_file() -> String {
    "model.sddm".into()
}

impl Default for JsccSection {
    fn default() -> Self {
        toml::from_str("").expect("empty jscc section must resolve to defaults")
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilitySection {
    #[serde(default = "d_tx_power_dbm")]
    pub tx_power_dbm: f64,
    #[serde(default = "d_carrier_hz")]
    pub carrier_hz: f64,
    #[serde(default = "d_distance_m")]
    pub distance_m: f64,
    #[serde(default = "d_path_loss_exponent")]
    pub path_loss_exponent: f64,
    /// Combined propagation + analog SI suppression in dB.
    #[serde(default = "d_si_isolation_db")]
    pub si_isolation_db: f64,
    #[serde(default = "d_noise_floor_dbm")]
    pub noise_floor_dbm: f64,
    #[serde(default = "d_eta_sep")]
    pub eta_sep: f64,
    #[serde(default = "d_eta_jscc")]
    pub eta_jscc: f64,
    /// Post-SIC residual relative to noise, dB; -300 or below means none.
    #[serde(default = "d_residual_si_db")]
    pub residual_si_db: f64,
    /// Source coding rates (A→B, B→A) normalizing the Feasibility metric.
    #[serde(default = "d_one")]
    pub src_rate_ab: f64,
    #[serde(default = "d_one")]
    pub src_rate_ba: f64,
    /// Vertices on the FDD/TDD time-sharing frontier.
    #[serde(default = "d_region_points")]
    pub n_points: usize,
}

fn d_tx_power_dbm() -> f64 {
    20.0
}
fn d_carrier_hz() -> f64 {
    2.9e9
}
fn d_distance_m() -> f64 {
    25.0
}
fn d_path_loss_exponent() -> f64 {
    2.0
}
fn d_si_isolation_db() -> f64 {
    40.0
}
fn d_noise_floor_dbm() -> f64 {
    -90.0
}
fn d_eta_sep() -> f64 {
    0.75
}
fn d_eta_jscc() -> f64 {
    0.95
}
fn d_residual_si_db() -> f64 {
    NEG_INF_DB
}
fn d_one() -> f64 {
    1.0
}
fn d_region_points() -> usize {
    11
}

impl Default for FeasibilitySection {
    fn default() -> Self {
        toml::from_str("").expect("empty feasibility section must resolve to defaults")
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "d_sinr_start_db")]
    pub sinr_start_db: f64,
    #[serde(default = "d_sinr_stop_db")]
    pub sinr_stop_db: f64,
    #[serde(default = "d_sweep_points")]
    pub n_points: usize,
    #[serde(default = "d_trials")]
    pub trials: usize,
    /// Any of "fdd_tdd", "ibfd", "sdd".
    #[serde(default = "d_paradigms")]
    pub paradigms: Vec<String>,
    /// FDD/TDD time split toward A→B.
    #[serde(default = "d_alpha")]
    pub resource_split_alpha: f64,
}

fn d_sinr_start_db() -> f64 {
    -50.0
}
fn d_sinr_stop_db() -> f64 {
    -30.0
}
fn d_sweep_points() -> usize {
    11
}
fn d_trials() -> usize {
    20
}
fn d_paradigms() -> Vec<String> {
    vec!["fdd_tdd".into(), "ibfd".into(), "sdd".into()]
}
fn d_alpha() -> f64 {
    0.5
}

impl Default for SweepSection {
    fn default() -> Self {
        toml::from_str("").expect("empty sweep section must resolve to defaults")
    }
}

impl ExperimentConfig {
    /// Parse a TOML document, rejecting unknown keys.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("parsing config")?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// The fully-defaulted document as TOML — what gets echoed to disk.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let desired_fading = match self.channel.desired_fading.as_str() {
            "rayleigh" => DesiredFading::Rayleigh,
            "unit" => DesiredFading::Unit,
            other => bail!("channel.desired_fading: unknown value {other:?}"),
        };
        let sc = ScenarioConfig {
            snr_db: self.channel.snr_db,
            desired_fading,
            si_profile: RicianProfile {
                taps: self.channel.si_taps,
                k_factor_db: self.channel.si_k_factor_db,
                decay: self.channel.si_decay,
                los_phase: self.channel.si_los_phase,
            },
            si_drift_rms: self.channel.si_drift_rms,
            fe_cubic_c3: self.channel.fe_cubic_c3,
            n_cal: self.channel.n_cal,
            reciprocal: self.channel.reciprocal,
        };
        sc.validate().map_err(|e| anyhow::anyhow!("channel config: {e}"))?;
        Ok(sc)
    }

    pub fn sic_mode(&self) -> Result<SicMode> {
        SicMode::parse(&self.sic.mode)
            .ok_or_else(|| anyhow::anyhow!("sic.mode: unknown value {:?}", self.sic.mode))
    }

    pub fn ldpc_rate(&self) -> Result<NominalRate> {
        match self.ldpc.rate.as_str() {
            "1/3" => Ok(NominalRate::OneThird),
            "7/12" => Ok(NominalRate::SevenTwelfths),
            other => bail!("ldpc.rate: unknown value {other:?} (use \"1/3\" or \"7/12\")"),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let conditioning = match self.jscc.conditioning.as_str() {
            "embedding" => Conditioning::Embedding,
            "separate" => Conditioning::SeparateModels,
            other => bail!("jscc.conditioning: unknown value {other:?}"),
        };
        Ok(ModelSpec {
            patch_size: self.jscc.patch_size,
            d_c: self.jscc.d_c,
            hidden: self.jscc.hidden,
            n_hidden_layers: self.jscc.n_hidden_layers,
            k_symbols: self.jscc.k_symbols,
            n_directions: 2,
            conditioning,
            use_phase_signatures: self.jscc.use_phase_signatures,
        })
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let loss = match self.jscc.loss.as_str() {
            "mse" => LossKind::Mse,
            "ms_ssim" => LossKind::MsSsim,
            other => bail!("jscc.loss: unknown value {other:?}"),
        };
        Ok(TrainConfig {
            learning_rate: self.jscc.learning_rate,
            batch_size: self.jscc.batch_size,
            steps: self.jscc.steps,
            seed: self.jscc.train_seed,
            sinr_train_range_db: (self.jscc.sinr_train_low_db, self.jscc.sinr_train_high_db),
            loss,
            patch_size: self.jscc.patch_size,
            momentum: self.jscc.momentum,
            clip_norm: self.jscc.clip_norm,
        })
    }

    pub fn residual_shape(&self) -> Result<ResidualShape> {
        match self.jscc.residual_shape.as_str() {
            "measured" => Ok(ResidualShape::FilteredOwnSignal),
            "gaussian" => Ok(ResidualShape::Gaussian),
            other => bail!("jscc.residual_shape: unknown value {other:?}"),
        }
    }

    pub fn paradigm_config(&self, paradigm: Paradigm) -> Result<ParadigmConfig> {
        Ok(ParadigmConfig {
            paradigm,
            resource_split_alpha: self.sweep.resource_split_alpha,
            sic_mode: self.sic_mode()?,
            // placeholder; the sweep supplies its grid values per point
            pre_digital_sinr_db: self.sweep.sinr_start_db,
            ldpc_rate: self.ldpc_rate()?,
            bp_max_iter: self.ldpc.bp_max_iter,
        })
    }

    pub fn paradigms(&self) -> Result<Vec<Paradigm>> {
        let mut out = Vec::new();
        for name in &self.sweep.paradigms {
            let p = Paradigm::parse(name)
                .ok_or_else(|| anyhow::anyhow!("sweep.paradigms: unknown value {name:?}"))?;
            if !out.contains(&p) {
                out.push(p);
            }
        }
        if out.is_empty() {
            bail!("sweep.paradigms must name at least one paradigm");
        }
        Ok(out)
    }

    pub fn sinr_grid(&self) -> Result<Vec<f64>> {
        let s = &self.sweep;
        if s.n_points == 0 {
            bail!("sweep.n_points must be positive");
        }
        if !s.sinr_start_db.is_finite() || !s.sinr_stop_db.is_finite() {
            bail!("sweep SINR endpoints must be finite");
        }
        if s.n_points == 1 {
            return Ok(vec![s.sinr_start_db]);
        }
        let step = (s.sinr_stop_db - s.sinr_start_db) / (s.n_points - 1) as f64;
        Ok((0..s.n_points).map(|i| s.sinr_start_db + step * i as f64).collect())
    }

    pub fn link_budget(&self) -> LinkBudget {
        let f = &self.feasibility;
        LinkBudget {
            tx_power_dbm: f.tx_power_dbm,
            carrier_hz: f.carrier_hz,
            distance_m: f.distance_m,
            path_loss_exponent: f.path_loss_exponent,
            si_isolation_db: f.si_isolation_db,
            noise_floor_dbm: f.noise_floor_dbm,
        }
    }

    pub fn efficiency_model(&self) -> Result<EfficiencyModel> {
        let f = &self.feasibility;
        let em = EfficiencyModel {
            eta_sep: f.eta_sep,
            eta_jscc: f.eta_jscc,
            residual_si_db: f.residual_si_db,
        };
        if !(f.eta_sep > 0.0 && f.eta_sep <= f.eta_jscc && f.eta_jscc <= 1.0) {
            bail!("feasibility: need 0 < eta_sep <= eta_jscc <= 1");
        }
        Ok(em)
    }

    pub fn model_path(&self) -> PathBuf {
        PathBuf::from(&self.jscc.model_file)
    }

    /// Cross-cutting checks that individual section resolvers can't see.
    pub fn validate(&self) -> Result<()> {
        let scenario = self.scenario()?;
        let spec = self.model_spec()?;
        let tc = self.train_config()?;
        self.residual_shape()?;
        self.efficiency_model()?;
        let grid = self.sinr_grid()?;
        let paradigms = self.paradigms()?;
        if self.sweep.trials == 0 {
            bail!("sweep.trials must be positive");
        }
        if tc.steps == 0 {
            bail!("jscc.steps must be positive");
        }
        if self.feasibility.n_points < 2 {
            bail!("feasibility.n_points must be at least 2");
        }
        if !(self.feasibility.src_rate_ab > 0.0 && self.feasibility.src_rate_ba > 0.0) {
            bail!("feasibility source rates must be positive");
        }
        // the resource-fairness assertion (equal symbol budgets, buildable
        // code) lives in the core validator; run it for every paradigm at
        // every grid point's operating SINR
        for &p in &paradigms {
            let mut pc = self.paradigm_config(p)?;
            for &sinr in &grid {
                pc.pre_digital_sinr_db = sinr;
                pc.validate(&spec)
                    .map_err(|e| anyhow::anyhow!("paradigm {}: {e}", p.label()))?;
            }
        }
        drop(scenario);
        Ok(())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty document must resolve to defaults")
    }
}
