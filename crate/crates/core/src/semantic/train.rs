//! End-to-end trainer for the JSCC model plus its gradient verifier.
//!
//! Each step draws one patch per direction, encodes both, and forms each
//! receiver's observation as `desired + residual-SI + noise`. The residual
//! self-interference is the receiver's *own rotated transmission* passed
//! through a short random filter and scaled so that its power matches the
//! digital-SIC residual measured for the scenario (anchor table,
//! interpolated in dB against the pre-digital SINR drawn for the step).
//! A config switch replaces the structured residual with same-power
//! Gaussian noise. Gradients flow through both the desired and the
//! interference paths, so the optimizer simultaneously learns robust
//! representations and interference-shy signatures.
//!
//! Everything is reverse-mode differentiated by hand: decoder MLP,
//! channel mixing (filter adjoint = correlation with conjugate taps),
//! signature rotation (adjoint = opposite rotation), power normalization
//! (quotient rule), encoder MLP. `gradient_check` compares the whole chain
//! against central finite differences.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::ImagePatch;
use crate::math;
use crate::metrics;
use crate::rng::{derive_stream_id, RngStream};
use crate::semantic::model::{
    power_normalize, power_normalize_backward, reals_to_complex, rotate_in_place, JsccModel,
};
use crate::semantic::nn::{clip_global_norm, MlpCache, SgdMomentum};
use crate::Cf64;

/// Training objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// Mean squared error over centered pixels (default).
    Mse,
    /// `1 - MS-SSIM` on the reconstructed patch.
    MsSsim,
}

/// Statistical shape of the post-SIC residual used during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualShape {
    /// The receiver's own rotated transmission through a random short
    /// filter (default; models structured leakage after digital SIC).
    FilteredOwnSignal,
    /// Same-power circularly-symmetric Gaussian noise (idealized).
    Gaussian,
}

/// Residual-SI power law: anchor table of `(pre_digital_sinr_db, rho)`
/// pairs where `rho` is residual power relative to unit desired power,
/// interpolated piecewise-linearly in the dB domain and clamped at the
/// ends. Anchors are produced by measuring the sic module's suppression on
/// the scenario of interest.
#[derive(Clone, Debug)]
pub struct ResidualModel {
    /// Ascending in `pre_digital_sinr_db`; at least one entry.
    pub anchors: Vec<(f64, f64)>,
    pub shape: ResidualShape,
    /// Residual filter length in symbols (`FilteredOwnSignal` only).
    pub taps: usize,
}

/// Residual anchors measured on the default four-stage scenario (Rician
/// K = 10 dB SI channel, cubic front-end, slow coefficient drift, 2048
/// calibration symbols): digital suppression sits near 44 dB across the
/// sweep range, so the residual tracks `pre + 44 dB` with slope one.
pub const DEFAULT_RESIDUAL_ANCHORS: [(f64, f64); 3] =
    [(-50.0, 3.66), (-40.0, 0.362), (-30.0, 0.0366)];

impl Default for ResidualModel {
    fn default() -> Self {
        Self {
            anchors: DEFAULT_RESIDUAL_ANCHORS.to_vec(),
            shape: ResidualShape::FilteredOwnSignal,
            taps: 4,
        }
    }
}

impl ResidualModel {
    /// Residual-to-desired power ratio at a pre-digital SINR.
    pub fn rho(&self, pre_sinr_db: f64) -> f64 {
        assert!(!self.anchors.is_empty(), "residual model needs anchors");
        let db = |r: f64| 10.0 * math::log10(r);
        let first = self.anchors[0];
        let last = self.anchors[self.anchors.len() - 1];
        if pre_sinr_db <= first.0 {
            return first.1;
        }
        if pre_sinr_db >= last.0 {
            return last.1;
        }
        for w in self.anchors.windows(2) {
            let (x0, r0) = w[0];
            let (x1, r1) = w[1];
            if pre_sinr_db <= x1 {
                let t = (pre_sinr_db - x0) / (x1 - x0);
                let rho_db = db(r0) + t * (db(r1) - db(r0));
                return math::db_to_lin(rho_db);
            }
        }
        last.1
    }
}

/// Channel conditions the model is trained through: the desired link's SNR
/// and the residual-SI law derived from the sic module's measurements.
#[derive(Clone, Debug)]
pub struct TrainChannelModel {
    /// Desired-link SNR in dB (desired power is 1 after normalization).
    pub desired_snr_db: f64,
    pub residual: ResidualModel,
}

impl Default for TrainChannelModel {
    fn default() -> Self {
        Self {
            desired_snr_db: 15.0,
            residual: ResidualModel::default(),
        }
    }
}

/// Optimizer and sampling configuration.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Patch pairs per step (each pair contributes both directions).
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    /// Pre-digital SINR range sampled per step, dB `(low, high)`; a
    /// degenerate range trains at one operating point.
    pub sinr_train_range_db: (f64, f64),
    pub loss: LossKind,
    pub patch_size: usize,
    /// SGD momentum coefficient.
    pub momentum: f64,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 16,
            steps: 8000,
            seed: 7,
            sinr_train_range_db: (-50.0, -30.0),
            loss: LossKind::Mse,
            patch_size: 16,
            momentum: 0.9,
            clip_norm: 5.0,
        }
    }
}

impl TrainConfig {
    /// # Panics
    /// Panics on invariant violations (`learning_rate > 0`, `low <= high`,
    /// nonzero batch).
    pub fn validate(&self) {
        assert!(self.learning_rate > 0.0, "learning_rate must be positive");
        assert!(
            self.sinr_train_range_db.0 <= self.sinr_train_range_db.1,
            "sinr_train_range_db must satisfy low <= high"
        );
        assert!(self.batch_size > 0, "batch_size must be nonzero");
        assert!((0.0..1.0).contains(&self.momentum), "momentum must be in [0, 1)");
        assert!(self.clip_norm > 0.0, "clip_norm must be positive");
    }
}

/// Abort report for a diverged run: the optimizer state at the moment a
/// non-finite loss appeared.
#[derive(Clone, Debug)]
pub struct TrainError {
    pub step: usize,
    pub loss: f64,
    pub param_norm: f64,
    pub grad_norm: f64,
    /// Up to the last 5 finite batch losses before the abort.
    pub recent_losses: Vec<f64>,
}

impl core::fmt::Display for TrainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "non-finite loss {} at step {} (|params| = {:.3e}, |grads| = {:.3e}, recent losses {:?})",
            self.loss, self.step, self.param_norm, self.grad_norm, self.recent_losses
        )
    }
}

/// All randomness for one training pair, drawn up front so the loss is a
/// deterministic function of the parameters (which is what both the
/// backward pass and the finite-difference check differentiate).
struct PairDraw {
    /// Corpus indices: patch sent A->B and patch sent B->A.
    idx_ab: usize,
    idx_ba: usize,
    /// Residual-to-desired power ratio for this step's operating point.
    rho: f64,
    /// Unit-power residual filters at receiver B and receiver A.
    filt_at_b: Vec<Cf64>,
    filt_at_a: Vec<Cf64>,
    /// Pre-scaled noise (and, for the Gaussian shape, pre-scaled
    /// unit-power residual processes).
    noise_at_b: Vec<Cf64>,
    noise_at_a: Vec<Cf64>,
    gauss_resid_b: Vec<Cf64>,
    gauss_resid_a: Vec<Cf64>,
}

/// Per-direction training corpora. When the corpus has at least two
/// patches the directions draw from disjoint halves (even indices feed
/// A->B, odd feed B->A) so the two mappings never memorize shared content.
struct DirectionPools {
    ab: Vec<usize>,
    ba: Vec<usize>,
}

impl DirectionPools {
    fn new(corpus_len: usize) -> Self {
        assert!(corpus_len > 0, "corpus must be non-empty");
        if corpus_len < 2 {
            return Self {
                ab: vec![0],
                ba: vec![0],
            };
        }
        Self {
            ab: (0..corpus_len).step_by(2).collect(),
            ba: (1..corpus_len).step_by(2).collect(),
        }
    }
}

fn draw_pair(
    rng: &mut RngStream,
    pools: &DirectionPools,
    cfg: &TrainConfig,
    channel: &TrainChannelModel,
    k_symbols: usize,
) -> PairDraw {
    let idx_ab = pools.ab[rng.next_index(pools.ab.len())];
    let idx_ba = pools.ba[rng.next_index(pools.ba.len())];
    let (lo, hi) = cfg.sinr_train_range_db;
    let pre = rng.uniform(lo, hi);
    let rho = channel.residual.rho(pre);
    let draw_filter = |rng: &mut RngStream| -> Vec<Cf64> {
        let mut g: Vec<Cf64> = (0..channel.residual.taps.max(1)).map(|_| rng.next_cn()).collect();
        let norm = math::sqrt(g.iter().map(|z| z.norm_sqr()).sum::<f64>());
        for z in g.iter_mut() {
            *z /= norm;
        }
        g
    };
    let filt_at_b = draw_filter(rng);
    let filt_at_a = draw_filter(rng);
    let sigma = math::sqrt(math::db_to_lin(-channel.desired_snr_db));
    let draw_block =
        |rng: &mut RngStream, scale: f64| (0..k_symbols).map(|_| rng.next_cn() * scale).collect();
    let noise_at_b = draw_block(rng, sigma);
    let noise_at_a = draw_block(rng, sigma);
    let (gauss_resid_b, gauss_resid_a) = match channel.residual.shape {
        ResidualShape::FilteredOwnSignal => (Vec::new(), Vec::new()),
        ResidualShape::Gaussian => (draw_block(rng, 1.0), draw_block(rng, 1.0)),
    };
    PairDraw {
        idx_ab,
        idx_ba,
        rho,
        filt_at_b,
        filt_at_a,
        noise_at_b,
        noise_at_a,
        gauss_resid_b,
        gauss_resid_a,
    }
}

/// Causal FIR filter, output truncated to the input length.
fn apply_filter(x: &[Cf64], g: &[Cf64]) -> Vec<Cf64> {
    let mut y = vec![Cf64::new(0.0, 0.0); x.len()];
    for (k, yk) in y.iter_mut().enumerate() {
        for (m, gm) in g.iter().enumerate() {
            if m > k {
                break;
            }
            *yk += gm * x[k - m];
        }
    }
    y
}

/// Adjoint of [`apply_filter`] with respect to its input: correlation of
/// the output gradient with the conjugate taps.
fn apply_filter_adjoint(d_y: &[Cf64], g: &[Cf64]) -> Vec<Cf64> {
    let n = d_y.len();
    let mut d_x = vec![Cf64::new(0.0, 0.0); n];
    for (j, dx) in d_x.iter_mut().enumerate() {
        for (m, gm) in g.iter().enumerate() {
            if j + m >= n {
                break;
            }
            *dx += gm.conj() * d_y[j + m];
        }
    }
    d_x
}

/// Patch loss and its gradient with respect to the raw (centered) decoder
/// output.
fn patch_loss(
    out: &[f64],
    target: &ImagePatch,
    kind: LossKind,
) -> (f64, Vec<f64>) {
    match kind {
        LossKind::Mse => {
            let n = out.len() as f64;
            let mut grad = vec![0.0; out.len()];
            let mut acc = 0.0;
            for ((g, o), t) in grad.iter_mut().zip(out).zip(&target.pixels) {
                let e = o - (t - 0.5);
                acc += e * e;
                *g = 2.0 * e / n;
            }
            (acc / n, grad)
        }
        LossKind::MsSsim => {
            let mut recon = ImagePatch::constant(target.width, target.height, 0.0);
            for (p, o) in recon.pixels.iter_mut().zip(out) {
                *p = o + 0.5;
            }
            let (v, g) = metrics::ms_ssim_grad(&recon, target);
            (1.0 - v, g.iter().map(|x| -x).collect())
        }
    }
}

/// Forward (and optionally backward) pass for one pair. Returns the mean
/// of the two directions' losses; when `grads` is given, accumulates
/// `scale * d(mean direction loss)/d(params)` into it.
fn pair_loss(
    model: &JsccModel,
    corpus: &[ImagePatch],
    draw: &PairDraw,
    kind: LossKind,
    scale: f64,
    grads: Option<&mut [f64]>,
) -> f64 {
    let k = model.spec.k_symbols;
    let patch_ab = &corpus[draw.idx_ab];
    let patch_ba = &corpus[draw.idx_ba];

    // encoders (direction 0 carries patch_ab, direction 1 patch_ba)
    let mut enc_caches = [MlpCache::default(), MlpCache::default()];
    let mut pre_norm: [Vec<Cf64>; 2] = [Vec::new(), Vec::new()];
    let mut sp = [0.0f64; 2];
    let mut rotated: [Vec<Cf64>; 2] = [Vec::new(), Vec::new()];
    for (dir, patch) in [patch_ab, patch_ba].into_iter().enumerate() {
        let x = model.encoder_input(patch, dir);
        let cache = if grads.is_some() {
            Some(&mut enc_caches[dir])
        } else {
            None
        };
        let raw = model.enc_spec(dir).forward(&model.params, &x, cache);
        let c = reals_to_complex(&raw);
        let (mut s, spd) = power_normalize(&c);
        pre_norm[dir] = c;
        sp[dir] = spd;
        rotate_in_place(&mut s, model.signature(dir), 1.0);
        rotated[dir] = s;
    }

    // received mixtures: each receiver sees the other side's rotated
    // block plus a scaled residual of its own transmission plus noise
    let sqrt_rho = math::sqrt(draw.rho);
    let mut received: [Vec<Cf64>; 2] = [Vec::new(), Vec::new()];
    for dir in 0..2 {
        let own = 1 - dir; // the receiver of `dir` transmits direction 1-dir
        let (filt, noise, gauss) = if dir == 0 {
            (&draw.filt_at_b, &draw.noise_at_b, &draw.gauss_resid_b)
        } else {
            (&draw.filt_at_a, &draw.noise_at_a, &draw.gauss_resid_a)
        };
        let mut y = rotated[dir].clone();
        match model_shape(draw) {
            ResidualShape::FilteredOwnSignal => {
                for (yk, rk) in y.iter_mut().zip(apply_filter(&rotated[own], filt)) {
                    *yk += rk * sqrt_rho;
                }
            }
            ResidualShape::Gaussian => {
                for (yk, rk) in y.iter_mut().zip(gauss) {
                    *yk += rk * sqrt_rho;
                }
            }
        }
        for (yk, nk) in y.iter_mut().zip(noise) {
            *yk += nk;
        }
        received[dir] = y;
    }

    // decoders + loss
    let mut dec_caches = [MlpCache::default(), MlpCache::default()];
    let mut d_outs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut loss_sum = 0.0;
    for dir in 0..2 {
        let target = if dir == 0 { patch_ab } else { patch_ba };
        let cache = if grads.is_some() {
            Some(&mut dec_caches[dir])
        } else {
            None
        };
        let out = model.decode_raw(&received[dir], dir, cache);
        let (l, d_out) = patch_loss(&out, target, kind);
        loss_sum += l;
        d_outs[dir] = d_out;
    }
    let loss = loss_sum / 2.0;

    let Some(grads) = grads else {
        return loss;
    };

    // backward: per direction through the decoder to d(received), then
    // channel adjoints fan the gradient onto both rotated blocks
    let mut d_rotated = [vec![Cf64::new(0.0, 0.0); k], vec![Cf64::new(0.0, 0.0); k]];
    for dir in 0..2 {
        let w = scale / 2.0; // mean over the two directions
        let d_out: Vec<f64> = d_outs[dir].iter().map(|g| g * w).collect();
        let d_in = model.dec_spec(dir).backward(&model.params, &dec_caches[dir], &d_out, grads);
        // decoder input = [re, im pairs of derotated symbols ++ embedding]
        accumulate_embedding_grad(model, dir, &d_in[2 * k..], grads);
        let mut d_derot = reals_to_complex(&d_in[..2 * k]);
        rotate_in_place(&mut d_derot, model.signature(dir), 1.0); // adjoint of derotation
        let own = 1 - dir;
        for (acc, d) in d_rotated[dir].iter_mut().zip(&d_derot) {
            *acc += d;
        }
        if model_shape(draw) == ResidualShape::FilteredOwnSignal && draw.rho > 0.0 {
            let filt = if dir == 0 { &draw.filt_at_b } else { &draw.filt_at_a };
            let d_own = apply_filter_adjoint(&d_derot, filt);
            for (acc, d) in d_rotated[own].iter_mut().zip(&d_own) {
                *acc += d * sqrt_rho;
            }
        }
    }

    // rotation, normalization, encoder
    for dir in 0..2 {
        let mut d_s = d_rotated[dir].clone();
        rotate_in_place(&mut d_s, model.signature(dir), -1.0); // adjoint of rotation
        let d_c = power_normalize_backward(&pre_norm[dir], sp[dir], &d_s);
        let mut d_raw = Vec::with_capacity(2 * k);
        for z in &d_c {
            d_raw.push(z.re);
            d_raw.push(z.im);
        }
        let d_x = model.enc_spec(dir).backward(&model.params, &enc_caches[dir], &d_raw, grads);
        let n_pix = model.spec.n_pixels();
        accumulate_embedding_grad(model, dir, &d_x[n_pix..], grads);
    }
    loss
}

fn model_shape(draw: &PairDraw) -> ResidualShape {
    if draw.gauss_resid_a.is_empty() {
        ResidualShape::FilteredOwnSignal
    } else {
        ResidualShape::Gaussian
    }
}

fn accumulate_embedding_grad(model: &JsccModel, direction: usize, d_emb: &[f64], grads: &mut [f64]) {
    if d_emb.is_empty() {
        return;
    }
    let off = model.emb_offset(direction);
    for (g, d) in grads[off..off + d_emb.len()].iter_mut().zip(d_emb) {
        *g += d;
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

/// Train a model in place through the simulated two-way channel; returns
/// the per-step batch loss trace. Deterministic given the seed; zero steps
/// return the initialization unchanged with an empty trace.
///
/// # Errors
/// A non-finite batch loss aborts with the optimizer state at that step.
///
/// # Panics
/// Panics on an empty corpus, invalid config, or a patch-size mismatch
/// between config, corpus, and model.
pub fn train_jscc(
    model: &mut JsccModel,
    corpus: &[ImagePatch],
    channel: &TrainChannelModel,
    tc: &TrainConfig,
) -> Result<Vec<f64>, TrainError> {
    tc.validate();
    assert!(!corpus.is_empty(), "corpus must be non-empty");
    assert_eq!(tc.patch_size, model.spec.patch_size, "config/model patch size mismatch");
    for p in corpus {
        assert_eq!(
            (p.width, p.height),
            (tc.patch_size, tc.patch_size),
            "corpus patch size mismatch"
        );
    }
    let pools = DirectionPools::new(corpus.len());
    let mut rng = RngStream::new(tc.seed, derive_stream_id(&[0x15CC, 1]));
    let mut opt = SgdMomentum::new(tc.learning_rate, tc.momentum, model.params.len());
    let mut grads = vec![0.0; model.params.len()];
    let mut trace = Vec::with_capacity(tc.steps);
    for step in 0..tc.steps {
        grads.iter_mut().for_each(|g| *g = 0.0);
        let mut batch_loss = 0.0;
        let scale = 1.0 / tc.batch_size as f64;
        for _ in 0..tc.batch_size {
            let draw = draw_pair(&mut rng, &pools, tc, channel, model.spec.k_symbols);
            batch_loss += pair_loss(model, corpus, &draw, tc.loss, scale, Some(&mut grads));
        }
        batch_loss *= scale;
        if !batch_loss.is_finite() {
            let recent: Vec<f64> = trace.iter().rev().take(5).rev().copied().collect();
            return Err(TrainError {
                step,
                loss: batch_loss,
                param_norm: l2_norm(&model.params),
                grad_norm: l2_norm(&grads),
                recent_losses: recent,
            });
        }
        clip_global_norm(&mut grads, tc.clip_norm);
        opt.step(&mut model.params, &grads);
        trace.push(batch_loss);
    }
    Ok(trace)
}

/// Compare the analytic gradient against central finite differences
/// (`h = 1e-4`) on a deterministic batch; probes several entries of every
/// parameter group (each layer's weights and biases, plus embeddings) and
/// returns the maximum relative error.
///
/// # Panics
/// Panics on an empty batch or patch-size mismatch.
pub fn gradient_check(
    model: &mut JsccModel,
    batch: &[ImagePatch],
    channel: &TrainChannelModel,
    loss: LossKind,
    seed: u64,
) -> f64 {
    assert!(!batch.is_empty(), "batch must be non-empty");
    let tc = TrainConfig {
        patch_size: model.spec.patch_size,
        loss,
        ..TrainConfig::default()
    };
    let pools = DirectionPools::new(batch.len());
    let mut rng = RngStream::new(seed, derive_stream_id(&[0x15CC, 2]));
    let n_pairs = batch.len().max(2);
    let draws: Vec<PairDraw> = (0..n_pairs)
        .map(|_| draw_pair(&mut rng, &pools, &tc, channel, model.spec.k_symbols))
        .collect();
    let scale = 1.0 / n_pairs as f64;

    let mut analytic = vec![0.0; model.params.len()];
    for d in &draws {
        let _ = pair_loss(model, batch, d, loss, scale, Some(&mut analytic));
    }

    // probe indices: first/middle/last weight plus a bias of every layer,
    // and every embedding entry
    let mut probes: Vec<usize> = Vec::new();
    for dir in [0usize, model.spec.n_directions - 1] {
        for mlp in [model.enc_spec(dir).clone(), model.dec_spec(dir).clone()] {
            for l in &mlp.layers {
                let nw = l.n_in * l.n_out;
                probes.push(l.w_off);
                probes.push(l.w_off + nw / 2);
                probes.push(l.w_off + nw - 1);
                probes.push(l.b_off + l.n_out / 2);
            }
        }
    }
    if !model.embedding(0).is_empty() {
        let base = model.emb_offset(0);
        probes.extend(base..base + model.spec.n_directions * model.spec.d_c);
    }
    probes.sort_unstable();
    probes.dedup();

    let h = 1e-4;
    let mut max_rel: f64 = 0.0;
    for &i in &probes {
        let orig = model.params[i];
        model.params[i] = orig + h;
        let up: f64 = draws.iter().map(|d| pair_loss(model, batch, d, loss, scale, None)).sum::<f64>() * scale;
        model.params[i] = orig - h;
        let dn: f64 = draws.iter().map(|d| pair_loss(model, batch, d, loss, scale, None)).sum::<f64>() * scale;
        model.params[i] = orig;
        let fd = (up - dn) / (2.0 * h);
        let an = analytic[i];
        let rel = math::abs(fd - an) / math::abs(fd).max(math::abs(an)).max(1e-8);
        max_rel = max_rel.max(rel);
    }
    max_rel
}

/// Smoothed view of a loss trace: means over consecutive windows.
pub fn smooth_trace(trace: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0);
    trace.chunks(window).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}
