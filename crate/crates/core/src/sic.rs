//! Digital-domain self-interference cancellation: linear least-squares and
//! normalized-LMS cancellers, a learned nonlinear canceller (memory
//! polynomial or small network), and suppression measurement.
//!
//! All cancellers share one shape: predict the self-interference waveform
//! from the known own-transmit reference, subtract the prediction from the
//! received signal. The linear fit solves the batch least-squares problem
//! exactly (regularized only when the normal equations are genuinely
//! rank-deficient, and flagged when that happens); LMS is the streaming
//! equivalent and converges to the same solution on stationary data. The
//! nonlinear canceller handles the cubic-with-memory residue that linear
//! taps cannot express.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::RngStream;
use crate::semantic::nn::{self, Activation, MlpCache, MlpSpec, SgdMomentum};
use crate::signal;
use crate::Cf64;

/// Ridge added to the normal equations when they are rank-deficient.
pub const RIDGE_EPS: f64 = 1e-9;

/// Residual-power floor for suppression reporting, relative to the
/// pre-cancellation power: caps reportable suppression at 120 dB.
pub const SUPPRESSION_FLOOR_REL: f64 = 1e-12;

/// Errors from canceller fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SicError {
    /// LMS tap norm exceeded 1e6.
    Diverged,
    /// Fewer samples than 10x the parameter count.
    InsufficientSamples,
}

impl core::fmt::Display for SicError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SicError::Diverged => write!(f, "LMS adaptation diverged (tap norm > 1e6)"),
            SicError::InsufficientSamples => {
                write!(f, "need at least 10 samples per fitted parameter")
            }
        }
    }
}

/// Anything that can predict the SI waveform from the transmit reference.
pub trait SiPredictor {
    fn predict(&self, tx: &[Cf64]) -> Vec<Cf64>;
}

/// FIR canceller: `predict[k] = sum_l taps[l] * tx[k-l]`.
#[derive(Clone, Debug)]
pub struct LinearCanceller {
    pub taps: Vec<Cf64>,
    /// True when the LS normal equations were rank-deficient and the
    /// ridge-regularized pseudo-inverse was used instead.
    pub regularized: bool,
}

impl LinearCanceller {
    pub fn zero(depth: usize) -> Self {
        Self {
            taps: vec![Cf64::new(0.0, 0.0); depth],
            regularized: false,
        }
    }

    pub fn depth(&self) -> usize {
        self.taps.len()
    }
}

impl SiPredictor for LinearCanceller {
    fn predict(&self, tx: &[Cf64]) -> Vec<Cf64> {
        let mut out = vec![Cf64::new(0.0, 0.0); tx.len()];
        for (l, &t) in self.taps.iter().enumerate() {
            for k in l..tx.len() {
                out[k] += t * tx[k - l];
            }
        }
        out
    }
}

/// Memory-polynomial descriptor: odd orders `1, 3, ..., max_order`, each
/// with `memory` delay taps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryPolynomialBasis {
    pub max_order: usize,
    pub memory: usize,
}

impl MemoryPolynomialBasis {
    pub fn n_terms(&self) -> usize {
        assert!(self.max_order % 2 == 1, "polynomial order must be odd");
        assert!(self.memory >= 1, "memory depth must be at least 1");
        self.max_order.div_ceil(2) * self.memory
    }

    /// Feature `x[k-m] * |x[k-m]|^(p-1)` for term index `(p, m)` in
    /// order-major layout.
    fn feature(&self, tx: &[Cf64], k: usize, term: usize) -> Cf64 {
        let m = term % self.memory;
        let p = 1 + 2 * (term / self.memory);
        if k < m {
            return Cf64::new(0.0, 0.0);
        }
        let x = tx[k - m];
        let a2 = x.norm_sqr();
        let mut amp = 1.0;
        for _ in 0..(p - 1) / 2 {
            amp *= a2;
        }
        x * amp
    }
}

/// Descriptor for the learned nonlinear canceller.
#[derive(Clone, Debug)]
pub enum NonlinearBasis {
    /// Least-squares over memory-polynomial features (single-shot optimal).
    MemoryPolynomial(MemoryPolynomialBasis),
    /// Small feed-forward network on windowed `(re, im, |x|^2)` features,
    /// trained by SGD (shares the semantic chain's trainer machinery).
    Network {
        memory: usize,
        hidden: Vec<usize>,
        steps: usize,
        learning_rate: f64,
        batch: usize,
        seed: u64,
    },
}

/// A fitted nonlinear canceller.
#[derive(Clone, Debug)]
pub enum NonlinearCanceller {
    MemoryPolynomial {
        basis: MemoryPolynomialBasis,
        coeffs: Vec<Cf64>,
        regularized: bool,
    },
    Network {
        memory: usize,
        spec: MlpSpec,
        params: Vec<f64>,
    },
}

impl SiPredictor for NonlinearCanceller {
    fn predict(&self, tx: &[Cf64]) -> Vec<Cf64> {
        match self {
            NonlinearCanceller::MemoryPolynomial { basis, coeffs, .. } => (0..tx.len())
                .map(|k| {
                    let mut acc = Cf64::new(0.0, 0.0);
                    for (t, &c) in coeffs.iter().enumerate() {
                        acc += c * basis.feature(tx, k, t);
                    }
                    acc
                })
                .collect(),
            NonlinearCanceller::Network { memory, spec, params } => {
                let mut x = vec![0.0; 3 * memory];
                (0..tx.len())
                    .map(|k| {
                        network_features(tx, k, *memory, &mut x);
                        let y = spec.forward(params, &x, None);
                        Cf64::new(y[0], y[1])
                    })
                    .collect()
            }
        }
    }
}

fn network_features(tx: &[Cf64], k: usize, memory: usize, out: &mut [f64]) {
    for m in 0..memory {
        let x = if k >= m { tx[k - m] } else { Cf64::new(0.0, 0.0) };
        out[3 * m] = x.re;
        out[3 * m + 1] = x.im;
        out[3 * m + 2] = x.norm_sqr();
    }
}

/// Solve the Hermitian positive-(semi)definite system `A w = b` by
/// Cholesky. Returns the solution and whether the ridge had to engage
/// (a pivot fell below `tol`, indicating rank deficiency).
fn solve_hermitian(a: &mut [Vec<Cf64>], b: &[Cf64], tol: f64) -> (Vec<Cf64>, bool) {
    let n = b.len();
    let mut regularized = false;
    // try plain Cholesky; on a failed pivot, add the ridge and restart
    'attempt: loop {
        let mut l = vec![vec![Cf64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i][j];
                for (x, y) in l[i][..j].iter().zip(&l[j][..j]) {
                    s -= x * y.conj();
                }
                if i == j {
                    if s.re <= tol {
                        if regularized {
                            // ridge already applied; clamp and continue
                            l[i][i] = Cf64::new(math::sqrt(tol.max(1e-300)), 0.0);
                            continue;
                        }
                        regularized = true;
                        for (d, row) in a.iter_mut().enumerate() {
                            row[d] += Cf64::new(RIDGE_EPS, 0.0);
                        }
                        continue 'attempt;
                    }
                    l[i][i] = Cf64::new(math::sqrt(s.re), 0.0);
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        // forward substitution L y = b, then back substitution L^H w = y
        let mut y = vec![Cf64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut w = vec![Cf64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k][i].conj() * w[k];
            }
            w[i] = s / l[i][i];
        }
        return (w, regularized);
    }
}

/// Generic regularized LS over per-sample complex features.
fn ls_fit_features(
    n_samples: usize,
    n_terms: usize,
    rx: &[Cf64],
    feature: impl Fn(usize, usize) -> Cf64,
) -> (Vec<Cf64>, bool) {
    let mut gram = vec![vec![Cf64::new(0.0, 0.0); n_terms]; n_terms];
    let mut rhs = vec![Cf64::new(0.0, 0.0); n_terms];
    for (k, &rxk) in rx.iter().enumerate().take(n_samples) {
        for i in 0..n_terms {
            let fi = feature(k, i);
            rhs[i] += fi.conj() * rxk;
            for (j, g) in gram[i].iter_mut().enumerate().take(i + 1) {
                *g += fi.conj() * feature(k, j);
            }
        }
    }
    // mirror the lower triangle onto the upper
    for i in 0..n_terms {
        let (head, tail) = gram.split_at_mut(i + 1);
        for (dj, src) in tail.iter().enumerate() {
            head[i][i + 1 + dj] = src[i].conj();
        }
    }
    // pivot tolerance scales with the problem's energy
    let scale: f64 = (0..n_terms).map(|i| gram[i][i].re).fold(0.0, f64::max);
    let tol = scale * 1e-13;
    solve_hermitian(&mut gram, &rhs, tol)
}

/// Batch least-squares fit of an FIR canceller of depth `depth`:
/// `min_w ||rx - X w||^2` with `X` the convolution matrix of `tx`.
///
/// Rank-deficient normal equations are solved with a ridge of
/// [`RIDGE_EPS`] and flagged via [`LinearCanceller::regularized`].
///
/// # Panics
/// Panics if `rx` is shorter than `tx`, `depth` is zero, or there are
/// fewer than `4 * depth` samples.
pub fn ls_fit_linear(tx: &[Cf64], rx: &[Cf64], depth: usize) -> LinearCanceller {
    assert!(depth >= 1, "depth must be at least 1");
    assert!(rx.len() >= tx.len(), "rx must cover tx");
    assert!(tx.len() >= 4 * depth, "need at least 4 samples per tap");
    let (taps, regularized) = ls_fit_features(tx.len(), depth, rx, |k, l| {
        if k >= l {
            tx[k - l]
        } else {
            Cf64::new(0.0, 0.0)
        }
    });
    LinearCanceller { taps, regularized }
}

/// Normalized LMS adaptation of an FIR canceller.
///
/// Runs `passes` full sweeps over the data with per-sample updates
/// `w += step * conj(x_vec) * err / (||x_vec||^2 + 1e-12)`.
///
/// # Panics
/// Panics if `step` is outside `(0, 2)`, `depth` is zero, or `rx` is
/// shorter than `tx`.
pub fn lms_adapt(
    tx: &[Cf64],
    rx: &[Cf64],
    depth: usize,
    step: f64,
    passes: usize,
) -> Result<LinearCanceller, SicError> {
    assert!(step > 0.0 && step < 2.0, "NLMS step must be in (0, 2)");
    assert!(depth >= 1, "depth must be at least 1");
    assert!(rx.len() >= tx.len(), "rx must cover tx");
    let mut taps = vec![Cf64::new(0.0, 0.0); depth];
    for _ in 0..passes {
        for k in 0..tx.len() {
            let mut pred = Cf64::new(0.0, 0.0);
            let mut energy = 1e-12;
            for (l, &t) in taps.iter().enumerate() {
                if k >= l {
                    pred += t * tx[k - l];
                    energy += tx[k - l].norm_sqr();
                }
            }
            let err = rx[k] - pred;
            for (l, t) in taps.iter_mut().enumerate() {
                if k >= l {
                    *t += step * tx[k - l].conj() * err / energy;
                }
            }
        }
        let norm2: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        if norm2 > 1e12 {
            return Err(SicError::Diverged);
        }
    }
    Ok(LinearCanceller {
        taps,
        regularized: false,
    })
}

/// Fit a nonlinear canceller; returns it with its training-loss trace.
///
/// The memory-polynomial variant is a single-shot least-squares solve (the
/// trace holds one entry, the final mean squared residual). The network
/// variant runs seeded mini-batch SGD with momentum and records the batch
/// loss per step.
///
/// # Errors
/// [`SicError::InsufficientSamples`] when there are fewer than 10 samples
/// per fitted parameter.
pub fn fit_nonlinear(
    tx: &[Cf64],
    rx: &[Cf64],
    basis: &NonlinearBasis,
) -> Result<(NonlinearCanceller, Vec<f64>), SicError> {
    assert!(rx.len() >= tx.len(), "rx must cover tx");
    match basis {
        NonlinearBasis::MemoryPolynomial(mp) => {
            let n_terms = mp.n_terms();
            if tx.len() < 10 * n_terms {
                return Err(SicError::InsufficientSamples);
            }
            let (coeffs, regularized) =
                ls_fit_features(tx.len(), n_terms, rx, |k, t| mp.feature(tx, k, t));
            let c = NonlinearCanceller::MemoryPolynomial {
                basis: *mp,
                coeffs,
                regularized,
            };
            let residual = cancel(&rx[..tx.len()], tx, &c);
            let trace = vec![signal::power(&residual)];
            Ok((c, trace))
        }
        NonlinearBasis::Network {
            memory,
            hidden,
            steps,
            learning_rate,
            batch,
            seed,
        } => {
            assert!(*memory >= 1 && *batch >= 1);
            let mut widths = vec![3 * memory];
            widths.extend_from_slice(hidden);
            widths.push(2);
            let (spec, n_params) = MlpSpec::layout(&widths, Activation::Tanh, Activation::Linear, 0);
            if tx.len() < 10 * n_params {
                return Err(SicError::InsufficientSamples);
            }
            let mut params = vec![0.0; n_params];
            let mut rng = RngStream::new(*seed, crate::rng::derive_stream_id(&[0x51C, 0]));
            spec.init(&mut params, &mut rng);
            let mut opt = SgdMomentum::new(*learning_rate, 0.9, n_params);
            let mut grads = vec![0.0; n_params];
            let mut cache = MlpCache::default();
            let mut x = vec![0.0; 3 * memory];
            let mut trace = Vec::with_capacity(*steps);
            // the trace reports empirical risk on a fixed slice, not the
            // per-batch draw: cubic SI gives individual samples heavy-tailed
            // losses, so batch means alone would never look monotone
            let eval_n = tx.len().min(1024);
            let eval_loss = |params: &[f64], x: &mut Vec<f64>| {
                let mut acc = 0.0;
                for (k, r) in rx.iter().enumerate().take(eval_n) {
                    network_features(tx, k, *memory, x);
                    let y = spec.forward(params, x, None);
                    let (er, ei) = (y[0] - r.re, y[1] - r.im);
                    acc += er * er + ei * ei;
                }
                acc / eval_n as f64
            };
            for _ in 0..*steps {
                grads.iter_mut().for_each(|g| *g = 0.0);
                for _ in 0..*batch {
                    let k = rng.next_index(tx.len());
                    network_features(tx, k, *memory, &mut x);
                    let y = spec.forward(&params, &x, Some(&mut cache));
                    let (er, ei) = (y[0] - rx[k].re, y[1] - rx[k].im);
                    let scale = 2.0 / *batch as f64;
                    spec.backward(&params, &cache, &[scale * er, scale * ei], &mut grads);
                }
                // tight clip keeps momentum from amplifying the outliers
                nn::clip_global_norm(&mut grads, 1.0);
                opt.step(&mut params, &grads);
                trace.push(eval_loss(&params, &mut x));
            }
            Ok((
                NonlinearCanceller::Network {
                    memory: *memory,
                    spec,
                    params,
                },
                trace,
            ))
        }
    }
}

/// Subtract the canceller's SI prediction from the received signal.
pub fn cancel(rx: &[Cf64], tx: &[Cf64], canceller: &impl SiPredictor) -> Vec<Cf64> {
    let pred = canceller.predict(tx);
    rx.iter()
        .zip(pred.iter().chain(core::iter::repeat(&Cf64::new(0.0, 0.0))))
        .map(|(r, p)| r - p)
        .collect()
}

/// Measured digital-stage suppression.
#[derive(Clone, Copy, Debug)]
pub struct SuppressionReport {
    pub db: f64,
    /// True when the residual was at or below the desired+noise floor and
    /// the report is a clamped lower bound.
    pub floored: bool,
}

/// `10 log10((P_rx - P_desired) / max(P_residual - P_desired, floor))`:
/// how much of the interference power above the desired signal the
/// cancellation stage removed.
///
/// # Panics
/// Panics if any signal is empty or `desired_power` is negative, or if the
/// received power does not exceed the desired power (no interference to
/// suppress).
pub fn suppression_db(rx: &[Cf64], residual: &[Cf64], desired_power: f64) -> SuppressionReport {
    assert!(!rx.is_empty() && !residual.is_empty());
    assert!(desired_power >= 0.0, "desired power must be non-negative");
    let p_rx = signal::power(rx);
    let si_before = p_rx - desired_power;
    assert!(si_before > 0.0, "received power must exceed the desired power");
    let floor = p_rx * SUPPRESSION_FLOOR_REL;
    let si_after = signal::power(residual) - desired_power;
    let floored = si_after <= floor;
    let clamped = if floored { floor } else { si_after };
    SuppressionReport {
        db: 10.0 * math::log10(si_before / clamped),
        floored,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{db_to_lin, lin_to_db};
    use proptest::prelude::*;

    fn cn_signal(n: usize, rng: &mut RngStream) -> Vec<Cf64> {
        (0..n).map(|_| rng.next_cn()).collect()
    }

    fn three_tap() -> Vec<Cf64> {
        alloc::vec![
            Cf64::new(0.9, -0.2),
            Cf64::new(-0.3, 0.4),
            Cf64::new(0.05, 0.1),
        ]
    }

    fn apply_fir(taps: &[Cf64], tx: &[Cf64]) -> Vec<Cf64> {
        LinearCanceller {
            taps: taps.to_vec(),
            regularized: false,
        }
        .predict(tx)
    }

    #[test]
    fn ls_recovers_known_channel_exactly() {
        // [TRIVIAL: exact LS solution on noiseless data]
        let mut rng = RngStream::new(1, 10);
        let tx = cn_signal(512, &mut rng);
        let h = three_tap();
        let rx = apply_fir(&h, &tx);
        let c = ls_fit_linear(&tx, &rx, 3);
        assert!(!c.regularized);
        for (est, truth) in c.taps.iter().zip(&h) {
            assert!((est - truth).norm() < 1e-8);
        }
        let residual = cancel(&rx, &tx, &c);
        assert!(signal::power(&residual) < 1e-12);
    }

    #[test]
    fn ls_on_uncorrelated_noise_finds_nothing() {
        // [DERIVED] LS against independent noise: coefficient norm ~
        // sqrt(L/N), far below 0.05 at N = 10^4.
        let mut rng = RngStream::new(2, 11);
        let tx = cn_signal(10_000, &mut rng);
        let rx = cn_signal(10_000, &mut rng);
        let c = ls_fit_linear(&tx, &rx, 3);
        let norm: f64 = math::sqrt(c.taps.iter().map(|t| t.norm_sqr()).sum());
        assert!(norm < 0.05, "tap norm {norm}");
    }

    #[test]
    fn ls_extra_taps_stay_zero() {
        // [TRIVIAL] noiseless over-modeled fit: surplus taps vanish.
        let mut rng = RngStream::new(3, 12);
        let tx = cn_signal(512, &mut rng);
        let h = three_tap();
        let rx = apply_fir(&h, &tx);
        let c = ls_fit_linear(&tx, &rx, 6);
        for t in &c.taps[3..] {
            assert!(t.norm() < 1e-6);
        }
    }

    #[test]
    fn lms_converges_to_ls_solution() {
        // [DERIVED: compare to ls_fit output] same noiseless setup,
        // 10 passes at step 0.5.
        let mut rng = RngStream::new(4, 13);
        let tx = cn_signal(512, &mut rng);
        let rx = apply_fir(&three_tap(), &tx);
        let ls = ls_fit_linear(&tx, &rx, 3);
        let lms = lms_adapt(&tx, &rx, 3, 0.5, 10).unwrap();
        for (a, b) in lms.taps.iter().zip(&ls.taps) {
            assert!((a - b).norm() < 1e-3, "lms {a} vs ls {b}");
        }
    }

    #[test]
    #[should_panic(expected = "NLMS step")]
    fn lms_rejects_zero_step() {
        let tx = alloc::vec![Cf64::new(1.0, 0.0); 16];
        let _ = lms_adapt(&tx, &tx.clone(), 2, 0.0, 1);
    }

    #[test]
    fn lms_zero_rx_keeps_zero_taps() {
        // [TRIVIAL] zero target, zero-initialized taps: nothing to adapt.
        let mut rng = RngStream::new(5, 14);
        let tx = cn_signal(256, &mut rng);
        let rx = alloc::vec![Cf64::new(0.0, 0.0); 256];
        let c = lms_adapt(&tx, &rx, 3, 0.5, 5).unwrap();
        for t in &c.taps {
            assert!(t.norm() < 1e-12);
        }
    }

    #[test]
    fn ls_is_at_least_as_good_as_lms_on_batch() {
        // batch-LS optimality invariant under noise
        let mut rng = RngStream::new(6, 15);
        let tx = cn_signal(2048, &mut rng);
        let mut rx = apply_fir(&three_tap(), &tx);
        crate::signal::add_awgn(&mut rx, 0.01, &mut rng);
        let ls = ls_fit_linear(&tx, &rx, 3);
        let lms = lms_adapt(&tx, &rx, 3, 0.5, 5).unwrap();
        let p_ls = signal::power(&cancel(&rx, &tx, &ls));
        let p_lms = signal::power(&cancel(&rx, &tx, &lms));
        assert!(p_ls <= p_lms + 1e-6, "LS {p_ls} vs LMS {p_lms}");
    }

    #[test]
    fn residual_reaches_noise_floor_with_true_taps() {
        // [DERIVED: noise-floor oracle] true-tap canceller under AWGN
        // leaves exactly the noise, +-0.1 dB.
        let mut rng = RngStream::new(7, 16);
        let tx = cn_signal(50_000, &mut rng);
        let h = three_tap();
        let noise_power = db_to_lin(-20.0);
        let mut rx = apply_fir(&h, &tx);
        crate::signal::add_awgn(&mut rx, noise_power, &mut rng);
        let c = LinearCanceller {
            taps: h,
            regularized: false,
        };
        let residual = cancel(&rx, &tx, &c);
        let res_db = lin_to_db(signal::power(&residual));
        assert!((res_db - lin_to_db(noise_power)).abs() < 0.1, "residual {res_db} dB");
    }

    #[test]
    fn zero_canceller_is_identity() {
        // [TRIVIAL: identity]
        let mut rng = RngStream::new(8, 17);
        let rx = cn_signal(64, &mut rng);
        let tx = cn_signal(64, &mut rng);
        let res = cancel(&rx, &tx, &LinearCanceller::zero(4));
        assert_eq!(res, rx);
    }

    fn memory_poly_fixture() -> (MemoryPolynomialBasis, Vec<Cf64>) {
        // P = 3, M = 2: order-major coefficients (p=1 m=0, p=1 m=1,
        // p=3 m=0, p=3 m=1)
        (
            MemoryPolynomialBasis {
                max_order: 3,
                memory: 2,
            },
            alloc::vec![
                Cf64::new(0.8, -0.1),
                Cf64::new(-0.25, 0.3),
                Cf64::new(0.12, 0.05),
                Cf64::new(-0.04, 0.08),
            ],
        )
    }

    fn memory_poly_rx(basis: &MemoryPolynomialBasis, coeffs: &[Cf64], tx: &[Cf64]) -> Vec<Cf64> {
        (0..tx.len())
            .map(|k| {
                let mut acc = Cf64::new(0.0, 0.0);
                for (t, &c) in coeffs.iter().enumerate() {
                    acc += c * basis.feature(tx, k, t);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn memory_polynomial_fit_is_exact_in_basis() {
        // [TRIVIAL: same-basis LS is exact] NMSE < -60 dB required.
        let mut rng = RngStream::new(9, 18);
        let tx = cn_signal(1024, &mut rng);
        let (basis, coeffs) = memory_poly_fixture();
        let rx = memory_poly_rx(&basis, &coeffs, &tx);
        let (c, trace) = fit_nonlinear(&tx, &rx, &NonlinearBasis::MemoryPolynomial(basis)).unwrap();
        let residual = cancel(&rx, &tx, &c);
        let nmse_db = lin_to_db(signal::power(&residual) / signal::power(&rx));
        assert!(nmse_db < -60.0, "NMSE {nmse_db} dB");
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn linear_rx_puts_nothing_on_cubic_terms() {
        // [DERIVED: LS orthogonality] purely linear SI, nonlinear basis:
        // order-1 coefficients recover the taps, order-3 vanish. Needs a
        // non-constant-modulus tx so the features are independent.
        let mut rng = RngStream::new(10, 19);
        let tx = cn_signal(4096, &mut rng);
        let h = [Cf64::new(0.7, 0.2), Cf64::new(-0.1, -0.3)];
        let rx = apply_fir(&h, &tx);
        let basis = MemoryPolynomialBasis {
            max_order: 3,
            memory: 2,
        };
        let (c, _) = fit_nonlinear(&tx, &rx, &NonlinearBasis::MemoryPolynomial(basis)).unwrap();
        let NonlinearCanceller::MemoryPolynomial { coeffs, .. } = c else {
            unreachable!()
        };
        assert!((coeffs[0] - h[0]).norm() < 1e-6);
        assert!((coeffs[1] - h[1]).norm() < 1e-6);
        assert!(coeffs[2].norm() < 1e-6);
        assert!(coeffs[3].norm() < 1e-6);
    }

    #[test]
    fn noise_only_fit_predicts_almost_nothing() {
        // [DERIVED] fitted on pure noise: predicted power is a vanishing
        // fraction of the noise power (4 params over 4096 samples).
        let mut rng = RngStream::new(11, 20);
        let tx = cn_signal(4096, &mut rng);
        let rx = cn_signal(4096, &mut rng);
        let basis = MemoryPolynomialBasis {
            max_order: 3,
            memory: 2,
        };
        let (c, _) = fit_nonlinear(&tx, &rx, &NonlinearBasis::MemoryPolynomial(basis)).unwrap();
        let pred = c.predict(&tx);
        assert!(signal::power(&pred) < 0.05 * signal::power(&rx));
    }

    #[test]
    fn insufficient_samples_is_an_error() {
        let mut rng = RngStream::new(12, 21);
        let tx = cn_signal(30, &mut rng);
        let rx = tx.clone();
        let basis = MemoryPolynomialBasis {
            max_order: 3,
            memory: 2,
        }; // 4 params, needs 40 samples
        assert_eq!(
            fit_nonlinear(&tx, &rx, &NonlinearBasis::MemoryPolynomial(basis)).unwrap_err(),
            SicError::InsufficientSamples
        );
    }

    #[test]
    fn network_variant_learns_and_loss_decreases() {
        // loss trace smoothed over 10-step windows must be non-increasing
        // (trend, not strict): compare first and last window means.
        let mut rng = RngStream::new(13, 22);
        let tx = cn_signal(4096, &mut rng);
        let (basis, coeffs) = memory_poly_fixture();
        let rx = memory_poly_rx(&basis, &coeffs, &tx);
        let net = NonlinearBasis::Network {
            memory: 2,
            hidden: alloc::vec![16],
            steps: 800,
            learning_rate: 0.005,
            batch: 128,
            seed: 0,
        };
        let (c, trace) = fit_nonlinear(&tx, &rx, &net).unwrap();
        assert_eq!(trace.len(), 800);
        let w = 10;
        let smooth: alloc::vec::Vec<f64> = trace
            .chunks(w)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        // after smoothing the trace is non-increasing (tiny slack for
        // mini-batch jitter) and ends well below where it started
        assert!(smooth[smooth.len() - 1] < 0.3 * smooth[0]);
        let slack = 0.02 * smooth[0];
        for pair in smooth.windows(2) {
            assert!(pair[1] <= pair[0] + slack, "loss spike: {pair:?}");
        }
        // and the fit actually cancels most of the SI
        let residual = cancel(&rx, &tx, &c);
        assert!(signal::power(&residual) < 0.1 * signal::power(&rx));
    }

    #[test]
    fn suppression_reporting() {
        // [TRIVIAL] identity residual → 0 dB; 100x SI reduction → 20 dB;
        // at-floor residual is flagged.
        let mut rng = RngStream::new(14, 23);
        let si: Vec<Cf64> = cn_signal(4096, &mut rng);
        let r = suppression_db(&si, &si, 0.0);
        assert!(r.db.abs() < 1e-12 && !r.floored);
        let tenth: Vec<Cf64> = si.iter().map(|s| s * 0.1).collect();
        let r = suppression_db(&si, &tenth, 0.0);
        assert!((r.db - 20.0).abs() < 1e-9 && !r.floored);
        let zero = alloc::vec![Cf64::new(0.0, 0.0); si.len()];
        let r = suppression_db(&si, &zero, 0.0);
        assert!(r.floored);
        assert!(r.db >= 119.0);
    }

    #[test]
    fn suppression_subtracts_desired_power() {
        // desired power is excluded from both numerator and denominator
        let mut rng = RngStream::new(15, 24);
        let desired = cn_signal(8192, &mut rng);
        let si: Vec<Cf64> = cn_signal(8192, &mut rng).iter().map(|s| s * 3.0).collect();
        let rx: Vec<Cf64> = desired.iter().zip(&si).map(|(d, s)| d + s).collect();
        let after: Vec<Cf64> = desired.iter().zip(&si).map(|(d, s)| d + s * 0.1).collect();
        let p_d = signal::power(&desired);
        // cross terms make measured powers inexact; allow 1 dB
        let r = suppression_db(&rx, &after, p_d);
        assert!((r.db - 20.0).abs() < 1.0, "suppression {} dB", r.db);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cancel_is_linear_in_rx(seed in 0u64..500) {
            // the rx-dependent part superposes: cancel(rx1 + rx2) + pred
            // equals cancel(rx1) + cancel(rx2) for any fixed canceller
            let mut rng = RngStream::new(seed, 30);
            let tx = cn_signal(64, &mut rng);
            let rx1 = cn_signal(64, &mut rng);
            let rx2 = cn_signal(64, &mut rng);
            let c = ls_fit_linear(&tx, &cn_signal(64, &mut rng), 2);
            let summed: Vec<Cf64> = rx1.iter().zip(&rx2).map(|(x, y)| x + y).collect();
            let r_sum = cancel(&summed, &tx, &c);
            let r1 = cancel(&rx1, &tx, &c);
            let r2 = cancel(&rx2, &tx, &c);
            let pred = c.predict(&tx);
            for k in 0..64 {
                let expect = r1[k] + r2[k] + pred[k];
                prop_assert!((r_sum[k] - expect).norm() < 1e-12);
            }
        }
    }
}
