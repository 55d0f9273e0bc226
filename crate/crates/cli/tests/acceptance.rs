//! Acceptance gate: one test per criterion, each printing a pass/fail
//! line (visible with `--nocapture`). The reference training and sweep
//! run once and are shared by the criteria that read them.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use duplex_cli::commands::{cmd_demo, cmd_region, cmd_sweep, cmd_train};
use duplex_cli::config::ExperimentConfig;
use duplex_cli::corpus::{direction_pools, load_corpus, Split};
use duplex_cli::model_io::load_model;
use duplex_core::baseline::ldpc::{LdpcCode, NominalRate};
use duplex_core::baseline::modem::{qpsk_demod_hard, qpsk_modulate};
use duplex_core::channel::{ChannelTaps, PathLossConfig};
use duplex_core::duplex::{sweep, SweepRow, SweepTemplate};
use duplex_core::feasibility::{awgn_capacity, Paradigm};
use duplex_core::image::ImagePatch;
use duplex_core::math;
use duplex_core::metrics::ms_ssim;
use duplex_core::rng::{derive_stream_id, RngStream};
use duplex_core::semantic::model::{JsccModel, ModelSpec};
use duplex_core::semantic::train::{gradient_check, LossKind, TrainChannelModel};
use duplex_core::sic;
use duplex_core::signal;

fn check(id: u32, name: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("criterion {id} ({name}): PASS"),
        Err(why) => {
            println!("criterion {id} ({name}): FAIL - {why}");
            panic!("criterion {id} ({name}) failed: {why}");
        }
    }
}

fn corpus_dir() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("assets/corpus")
        .to_string_lossy()
        .into_owned()
}

/// The reference experiment: bundled corpus, default architecture and
/// channel, default 11-point sweep at 20 trials.
fn reference_config(tmp: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.corpus_dir = corpus_dir();
    cfg.jscc.model_file = tmp
        .join("train/model.sddm")
        .to_string_lossy()
        .into_owned();
    cfg
}

struct Fixture {
    _dir: tempfile::TempDir,
    model: JsccModel,
    rows: Vec<SweepRow>,
    eval: Vec<ImagePatch>,
    /// Wall-clock seconds for reference training plus the full sweep.
    elapsed_s: f64,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let cfg = reference_config(dir.path());
        let started = Instant::now();
        cmd_train(&cfg, &dir.path().join("train")).expect("reference training");
        let model = load_model(&cfg.model_path()).expect("trained model loads");
        let corpus =
            load_corpus(Path::new(&cfg.corpus_dir), cfg.jscc.patch_size).expect("corpus");
        let eval = corpus.patches(Split::Eval);
        let (ab, ba) = direction_pools(&eval);
        let template = SweepTemplate {
            paradigms: Paradigm::ALL.to_vec(),
            scenario: cfg.scenario().expect("scenario"),
            sic_mode: cfg.sic_mode().expect("sic mode"),
            resource_split_alpha: cfg.sweep.resource_split_alpha,
            ldpc_rate: cfg.ldpc_rate().expect("rate"),
            bp_max_iter: cfg.ldpc.bp_max_iter,
        };
        let grid = cfg.sinr_grid().expect("grid");
        let rows = sweep(
            &template,
            &grid,
            &model,
            &ab,
            &ba,
            cfg.sweep.trials,
            cfg.master_seed,
        )
        .expect("reference sweep");
        let elapsed_s = started.elapsed().as_secs_f64();
        Fixture { _dir: dir, model, rows, eval, elapsed_s }
    })
}

fn rows_of(paradigm: Paradigm) -> Vec<&'static SweepRow> {
    fixture().rows.iter().filter(|r| r.paradigm == paradigm).collect()
}

#[test]
fn criterion_1_graceful_degradation() {
    let f = fixture();
    let sdd = rows_of(Paradigm::Sdd);
    let mut outcome = Ok(());
    if sdd.len() != 11 {
        outcome = Err(format!("expected 11 semantic rows, got {}", sdd.len()));
    }
    for w in sdd.windows(2) {
        if w[1].ms_ssim_mean < w[0].ms_ssim_mean - 0.02 {
            outcome = Err(format!(
                "quality falls with rising SINR: {} at {} dB -> {} at {} dB",
                w[0].ms_ssim_mean, w[0].sinr_db, w[1].ms_ssim_mean, w[1].sinr_db
            ));
            break;
        }
    }
    if outcome.is_ok() && f.elapsed_s > 600.0 {
        outcome = Err(format!("training + sweep took {:.0} s (> 600 s)", f.elapsed_s));
    }
    check(1, "graceful degradation", outcome);
}

#[test]
fn criterion_2_cliff_effect() {
    let ibfd = rows_of(Paradigm::Ibfd);
    let sdd = rows_of(Paradigm::Sdd);
    // 5 dB window on the 2 dB grid = three consecutive points
    let mut found = None;
    for i in 0..ibfd.len().saturating_sub(2) {
        let ibfd_drop = ibfd[i + 2].ms_ssim_mean - ibfd[i].ms_ssim_mean;
        let sdd_drop = sdd[i + 2].ms_ssim_mean - sdd[i].ms_ssim_mean;
        if ibfd_drop > 0.3 && sdd_drop < 0.1 {
            found = Some((ibfd[i].sinr_db, ibfd_drop, sdd_drop));
            break;
        }
    }
    let mut outcome = match found {
        Some(_) => Ok(()),
        None => Err("no 5 dB window with baseline drop > 0.3 and semantic drop < 0.1".into()),
    };
    if outcome.is_ok() {
        let f_low = ibfd.first().unwrap().failure_rate;
        let f_high = ibfd.last().unwrap().failure_rate;
        if f_low <= f_high {
            outcome = Err(format!(
                "baseline failure rate {f_low} at -50 dB is not above {f_high} at -30 dB"
            ));
        }
    }
    check(2, "cliff effect", outcome);
}

#[test]
fn criterion_3_crossover() {
    let ibfd = rows_of(Paradigm::Ibfd);
    let sdd = rows_of(Paradigm::Sdd);
    let mut outcome = Ok(());
    for (b, s) in ibfd.iter().zip(&sdd) {
        assert_eq!(b.sinr_db, s.sinr_db);
        if b.failure_rate > 0.5 && s.ms_ssim_mean < b.ms_ssim_mean {
            outcome = Err(format!(
                "at {} dB baseline fails {}% yet scores {} vs semantic {}",
                b.sinr_db,
                b.failure_rate * 100.0,
                b.ms_ssim_mean,
                s.ms_ssim_mean
            ));
            break;
        }
    }
    check(3, "crossover under failure", outcome);
}

#[test]
fn criterion_4_semantics_division() {
    let f = fixture();
    let mut correct = 0.0;
    let mut swapped = 0.0;
    let mut n = 0.0;
    for patch in &f.eval {
        for dir in 0..2 {
            let z = f.model.encode(patch, dir);
            correct += ms_ssim(patch, &f.model.decode(&z, dir));
            swapped += ms_ssim(patch, &f.model.decode(&z, 1 - dir));
            n += 1.0;
        }
    }
    let gap = (correct - swapped) / n;
    let outcome = if gap >= 0.05 {
        Ok(())
    } else {
        Err(format!("direction gap {gap:.4} below 0.05"))
    };
    check(4, "semantics division", outcome);
}

#[test]
fn criterion_5_region_nesting() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let started = Instant::now();
    let lib_result = cmd_region(&cfg, &tmp.path().join("lib"));
    let elapsed = started.elapsed().as_secs_f64();
    let mut outcome = lib_result.map_err(|e| format!("nesting check failed: {e:#}"));
    if outcome.is_ok() && elapsed >= 1.0 {
        outcome = Err(format!("region evaluation took {elapsed:.2} s (>= 1 s)"));
    }
    if outcome.is_ok() {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_sddsim"))
            .args(["region", "--out"])
            .arg(tmp.path().join("bin"))
            .status()
            .expect("spawning the region command");
        if !status.success() {
            outcome = Err(format!("`region` command exited {status}"));
        }
    }
    check(5, "region nesting", outcome);
}

/// Exhaustive maximum-likelihood decoding over every codeword.
fn ml_codeword(code: &LdpcCode, y: &[f64]) -> Vec<u8> {
    let k = code.k();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for m in 0..(1u32 << k) {
        let msg: Vec<u8> = (0..k).map(|b| ((m >> b) & 1) as u8).collect();
        let cw = code.encode(&msg);
        let score: f64 = cw
            .iter()
            .zip(y)
            .map(|(&bit, &yi)| if bit == 0 { yi } else { -yi })
            .sum();
        if score > best.0 {
            best = (score, cw);
        }
    }
    best.1
}

#[test]
fn criterion_6_coding_oracles() {
    // belief propagation against exhaustive ML on a 12-bit code at 6 dB
    let code = LdpcCode::from_qc(NominalRate::OneThird, 1);
    assert!(code.n() <= 16, "oracle code must stay exhaustively decodable");
    let rate = code.k() as f64 / code.n() as f64;
    let ebn0 = math::db_to_lin(6.0);
    let sigma2 = 1.0 / (2.0 * rate * ebn0);
    let mut rng = RngStream::new(0xACCE, derive_stream_id(&[6, 1]));
    let blocks = 1000;
    let mut agree = 0;
    for _ in 0..blocks {
        let msg: Vec<u8> = (0..code.k()).map(|_| rng.next_bit()).collect();
        let cw = code.encode(&msg);
        let y: Vec<f64> = cw
            .iter()
            .map(|&b| {
                let x = if b == 0 { 1.0 } else { -1.0 };
                x + rng.next_gaussian() * sigma2.sqrt()
            })
            .collect();
        let llr: Vec<f64> = y.iter().map(|v| 2.0 * v / sigma2).collect();
        let bp = code.decode_bp(&llr, 50);
        if bp.codeword == ml_codeword(&code, &y) {
            agree += 1;
        }
    }
    let mut outcome = if agree * 100 >= blocks * 99 {
        Ok(())
    } else {
        Err(format!("BP matched ML on only {agree}/{blocks} blocks"))
    };

    // uncoded QPSK BER against the Gaussian tail at 0 and 4 dB
    if outcome.is_ok() {
        for (ebn0_db, expect) in [(0.0, 0.07864960352514257), (4.0, 0.012500818040737563)] {
            let n_bits = 1_000_000usize;
            let n0 = 0.5 / math::db_to_lin(ebn0_db); // Eb = Es/2 = 1/2
            let mut rng = RngStream::new(0xACCE, derive_stream_id(&[6, 2, ebn0_db as u64]));
            let bits: Vec<u8> = (0..n_bits).map(|_| rng.next_bit()).collect();
            let mut symbols = qpsk_modulate(&bits);
            for s in symbols.iter_mut() {
                *s += rng.next_cn() * n0.sqrt();
            }
            let errors = qpsk_demod_hard(&symbols)
                .iter()
                .zip(&bits)
                .filter(|(a, b)| a != b)
                .count();
            let ber = errors as f64 / n_bits as f64;
            if (ber - expect).abs() > 0.1 * expect {
                outcome = Err(format!(
                    "QPSK BER {ber:.5} at {ebn0_db} dB is over 10% from {expect:.5}"
                ));
                break;
            }
        }
    }
    check(6, "coding oracles", outcome);
}

#[test]
fn criterion_7_sic_suppression() {
    // linear LS fit with noiseless estimation: residual == the noise draw
    let mut rng = RngStream::new(0x51C, derive_stream_id(&[7, 1]));
    let taps = ChannelTaps {
        taps: (0..3).map(|i| rng.next_cn() * math::powf(0.5, i as f64)).collect(),
    };
    let pilots: Vec<_> = (0..4096).map(|_| rng.next_cn()).collect();
    let canceller = sic::ls_fit_linear(&pilots, &taps.apply(&pilots), 3);
    let tx: Vec<_> = (0..4096).map(|_| rng.next_cn()).collect();
    let noise_power: f64 = 1e-4;
    let noise: Vec<_> = (0..tx.len()).map(|_| rng.next_cn() * noise_power.sqrt()).collect();
    let rx: Vec<_> = taps
        .apply(&tx)
        .iter()
        .zip(&noise)
        .map(|(a, b)| a + b)
        .collect();
    let residual = sic::cancel(&rx, &tx, &canceller);
    let gap_db = (math::lin_to_db(signal::power(&residual))
        - math::lin_to_db(signal::power(&noise)))
    .abs();
    let mut outcome = if gap_db <= 0.1 {
        Ok(())
    } else {
        Err(format!("linear residual sits {gap_db:.3} dB off the noise floor"))
    };

    // learned nonlinear canceller on the P=3, M=2 memory polynomial
    if outcome.is_ok() {
        let basis = sic::MemoryPolynomialBasis { max_order: 3, memory: 2 };
        let mut rng = RngStream::new(0x51C, derive_stream_id(&[7, 2]));
        let truth: Vec<_> = (0..basis.n_terms()).map(|_| rng.next_cn()).collect();
        let tx: Vec<_> = (0..4096).map(|_| rng.next_cn()).collect();
        let mut rx = vec![duplex_core::Cf64::new(0.0, 0.0); tx.len()];
        // ground truth: linear + cubic terms with two-tap memory
        for (k, r) in rx.iter_mut().enumerate() {
            for (t, c) in truth.iter().enumerate() {
                let m = t % 2;
                if k >= m {
                    let x = tx[k - m];
                    let f = if t < 2 { x } else { x * x.norm_sqr() };
                    *r += c * f;
                }
            }
            *r += rng.next_cn() * 1e-3;
        }
        let (canceller, _trace) =
            sic::fit_nonlinear(&tx, &rx, &sic::NonlinearBasis::MemoryPolynomial(basis))
                .expect("fit");
        let residual = sic::cancel(&rx, &tx, &canceller);
        let supp = math::lin_to_db(signal::power(&rx) / signal::power(&residual));
        if supp < 20.0 {
            outcome = Err(format!("nonlinear suppression {supp:.1} dB below 20 dB"));
        }
    }
    check(7, "sic suppression", outcome);
}

#[test]
fn criterion_8_numerics() {
    let mut outcome = Ok(());

    let spec = ModelSpec {
        patch_size: 16,
        d_c: 4,
        hidden: 24,
        n_hidden_layers: 1,
        k_symbols: 64,
        ..ModelSpec::default()
    };
    let mut model = JsccModel::new(spec, 3);
    let batch: Vec<ImagePatch> = {
        let corpus = load_corpus(Path::new(&corpus_dir()), 16).expect("corpus");
        corpus.patches(Split::Eval).into_iter().take(2).collect()
    };
    let channel = TrainChannelModel::default();
    let err = gradient_check(&mut model, &batch, &channel, LossKind::Mse, 11);
    if err >= 1e-4 {
        outcome = Err(format!("gradient check error {err:.2e} at or above 1e-4"));
    }

    if outcome.is_ok() && awgn_capacity(0.0) != 1.0 {
        outcome = Err(format!("awgn_capacity(0 dB) = {}, not exactly 1", awgn_capacity(0.0)));
    }

    if outcome.is_ok() {
        let pl = PathLossConfig { carrier_hz: 2.9e9, exponent: 2.0 };
        let got = pl.path_loss_db(25.0);
        if (got - 69.65).abs() > 0.02 {
            outcome = Err(format!("CI path loss {got:.4} dB, expected 69.65 +/- 0.02"));
        }
    }
    check(8, "numerics", outcome);
}

/// Small-but-complete settings so the determinism reruns stay quick.
fn fast_config(tmp: &Path) -> ExperimentConfig {
    let text = format!(
        r#"
corpus_dir = "{}"
master_seed = 5

[jscc]
d_c = 4
hidden = 24
n_hidden_layers = 1
k_symbols = 64
steps = 40
batch_size = 4
model_file = "{}"

[sweep]
n_points = 3
trials = 2
"#,
        corpus_dir(),
        tmp.join("t1/model.sddm").to_string_lossy()
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

fn same_bytes(a: &Path, b: &Path, files: &[&str]) -> Result<(), String> {
    for f in files {
        let left = fs::read(a.join(f)).map_err(|e| format!("{f}: {e}"))?;
        let right = fs::read(b.join(f)).map_err(|e| format!("{f}: {e}"))?;
        if left != right {
            return Err(format!("artifact {f} differs between identical reruns"));
        }
    }
    Ok(())
}

#[test]
fn criterion_9_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fast_config(tmp.path());
    let dir = |s: &str| -> PathBuf { tmp.path().join(s) };

    cmd_train(&cfg, &dir("t1")).expect("train");
    cmd_train(&cfg, &dir("t2")).expect("train rerun");
    let mut outcome = same_bytes(
        &dir("t1"),
        &dir("t2"),
        &["model.sddm", "loss.csv", "anchors.csv", "config.toml"],
    );
    if outcome.is_ok() {
        cmd_sweep(&cfg, &dir("s1"), true, None).expect("sweep");
        cmd_sweep(&cfg, &dir("s2"), true, None).expect("sweep rerun");
        outcome = same_bytes(
            &dir("s1"),
            &dir("s2"),
            &["sweep.csv", "sweep.svg", "images/SDD_-50dB_ab.pgm"],
        );
    }
    if outcome.is_ok() {
        cmd_region(&cfg, &dir("r1")).expect("region");
        cmd_region(&cfg, &dir("r2")).expect("region rerun");
        outcome = same_bytes(&dir("r1"), &dir("r2"), &["region.csv", "region.svg"]);
    }
    if outcome.is_ok() {
        cmd_demo(&cfg, &dir("d1"), Paradigm::Sdd).expect("demo");
        cmd_demo(&cfg, &dir("d2"), Paradigm::Sdd).expect("demo rerun");
        outcome = same_bytes(
            &dir("d1"),
            &dir("d2"),
            &["demo.csv", "images/SDD_-50dB_ab.pgm", "images/original_ba.pgm"],
        );
    }
    check(9, "determinism", outcome);
}
