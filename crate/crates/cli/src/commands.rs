//! The four subcommands: `train`, `sweep`, `region`, `demo`.
//!
//! Each writes into its output directory a reproduction manifest — the
//! resolved config echo, the tool version, and the master seed — plus its
//! own artifacts. All file artifacts are deterministic for identical
//! config and seed; wall-clock timings go to stdout only.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use duplex_core::duplex::{
    measure_residual_anchors, run_two_way, sweep, DirectionOutcome, SimResult, SweepTemplate,
};
use duplex_core::feasibility::{dominates, feasible_region, Paradigm, RegionBoundary};
use duplex_core::image::ImagePatch;
use duplex_core::semantic::model::JsccModel;
use duplex_core::semantic::train::{train_jscc, ResidualModel, TrainChannelModel};

use crate::config::ExperimentConfig;
use crate::corpus::{direction_pools, load_corpus, Split};
use crate::model_io::{load_model, save_model};
use crate::pgm::write_pgm;
use crate::report;

pub const VERSION_STRING: &str = concat!("sddsim ", env!("CARGO_PKG_VERSION"));

/// Create the output directory and write the reproduction manifest.
fn prepare_out_dir(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    fs::write(out.join("VERSION"), format!("{VERSION_STRING}\n"))?;
    fs::write(out.join("seed.txt"), format!("{}\n", cfg.master_seed))?;
    Ok(())
}

/// Measure the digital-SIC residual law on the configured scenario and
/// package it for the trainer.
fn measured_residual(cfg: &ExperimentConfig) -> Result<ResidualModel> {
    let scenario = cfg.scenario()?;
    let grid = cfg.sinr_grid()?;
    let anchors =
        measure_residual_anchors(&scenario, cfg.sic_mode()?, &grid, cfg.sweep.trials, cfg.master_seed);
    Ok(ResidualModel {
        anchors,
        shape: cfg.residual_shape()?,
        taps: cfg.channel.si_taps,
    })
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    prepare_out_dir(out, cfg)?;
    let corpus = load_corpus(Path::new(&cfg.corpus_dir), cfg.jscc.patch_size)?;
    let train_patches = corpus.patches(Split::Train);
    if train_patches.is_empty() {
        bail!("corpus has no patches in the train split");
    }

    println!("measuring residual-interference anchors on the configured scenario");
    let residual = measured_residual(cfg)?;
    let anchors_csv: String = std::iter::once("pre_digital_sinr_db,rho\n".to_string())
        .chain(residual.anchors.iter().map(|(s, r)| {
            format!("{},{}\n", report::fmt_f64(*s), report::fmt_f64(*r))
        }))
        .collect();
    fs::write(out.join("anchors.csv"), anchors_csv)?;

    let channel = TrainChannelModel {
        desired_snr_db: cfg.channel.snr_db,
        residual,
    };
    let tc = cfg.train_config()?;
    let mut model = JsccModel::new(cfg.model_spec()?, tc.seed);
    println!(
        "training: {} steps, batch {}, {} train patches",
        tc.steps,
        tc.batch_size,
        train_patches.len()
    );
    let started = Instant::now();
    let losses = train_jscc(&mut model, &train_patches, &channel, &tc)
        .map_err(|e| anyhow::anyhow!("training failed: {e:?}"))?;
    println!("trained in {:.1} s, final loss {:.5}", started.elapsed().as_secs_f64(), losses.last().copied().unwrap_or(f64::NAN));

    let model_path = out.join(model_file_name(cfg));
    save_model(&model_path, &model)?;
    fs::write(out.join("loss.csv"), report::loss_csv(&losses))?;
    println!("model written to {}", model_path.display());
    Ok(())
}

fn model_file_name(cfg: &ExperimentConfig) -> String {
    PathBuf::from(&cfg.jscc.model_file)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model.sddm".into())
}

/// Load the trained model; for runs that never touch the semantic chain a
/// freshly initialized model stands in (only its architecture is used).
fn model_for(cfg: &ExperimentConfig, paradigms: &[Paradigm]) -> Result<JsccModel> {
    let path = cfg.model_path();
    if paradigms.contains(&Paradigm::Sdd) {
        let model = load_model(&path).with_context(|| {
            format!(
                "the sweep includes the semantic paradigm but no trained model loads from {} \
                 (run `train` first and point jscc.model_file at its output)",
                path.display()
            )
        })?;
        let expected = cfg.model_spec()?;
        if model.spec != expected {
            bail!(
                "model file {} was trained with a different architecture than the config",
                path.display()
            );
        }
        Ok(model)
    } else {
        Ok(JsccModel::new(cfg.model_spec()?, 0))
    }
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    out: &Path,
    dump_images: bool,
    only: Option<Paradigm>,
) -> Result<()> {
    cfg.validate()?;
    prepare_out_dir(out, cfg)?;
    let mut paradigms = cfg.paradigms()?;
    if let Some(p) = only {
        if !paradigms.contains(&p) {
            bail!("--paradigm {} is not in sweep.paradigms", p.label());
        }
        paradigms = vec![p];
    }
    let corpus = load_corpus(Path::new(&cfg.corpus_dir), cfg.jscc.patch_size)?;
    let eval = corpus.patches(Split::Eval);
    if eval.len() < 2 {
        bail!("corpus eval split needs at least two patches, found {}", eval.len());
    }
    let (ab, ba) = direction_pools(&eval);
    let model = model_for(cfg, &paradigms)?;

    let template = SweepTemplate {
        paradigms: paradigms.clone(),
        scenario: cfg.scenario()?,
        sic_mode: cfg.sic_mode()?,
        resource_split_alpha: cfg.sweep.resource_split_alpha,
        ldpc_rate: cfg.ldpc_rate()?,
        bp_max_iter: cfg.ldpc.bp_max_iter,
    };
    let grid = cfg.sinr_grid()?;
    println!(
        "sweeping {} paradigm(s) x {} SINR points x {} trials",
        paradigms.len(),
        grid.len(),
        cfg.sweep.trials
    );
    let started = Instant::now();
    let rows = sweep(&template, &grid, &model, &ab, &ba, cfg.sweep.trials, cfg.master_seed)
        .map_err(|e| anyhow::anyhow!("sweep rejected: {e}"))?;
    println!("swept {} rows in {:.1} s", rows.len(), started.elapsed().as_secs_f64());

    fs::write(out.join("sweep.csv"), report::sweep_csv(&rows))?;
    fs::write(out.join("sweep.svg"), report::sweep_svg(&rows))?;

    if dump_images {
        let dir = out.join("images");
        fs::create_dir_all(&dir)?;
        write_pgm(&dir.join("original_ab.pgm"), &ab[0])?;
        write_pgm(&dir.join("original_ba.pgm"), &ba[0])?;
        for &p in &paradigms {
            let mut pc = cfg.paradigm_config(p)?;
            for &sinr in &grid {
                pc.pre_digital_sinr_db = sinr;
                let seed = duplex_core::rng::derive_stream_id(&[cfg.master_seed, 0]);
                let res = run_two_way(&pc, &template.scenario, &model, &ab[0], &ba[0], seed)
                    .map_err(|e| anyhow::anyhow!("image dump run: {e}"))?;
                dump_direction(&dir, p, sinr, "ab", &res.ab)?;
                dump_direction(&dir, p, sinr, "ba", &res.ba)?;
            }
        }
    }
    Ok(())
}

/// A failed baseline decode is dumped as the all-black frame — the image
/// that could not be obtained — matching how such results are presented.
fn dump_direction(
    dir: &Path,
    paradigm: Paradigm,
    sinr_db: f64,
    leg: &str,
    outcome: &DirectionOutcome,
) -> Result<()> {
    let patch = if outcome.failed {
        ImagePatch::constant(outcome.reconstruction.width, outcome.reconstruction.height, 0.0)
    } else {
        outcome.reconstruction.clone()
    };
    let name = format!("{}_{}dB_{}.pgm", paradigm.label(), report::fmt_f64(sinr_db), leg);
    write_pgm(&dir.join(name), &patch)
}

pub fn cmd_region(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    prepare_out_dir(out, cfg)?;
    let budget = cfg.link_budget();
    let em = cfg.efficiency_model()?;
    let src = (cfg.feasibility.src_rate_ab, cfg.feasibility.src_rate_ba);
    let n = cfg.feasibility.n_points;
    let boundaries: Vec<RegionBoundary> = Paradigm::ALL
        .iter()
        .map(|&p| feasible_region(p, &budget, &budget, &em, src, n))
        .collect();

    fs::write(out.join("region.csv"), report::region_csv(&boundaries))?;
    fs::write(out.join("region.svg"), report::region_svg(&boundaries))?;

    let sdd = &boundaries[Paradigm::ALL.iter().position(|&p| p == Paradigm::Sdd).unwrap()];
    let ibfd = &boundaries[Paradigm::ALL.iter().position(|&p| p == Paradigm::Ibfd).unwrap()];
    let fdd = &boundaries[Paradigm::ALL.iter().position(|&p| p == Paradigm::FddTdd).unwrap()];
    let sdd_over_ibfd = dominates(sdd, ibfd);
    let ibfd_over_fdd = dominates(ibfd, fdd);
    let verdict = format!(
        "sdd covers ibfd: {sdd_over_ibfd}\nibfd covers fdd_tdd: {ibfd_over_fdd}\n"
    );
    fs::write(out.join("nesting.txt"), &verdict)?;
    print!("{verdict}");
    if !(sdd_over_ibfd && ibfd_over_fdd) {
        bail!("feasible-region nesting violated under the configured efficiency model");
    }
    Ok(())
}

pub fn cmd_demo(cfg: &ExperimentConfig, out: &Path, paradigm: Paradigm) -> Result<()> {
    cfg.validate()?;
    prepare_out_dir(out, cfg)?;
    let corpus = load_corpus(Path::new(&cfg.corpus_dir), cfg.jscc.patch_size)?;
    let eval = corpus.patches(Split::Eval);
    if eval.len() < 2 {
        bail!("corpus eval split needs at least two patches, found {}", eval.len());
    }
    let model = model_for(cfg, &[paradigm])?;
    let mut pc = cfg.paradigm_config(paradigm)?;
    // run at the deep-interference end of the configured sweep range,
    // where the paradigms differ the most
    pc.pre_digital_sinr_db = cfg.sweep.sinr_start_db;
    let scenario = cfg.scenario()?;

    let started = Instant::now();
    let mut res: SimResult = run_two_way(&pc, &scenario, &model, &eval[0], &eval[1], cfg.master_seed)
        .map_err(|e| anyhow::anyhow!("demo run: {e}"))?;
    res.runtime_seconds = started.elapsed().as_secs_f64();

    let dir = out.join("images");
    fs::create_dir_all(&dir)?;
    write_pgm(&dir.join("original_ab.pgm"), &eval[0])?;
    write_pgm(&dir.join("original_ba.pgm"), &eval[1])?;
    dump_direction(&dir, paradigm, pc.pre_digital_sinr_db, "ab", &res.ab)?;
    dump_direction(&dir, paradigm, pc.pre_digital_sinr_db, "ba", &res.ba)?;

    let csv = demo_csv(&res);
    fs::write(out.join("demo.csv"), &csv)?;
    println!(
        "{} at {} dB pre-digital SINR ({:.3} s):",
        paradigm.label(),
        report::fmt_f64(pc.pre_digital_sinr_db),
        res.runtime_seconds
    );
    for (leg, o) in [("a->b", &res.ab), ("b->a", &res.ba)] {
        println!(
            "  {leg}: ms_ssim {:.4}, psnr {:.1} dB, failed {}, post-digital sinr {:.1} dB",
            o.ms_ssim, o.psnr, o.failed, o.sinr_post_digital_db
        );
    }
    Ok(())
}

/// Per-direction metrics of one run; wall-clock time deliberately kept out
/// so reruns stay byte-identical.
fn demo_csv(res: &SimResult) -> String {
    let mut out = String::from(
        "direction,ms_ssim,ms_ssim_db,psnr,ber,failed,sinr_pre_digital_db,\
         sinr_post_digital_db,digital_suppression_db\n",
    );
    for (leg, o) in [("ab", &res.ab), ("ba", &res.ba)] {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            leg,
            report::fmt_f64(o.ms_ssim),
            report::fmt_f64(o.ms_ssim_db),
            report::fmt_f64(o.psnr),
            report::fmt_f64(o.ber),
            o.failed,
            report::fmt_f64(o.sinr_pre_digital_db),
            report::fmt_f64(o.sinr_post_digital_db),
            report::fmt_f64(o.digital_suppression_db),
        ));
    }
    out
}
