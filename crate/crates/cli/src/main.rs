//! `sddsim`: link-level two-way full-duplex experiments from one config
//! file. Subcommands: `train`, `sweep`, `region`, `demo`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use duplex_cli::commands;
use duplex_cli::config::ExperimentConfig;
use duplex_core::feasibility::Paradigm;

#[derive(Parser)]
#[command(name = "sddsim", version, about = "two-way full-duplex link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); defaults apply for every omitted key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config's `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the semantic model and write it with its loss trace.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep paradigms across the SINR grid; write CSV, chart, images.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also write per-point reconstructed patches as PGM.
        #[arg(long)]
        dump_images: bool,
        /// Restrict the sweep to one paradigm (fdd_tdd, ibfd, sdd).
        #[arg(long, value_parser = parse_paradigm)]
        paradigm: Option<Paradigm>,
    },
    /// Emit the Feasible-Region boundaries and check their nesting.
    Region {
        #[command(flatten)]
        common: Common,
    },
    /// One two-way run at the deep-interference end, with image dumps.
    Demo {
        #[command(flatten)]
        common: Common,
        /// Paradigm to run (fdd_tdd, ibfd, sdd).
        #[arg(long, default_value = "sdd", value_parser = parse_paradigm)]
        paradigm: Paradigm,
    },
}

fn parse_paradigm(s: &str) -> Result<Paradigm, String> {
    Paradigm::parse(s).ok_or_else(|| format!("unknown paradigm {s:?} (fdd_tdd, ibfd, sdd)"))
}

/// Load the config (or defaults) and apply the flag overrides.
fn resolve(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    cfg.out_dir = out.to_string_lossy().into_owned();
    Ok((cfg, out))
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Train { common } => {
            let (cfg, out) = resolve(&common)?;
            commands::cmd_train(&cfg, &out)
        }
        Command::Sweep { common, dump_images, paradigm } => {
            let (cfg, out) = resolve(&common)?;
            commands::cmd_sweep(&cfg, &out, dump_images, paradigm)
        }
        Command::Region { common } => {
            let (cfg, out) = resolve(&common)?;
            commands::cmd_region(&cfg, &out)
        }
        Command::Demo { common, paradigm } => {
            let (cfg, out) = resolve(&common)?;
            commands::cmd_demo(&cfg, &out, paradigm)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
