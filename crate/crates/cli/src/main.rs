//! `uc-lab`: batch front-end for the unique-continuation experiments.
//!
//! Each run reads one JSON config, writes its artifacts plus `manifest.json`
//! into `--out` atomically, and exits 0 on success, 2 on invalid input and 3
//! on a numerical failure.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};
use uc_lab::config::{LabConfig, SCHEMA_VERSION};

use crate::commands::Run;
use crate::error::{CliError, Result};
use crate::output::{Artifacts, MANIFEST};

/// Environment variable overriding `--threads`.
const THREADS_ENV: &str = "UC_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "uc-lab", version, about = "Quantitative unique continuation across a coefficient jump")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: results/<command>].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the `seed` key of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; `UC_LAB_THREADS` takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the interface-fitted mesh.
    Mesh,
    /// Solve the transmission problem with closed-form boundary data.
    Solve,
    /// Monte Carlo audit of the region lemmas.
    Regions,
    /// Greedy disjoint cover of the interface inside D.
    Cover,
    /// Chain of balls between two points.
    Chain,
    /// Three-ball inequality over a solution family.
    ThreeBalls,
    /// Three-region inequality over a solution family.
    ThreeRegion,
    /// Propagation-of-smallness certificate from a ball to D.
    Propagate,
    /// Extremal smallness sweep against the certified bound.
    Sweep,
    /// Cauchy-problem stability under noisy data.
    Cauchy,
    /// Quantitative Runge approximation.
    Runge,
    /// Propagation from a set of positive measure.
    PositiveMeasure,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Solve => "solve",
            Command::Regions => "regions",
            Command::Cover => "cover",
            Command::Chain => "chain",
            Command::ThreeBalls => "three-balls",
            Command::ThreeRegion => "three-region",
            Command::Propagate => "propagate",
            Command::Sweep => "sweep",
            Command::Cauchy => "cauchy",
            Command::Runge => "runge",
            Command::PositiveMeasure => "positive-measure",
        }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Validation(format!("{THREADS_ENV}={v:?} is not a positive integer")))?,
        ),
        Err(_) => flag,
    };
    match n {
        Some(0) => Err(CliError::Validation("thread count must be positive".into())),
        n => Ok(n),
    }
}

fn run(cli: Cli) -> Result<PathBuf> {
    let threads = threads(cli.threads)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot start {n} threads: {e}")))?;
    }
    let bytes = match &cli.config {
        Some(p) => std::fs::read(p).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", p.display())))?,
        None => b"{}".to_vec(),
    };
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Validation(format!("config is not UTF-8: {e}")))?;
    let cfg = LabConfig::from_json(text)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results").join(cli.command.name()));

    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cli.command.name(),
        "config_path": cli.config.as_ref().map(|p| p.display().to_string()),
        "config_sha256": hex::encode(Sha256::digest(&bytes)),
        "seed": seed,
        "versions": { "uc-lab": env!("CARGO_PKG_VERSION"), "uc-lab-core": uc_lab::VERSION },
        "platform": { "os": std::env::consts::OS, "arch": std::env::consts::ARCH },
        "config": cfg,
    });
    let mut artifacts = Artifacts::default();
    Run { cfg, seed }.execute(cli.command, &mut artifacts)?;
    artifacts.json(MANIFEST, &manifest)?;
    artifacts.commit(&out_dir)?;
    Ok(out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            eprintln!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("uc-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
