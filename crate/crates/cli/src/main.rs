// SPDX-License-Identifier: MIT OR Apache-2.0

//! `khelm`: batch front end for synthesis, segmentation, encoding, training and evaluation.
//!
//! Exit status is 0 on success, 2 on a numerical failure and 1 on any other error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use khelm_core::timeseries::Orientation;
use khelm_core::{Error, Result};

use crate::commands::Run;
use crate::config::RunConfig;

const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "khelm", version, about = "Change-point segmentation and KH-ELM classification of ROI time series")]
struct Cli {
    /// Master seed; overrides `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run configuration (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Layout of series CSV files: `rows` (one ROI per row) or `cols`.
    #[arg(long, global = true)]
    orientation: Option<Orientation>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled synthetic cohort with known change points.
    Synth {
        /// Cohort spec file; defaults to the [synth] config section.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the change-point posterior of one series.
    Detect {
        #[arg(long)]
        series: PathBuf,
        /// Output posterior report (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode one series into a feature row.
    Encode {
        #[arg(long)]
        series: PathBuf,
        /// Mask JSON (or a detect report); without it the series is one block.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Class label written in the first column (+1 or -1).
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        label: i32,
        /// Output feature CSV.
        #[arg(long)]
        out: PathBuf,
        /// Add the row to an existing feature CSV instead of replacing it.
        #[arg(long)]
        append: bool,
    },
    /// Train a KH-ELM on a feature CSV.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Output model (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained model, or cross-validate on a feature CSV.
    Eval {
        #[arg(long)]
        features: PathBuf,
        /// Trained model to score; without it the configured experiment is cross-validated.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the configured experiment end to end on a cohort.
    Pipeline {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn build_run(cli: &Cli) -> Result<Run> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(orientation) = cli.orientation {
        config.orientation = orientation;
    }
    config.validate()?;
    let seed = config.seed.unwrap_or(DEFAULT_SEED);
    config.seed = Some(seed);
    Ok(Run { config, seed })
}

fn execute(cli: &Cli, run: &Run) -> Result<()> {
    match &cli.command {
        Command::Synth { spec, out } => commands::synth(run, spec.as_deref(), out),
        Command::Detect { series, out } => commands::detect_cmd(run, series, out),
        Command::Encode { series, mask, label, out, append } => {
            commands::encode(run, series, mask.as_deref(), *label, out, *append)
        }
        Command::Train { features, out } => commands::train(run, features, out),
        Command::Eval { features, model, out } => commands::eval(run, features, model.as_deref(), out),
        Command::Pipeline { out } => commands::pipeline(run, out),
    }
}

fn run_cli(cli: &Cli) -> Result<()> {
    let run = build_run(cli)?;
    let jobs = cli.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| execute(cli, &run))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run_cli(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
