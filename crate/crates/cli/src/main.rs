//! Command-line pipeline: ingestion, unit-root testing, model fitting,
//! rolling forecasts, evaluation, critical-value simulation, and SVG
//! reports.

mod commands;
mod config;
mod output;
mod svg;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::{OutputSet, RunMeta};

#[derive(Parser)]
#[command(
    name = "hpiconv",
    version,
    about = "Regional-to-national index convergence tests and forecast comparison"
)]
struct Cli {
    /// Flat key=value configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// CSV data file (first column dates, remaining columns index levels).
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    /// Name of the national index column.
    #[arg(long, global = true)]
    national: Option<String>,

    /// Comma-separated regional column names.
    #[arg(long, global = true, value_delimiter = ',')]
    regions: Option<Vec<String>>,

    /// Last quarter of the training sample, e.g. 2008Q4.
    #[arg(long = "train-end", global = true)]
    train_end: Option<String>,

    /// Last quarter of the evaluation sample (default: end of data).
    #[arg(long = "sample-end", global = true)]
    sample_end: Option<String>,

    /// Comma-separated forecast horizons (default 1,4,8).
    #[arg(long, global = true, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,

    /// Random seed for simulation and synthesis.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo replications for critical values.
    #[arg(long, global = true)]
    reps: Option<u32>,

    /// Sample sizes to tabulate critical values at (default 100,200).
    #[arg(long = "critval-n", global = true, value_delimiter = ',')]
    critval_n: Option<Vec<usize>>,

    /// Lagged differences in the threshold regression (default 4).
    #[arg(long, global = true)]
    lags: Option<usize>,

    /// Output directory (default $HPICONV_OUT_DIR or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output formats, a subset of csv,json,svg.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<String>>,

    /// Simulated critical-value table to use instead of the tabulated one.
    #[arg(long, global = true)]
    critvals: Option<PathBuf>,

    /// National growth scenario for forward-looking forecasts.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate the synthetic demonstration dataset.
    Synth,
    /// Validate the data file and emit descriptive statistics.
    Ingest,
    /// Threshold unit-root tests on the regional/national log ratios.
    Unitroot,
    /// Select model orders and persist training fits.
    Fit,
    /// Rolling-origin dynamic forecasts from the training fits.
    Forecast,
    /// RMSFE comparison and encompassing tests of stored forecasts.
    Evaluate,
    /// Simulate Monte-Carlo critical-value tables.
    Critvals,
    /// Render SVG plots from the stored pipeline outputs.
    Report,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.data {
        cfg.data = Some(v.clone());
    }
    if let Some(v) = &cli.national {
        cfg.national = Some(v.clone());
    }
    if let Some(v) = &cli.regions {
        cfg.regions = v.clone();
    }
    if let Some(v) = &cli.train_end {
        cfg.train_end = Some(v.parse().context("--train-end")?);
    }
    if let Some(v) = &cli.sample_end {
        cfg.sample_end = Some(v.parse().context("--sample-end")?);
    }
    if let Some(v) = &cli.horizons {
        cfg.horizons = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.reps {
        cfg.reps = v;
    }
    if let Some(v) = &cli.critval_n {
        cfg.critval_n = v.clone();
    }
    if let Some(v) = cli.lags {
        cfg.mtar_lags = v;
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &cli.format {
        cfg.formats = v.iter().cloned().collect();
    }
    if let Some(v) = &cli.critvals {
        cfg.critvals_file = Some(v.clone());
    }
    if let Some(v) = &cli.scenario {
        cfg.scenario = Some(v.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command, config: &RunConfig, out: &mut OutputSet) -> Result<()> {
    match command {
        Command::Synth => commands::synth::run(config, out).context("synth stage"),
        Command::Ingest => commands::ingest::run(config, out).context("ingest stage"),
        Command::Unitroot => commands::unitroot::run(config, out).context("unitroot stage"),
        Command::Fit => commands::fit::run(config, out).context("fit stage"),
        Command::Forecast => commands::forecast::run(config, out).context("forecast stage"),
        Command::Evaluate => commands::evaluate::run(config, out).context("evaluate stage"),
        Command::Critvals => commands::critvals::run(config, out).context("critvals stage"),
        Command::Report => commands::report::run(config, out).context("report stage"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let meta = RunMeta::new(config.hash(), config.seed);
    let mut out = match OutputSet::new(config.out.clone(), meta) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    match run(cli.command, &config, &mut out) {
        Ok(()) => {
            for path in out.written() {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            out.remove_partial();
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
