//! `casg` command line: gradient estimation, the sensitivity and
//! optimization experiment drivers, data profiles, and evaluation-history
//! import/export.
//!
//! Standard output carries machine-parseable JSON only; diagnostics go to
//! standard error, gated by the `CASG_LOG` environment variable
//! (`error`, `warn`, `info`, `debug`). Exit codes: 0 success, 2 usage or
//! configuration error, 3 numerical failure, 4 partial failure (some runs
//! failed; details in the summary JSON).

// Negated comparisons like `!(x > 0.0)` reject NaN along with out-of-domain
// values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod log;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "casg",
    version,
    about = "Curvature aligned simplex gradients: estimation and benchmarks",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base RNG seed; overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for experiment files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Cap on worker threads; defaults to the logical core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Format of tabular files written by experiments.
    #[arg(long, global = true, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    /// Comma-separated tables (the native format).
    Csv,
    /// Tables wrapped as JSON arrays of row objects.
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a gradient at a point and print the sample set used.
    Estimate(commands::estimate::EstimateArgs),
    /// Run the sensitivity-analysis experiment from a config file.
    Sensitivity(ConfigArgs),
    /// Run the derivative-free-optimization experiment from a config file.
    Dfo(ConfigArgs),
    /// Compute data profiles from a runs table.
    Profile(commands::profile::ProfileArgs),
    /// Validate an evaluation-history CSV and echo a canonical copy.
    HistoryImport(commands::history::ImportArgs),
    /// Sample a problem and export the evaluations as a history CSV.
    HistoryExport(commands::history::ExportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Experiment configuration JSON.
    #[arg(long)]
    config: PathBuf,
}

/// A command failure carrying the documented exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn partial(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    log::init_from_env();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
        {
            log::warn(&format!("thread pool already initialized: {e}"));
        }
    }
    let result = match &cli.command {
        Command::Estimate(args) => commands::estimate::run(args, &cli),
        Command::Sensitivity(args) => commands::experiments::run_sensitivity(args, &cli),
        Command::Dfo(args) => commands::experiments::run_dfo(args, &cli),
        Command::Profile(args) => commands::profile::run(args, &cli),
        Command::HistoryImport(args) => commands::history::run_import(args, &cli),
        Command::HistoryExport(args) => commands::history::run_export(args, &cli),
    };
    match result {
        Ok(stdout_json) => {
            println!("{}", casg::harness::output::render_json(&stdout_json).trim_end());
            ExitCode::SUCCESS
        }
        Err(failure) => {
            log::error(&failure.message);
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
