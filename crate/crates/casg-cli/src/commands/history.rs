//! `casg history-import` / `casg history-export`: evaluation-history CSV
//! validation and generation.

use clap::Args;
use serde_json::{json, Value};

use casg::harness::{builtin_problem, ExperimentConfig};
use casg::history::EvaluationHistory;

use crate::commands::write_output;
use crate::{Cli, Failure};

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// History CSV to validate.
    #[arg(long)]
    input: std::path::PathBuf,
    /// Optional canonicalized copy written under the output directory.
    #[arg(long)]
    canonical: Option<String>,
}

pub fn run_import(args: &ImportArgs, cli: &Cli) -> Result<Value, Failure> {
    let file = std::fs::File::open(&args.input)
        .map_err(|e| Failure::config(format!("cannot open {}: {e}", args.input.display())))?;
    let history = EvaluationHistory::read_csv(std::io::BufReader::new(file))
        .map_err(|e| Failure::config(format!("invalid history: {e}")))?;
    let mut written = Vec::new();
    if let Some(name) = &args.canonical {
        written.push(write_output(&cli.out, name, &history.to_csv_string())?);
    }
    let (y_min, y_max) = history
        .records()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.y), hi.max(r.y))
        });
    Ok(json!({
        "command": "history-import",
        "input": args.input.display().to_string(),
        "records": history.len(),
        "dim": history.dim(),
        "y_min": if history.is_empty() { Value::Null } else { json!(y_min) },
        "y_max": if history.is_empty() { Value::Null } else { json!(y_max) },
        "written": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    }))
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Built-in problem to sample.
    #[arg(long)]
    problem: String,
    /// Number of uniform domain samples.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Noise standard deviation; defaults to the problem's own level.
    #[arg(long)]
    sigma: Option<f64>,
    /// File name under the output directory.
    #[arg(long, default_value = "history.csv")]
    name: String,
    /// Experiment config (read for the ODE coefficients).
    #[arg(long)]
    config: Option<std::path::PathBuf>,
}

pub fn run_export(args: &ExportArgs, cli: &Cli) -> Result<Value, Failure> {
    let config = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)
            .map_err(|e| Failure::config(format!("bad config: {e}")))?,
        None => ExperimentConfig::default(),
    };
    let mut problem = builtin_problem(&args.problem, &config.ode())
        .ok_or_else(|| Failure::config(format!("unknown problem '{}'", args.problem)))?;
    if let Some(sigma) = args.sigma {
        if !(sigma >= 0.0) {
            return Err(Failure::config("--sigma must be nonnegative"));
        }
        problem = problem.with_sigma(sigma);
    }
    if args.n == 0 {
        return Err(Failure::config("--n must be positive"));
    }
    let seed = cli.seed.unwrap_or(config.seed);
    let mut evaluator = problem.noisy(casg::util::mix_seed(seed, 1));
    let mut history = EvaluationHistory::new();
    for x in problem.sample_domain_seeded(seed, args.n) {
        let y = evaluator
            .eval(&x)
            .map_err(|e| Failure::numerical(format!("evaluation failed: {e}")))?;
        history
            .push(x, y)
            .map_err(|e| Failure::numerical(format!("history bookkeeping: {e}")))?;
    }
    let path = write_output(&cli.out, &args.name, &history.to_csv_string())?;
    Ok(json!({
        "command": "history-export",
        "problem": problem.name(),
        "records": history.len(),
        "sigma": problem.sigma(),
        "seed": seed,
        "written": [path.display().to_string()],
    }))
}
