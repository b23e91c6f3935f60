//! `casg profile`: data profiles from a previously written runs table.

use clap::Args;
use serde_json::{json, Value};

use casg::harness::output::{parse_runs_csv, profile_csv};
use casg::harness::profile::data_profile;

use crate::commands::{render_table, write_output};
use crate::{Cli, Failure};

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Runs table produced by `casg dfo`.
    #[arg(long)]
    runs: std::path::PathBuf,
    /// Convergence tolerance; repeatable for several profiles.
    #[arg(long, required = true)]
    tau: Vec<f64>,
}

pub fn run(args: &ProfileArgs, cli: &Cli) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(&args.runs)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", args.runs.display())))?;
    let traces = parse_runs_csv(&text).map_err(Failure::config)?;
    let mut written = Vec::new();
    for &tau in &args.tau {
        let curves = data_profile(&traces, tau)
            .map_err(|e| Failure::numerical(format!("profile at tau {tau}: {e}")))?;
        let csv = profile_csv(tau, &curves);
        let tag = format!("{tau:e}").replace('.', "p");
        let (name, contents) =
            render_table(&format!("profile_tau_{tag}.csv"), &csv, cli.format);
        written.push(write_output(&cli.out, &name, &contents)?);
    }
    Ok(json!({
        "command": "profile",
        "runs": args.runs.display().to_string(),
        "taus": args.tau,
        "written": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    }))
}
