//! `casg sensitivity` and `casg dfo`: config-driven experiment drivers.

use serde_json::{json, Value};

use casg::harness::output;
use casg::harness::sensitivity::sensitivity_run;
use casg::harness::toy::toy_sweep;
use casg::harness::{builtin_problem, dfo::dfo_run, ExperimentConfig, Problem};

use crate::commands::{render_table, write_output};
use crate::{Cli, ConfigArgs, Failure};

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::from_path(&args.config)
        .map_err(|e| Failure::config(format!("config {}: {e}", args.config.display())))
}

fn resolve_problems(
    names: &[String],
    config: &ExperimentConfig,
) -> Result<Vec<Problem>, Failure> {
    if names.is_empty() {
        return Err(Failure::config("problem list is empty"));
    }
    names
        .iter()
        .map(|name| {
            builtin_problem(name, &config.ode())
                .ok_or_else(|| Failure::config(format!("unknown problem '{name}'")))
        })
        .collect()
}

/// Formats a noise level for file names (`1e-5`, `0.1`).
fn sigma_tag(sigma: f64) -> String {
    format!("{sigma:e}").replace("e0", "").replace('.', "p")
}

pub fn run_sensitivity(args: &ConfigArgs, cli: &Cli) -> Result<Value, Failure> {
    let config = load_config(args)?;
    let seed = cli.seed.unwrap_or(config.seed);
    let mut written = Vec::new();
    let mut failure_count = 0usize;

    for sweep in &config.toy_sweeps {
        if !(sweep.sigma > 0.0 && sweep.h > 0.0) {
            return Err(Failure::config("toy sweep needs positive sigma and h"));
        }
        let rows = toy_sweep(&sweep.k_values, sweep.sigma, sweep.h)
            .map_err(|e| Failure::numerical(format!("toy sweep '{}': {e}", sweep.name)))?;
        let csv = output::toy_csv(&sweep.name, &rows);
        let (name, contents) = render_table(&format!("toy_{}.csv", sweep.name), &csv, cli.format);
        written.push(write_output(&cli.out, &name, &contents)?);
    }

    if let Some(sens) = &config.sensitivity {
        let problems = resolve_problems(&sens.problems, &config)?;
        if sens.methods.is_empty() {
            return Err(Failure::config("method list is empty"));
        }
        let outcomes: Vec<_> = problems
            .iter()
            .map(|p| {
                crate::log::info(&format!("sensitivity: scoring {}", p.name()));
                sensitivity_run(p, sens, seed)
            })
            .collect();
        failure_count += outcomes.iter().map(|o| o.failures.len()).sum::<usize>();
        let (points_name, points) =
            render_table("sensitivity_points.csv", &output::sensitivity_points_csv(&outcomes), cli.format);
        written.push(write_output(&cli.out, &points_name, &points)?);
        written.push(write_output(
            &cli.out,
            "sensitivity_summary.json",
            &output::render_json(&output::sensitivity_summary_json(&outcomes)),
        )?);
        if outcomes.iter().any(|o| !o.n_sweep.is_empty()) {
            let (name, contents) =
                render_table("sensitivity_nsweep.csv", &output::nsweep_csv(&outcomes), cli.format);
            written.push(write_output(&cli.out, &name, &contents)?);
        }
    } else if config.toy_sweeps.is_empty() {
        return Err(Failure::config(
            "config has neither a sensitivity section nor toy sweeps",
        ));
    }

    let summary = json!({
        "command": "sensitivity",
        "seed": seed,
        "written": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "failures": failure_count,
    });
    if failure_count > 0 {
        // Outputs are on disk; the exit code flags the partial failure.
        println!("{}", output::render_json(&summary).trim_end());
        return Err(Failure::partial(format!(
            "{failure_count} scoring cells failed; see sensitivity_summary.json"
        )));
    }
    Ok(summary)
}

pub fn run_dfo(args: &ConfigArgs, cli: &Cli) -> Result<Value, Failure> {
    let config = load_config(args)?;
    let seed = cli.seed.unwrap_or(config.seed);
    let Some(dfo) = &config.dfo else {
        return Err(Failure::config("config has no dfo section"));
    };
    if dfo.methods.is_empty() {
        return Err(Failure::config("method list is empty"));
    }
    if dfo.steps.is_empty() {
        return Err(Failure::config("step grid is empty"));
    }
    let problems = resolve_problems(&dfo.problems, &config)?;
    let mut written = Vec::new();
    let mut failure_count = 0usize;
    for &sigma in &dfo.noise_levels {
        if !(sigma > 0.0) {
            return Err(Failure::config("noise levels must be positive"));
        }
        crate::log::info(&format!("dfo: racing methods at sigma {sigma:e}"));
        let outcome = dfo_run(&problems, dfo, sigma, seed);
        failure_count += outcome.failures.len();
        let tag = sigma_tag(sigma);
        let (runs_name, runs) =
            render_table(&format!("dfo_runs_sigma_{tag}.csv"), &output::dfo_runs_csv(&outcome), cli.format);
        written.push(write_output(&cli.out, &runs_name, &runs)?);
        written.push(write_output(
            &cli.out,
            &format!("dfo_summary_sigma_{tag}.json"),
            &output::render_json(&output::dfo_summary_json(&outcome)),
        )?);
    }
    let summary = json!({
        "command": "dfo",
        "seed": seed,
        "written": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "failures": failure_count,
    });
    if failure_count > 0 {
        println!("{}", output::render_json(&summary).trim_end());
        return Err(Failure::partial(format!(
            "{failure_count} runs failed; see the dfo summary files"
        )));
    }
    Ok(summary)
}
