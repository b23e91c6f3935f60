//! Deterministic CSV and JSON renderings of experiment outcomes. All floats
//! use the canonical 17-significant-digit format, rows are emitted in a
//! fixed order, and JSON objects use sorted keys, so byte-identical reruns
//! are guaranteed for identical inputs.

use serde_json::{json, Map, Value};

use crate::harness::dfo::{DfoOutcome, RunTrace};
use crate::harness::profile::ProfileCurve;
use crate::harness::sensitivity::SensitivityOutcome;
use crate::harness::toy::ToyRow;
use crate::util::fmt_f64;

/// Per-point sensitivity table: one row per (point, method, step).
pub fn sensitivity_points_csv(outcomes: &[SensitivityOutcome]) -> String {
    let mut out = String::from("problem,point_index,method,h,mse\n");
    for outcome in outcomes {
        for r in &outcome.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.problem,
                r.point_index,
                r.method.as_str(),
                fmt_f64(r.h),
                fmt_f64(r.mse)
            ));
        }
    }
    out
}

/// Summary JSON: per problem and method, the best step and the
/// median/quartile errors plus the log2 ratio against the baseline method.
pub fn sensitivity_summary_json(outcomes: &[SensitivityOutcome]) -> Value {
    let mut problems = Map::new();
    for outcome in outcomes {
        let mut methods = Map::new();
        for s in &outcome.summaries {
            methods.insert(
                s.method.as_str().to_string(),
                json!({
                    "best_h": s.best_h,
                    "median_mse": s.median,
                    "q25": s.q25,
                    "q75": s.q75,
                    "log2_ratio_vs_baseline": s.log2_ratio_vs_baseline,
                }),
            );
        }
        let failures: Vec<Value> = outcome
            .failures
            .iter()
            .map(|(pi, m, h, e)| json!({"point": pi, "method": m.as_str(), "h": h, "error": e}))
            .collect();
        problems.insert(
            outcome.problem.clone(),
            json!({
                "sigma": outcome.sigma,
                "methods": Value::Object(methods),
                "failures": failures,
            }),
        );
    }
    Value::Object(problems)
}

/// History-size sweep table.
pub fn nsweep_csv(outcomes: &[SensitivityOutcome]) -> String {
    let mut out = String::from("problem,n_points,method,q25,median,q75\n");
    for outcome in outcomes {
        for r in &outcome.n_sweep {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.problem,
                r.n_points,
                r.method.as_str(),
                fmt_f64(r.q25),
                fmt_f64(r.median),
                fmt_f64(r.q75)
            ));
        }
    }
    out
}

/// Toy conditioning sweep table.
pub fn toy_csv(name: &str, rows: &[ToyRow]) -> String {
    let mut out = String::from(
        "sweep,k,casg_objective,fd_objective,cd_noise_error,casg_approx_error,fd_over_casg\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            name,
            fmt_f64(r.k),
            fmt_f64(r.casg_objective),
            fmt_f64(r.fd_objective),
            fmt_f64(r.cd_noise_error),
            fmt_f64(r.casg_approx_error),
            fmt_f64(r.fd_objective / r.casg_objective)
        ));
    }
    out
}

/// Optimization run table: one row per recorded iteration of the chosen
/// hyperparameter runs. The starting value is repeated per row so the table
/// alone suffices to rebuild data profiles.
pub fn dfo_runs_csv(outcome: &DfoOutcome) -> String {
    let mut out = String::from("problem,method,h,seed,iteration,budget_units,best_value,f_start\n");
    for run in &outcome.chosen_runs {
        for (i, (budget, best)) in run.points.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                run.problem,
                run.method,
                fmt_f64(run.h),
                run.seed,
                i + 1,
                fmt_f64(*budget),
                fmt_f64(*best),
                fmt_f64(run.f_start)
            ));
        }
    }
    out
}

/// Parses a runs table back into traces, grouped by (problem, method, h,
/// seed) in first-appearance order.
pub fn parse_runs_csv(text: &str) -> Result<Vec<RunTrace>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty runs table")?;
    if header != "problem,method,h,seed,iteration,budget_units,best_value,f_start" {
        return Err(format!("unexpected runs header: {header}"));
    }
    let mut traces: Vec<RunTrace> = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(format!("line {}: expected 8 fields", no + 2));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", no + 2));
        let h = parse_f(fields[2])?;
        let seed: u64 = fields[3]
            .parse()
            .map_err(|e| format!("line {}: {e}", no + 2))?;
        let budget = parse_f(fields[5])?;
        let best = parse_f(fields[6])?;
        let f_start = parse_f(fields[7])?;
        let key_matches = |t: &RunTrace| {
            t.problem == fields[0] && t.method == fields[1] && t.h == h && t.seed == seed
        };
        if let Some(trace) = traces.iter_mut().find(|t| key_matches(t)) {
            trace.points.push((budget, best));
        } else {
            traces.push(RunTrace {
                problem: fields[0].to_string(),
                method: fields[1].to_string(),
                h,
                seed,
                f_start,
                points: vec![(budget, best)],
            });
        }
    }
    Ok(traces)
}

/// Optimization summary JSON: chosen hyperparameters, per-run final values,
/// and failures.
pub fn dfo_summary_json(outcome: &DfoOutcome) -> Value {
    let mut chosen = Map::new();
    for (problem, method, h) in &outcome.chosen_h {
        chosen
            .entry(problem.clone())
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("object entry")
            .insert(method.clone(), json!(h));
    }
    let mut finals = Map::new();
    for run in &outcome.chosen_runs {
        let key = format!("{}/{}", run.problem, run.method);
        finals
            .entry(key)
            .or_insert_with(|| Value::Array(vec![]))
            .as_array_mut()
            .expect("array entry")
            .push(json!({"seed": run.seed, "f_start": run.f_start, "best": run.final_best()}));
    }
    let failures: Vec<Value> = outcome
        .failures
        .iter()
        .map(|(p, m, h, seed, e)| json!({"problem": p, "method": m, "h": h, "seed": seed, "error": e}))
        .collect();
    json!({
        "sigma": outcome.sigma,
        "chosen_h": Value::Object(chosen),
        "runs": Value::Object(finals),
        "failures": failures,
    })
}

/// Data-profile table: one row per (method, budget).
pub fn profile_csv(tau: f64, curves: &[ProfileCurve]) -> String {
    let mut out = String::from("method,tau,budget_units,fraction\n");
    for curve in curves {
        for (budget, fraction) in &curve.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                curve.method,
                fmt_f64(tau),
                fmt_f64(*budget),
                fmt_f64(*fraction)
            ));
        }
    }
    out
}

/// Canonical pretty JSON with a trailing newline.
pub fn render_json(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json rendering cannot fail");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::dfo::RunTrace;

    #[test]
    fn dfo_tables_are_stable() {
        let outcome = DfoOutcome {
            sigma: 1e-5,
            all_runs: vec![],
            chosen_runs: vec![RunTrace {
                problem: "p".into(),
                method: "casg_exact".into(),
                h: 0.1,
                seed: 3,
                f_start: 1.0,
                points: vec![(1.25, 0.5), (2.5, 0.25)],
            }],
            chosen_h: vec![("p".into(), "casg_exact".into(), 0.1)],
            failures: vec![],
        };
        let a = dfo_runs_csv(&outcome);
        let b = dfo_runs_csv(&outcome);
        assert_eq!(a, b);
        assert!(a.starts_with("problem,method,h,seed,iteration,budget_units,best_value,f_start\n"));
        assert_eq!(a.lines().count(), 3);
        let summary = render_json(&dfo_summary_json(&outcome));
        assert!(summary.contains("\"chosen_h\""));
        // The table round-trips into traces.
        let traces = parse_runs_csv(&a).unwrap();
        assert_eq!(traces, outcome.chosen_runs);
    }
}
