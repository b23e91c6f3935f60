//! `casg estimate`: one gradient estimate at one point, printed as JSON with
//! the sample set that produced it.

use clap::{Args, ValueEnum};
use nalgebra::DVector;
use serde_json::{json, Value};

use casg::baselines::{cd_estimate, fd_estimate, fd_sample_set};
use casg::ecasg::ecasg_sample_set;
use casg::global_model::fit_rbf;
use casg::harness::reference::reference_hessian;
use casg::harness::{builtin_problem, ExperimentConfig};
use casg::history::EvaluationHistory;
use casg::simplex::{CurvatureSpec, SampleSet};
use casg::solver::casg_sample_set;

use crate::commands::parse_point;
use crate::{Cli, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateMethod {
    /// Curvature aligned simplex gradient (power-of-two dimension).
    Casg,
    /// Extended CASG, any dimension.
    Ecasg,
    /// Objective-optimal forward differences.
    Fd,
    /// Central differences with difference-vector length equal to the step.
    Cd,
    /// Gradient of the global model fitted to a history file.
    Global,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Gradient estimation method.
    #[arg(long, value_enum)]
    method: EstimateMethod,
    /// Built-in problem name (for example `quad_k`, `ackley_d8`, `colon_ode`).
    #[arg(long, conflicts_with = "history")]
    problem: Option<String>,
    /// Conditioning parameter for the `quad_k` toy problem.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Evaluation-history CSV; curvature comes from the fitted global model
    /// and no fresh evaluations are made.
    #[arg(long)]
    history: Option<std::path::PathBuf>,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: f64,
    /// Sample-radius bound (spectral-norm cap on the difference matrix).
    #[arg(long)]
    h: f64,
    /// Point at which to estimate, as comma-separated coordinates; defaults
    /// to the problem's starting point.
    #[arg(long, allow_hyphen_values = true)]
    at: Option<String>,
    /// Kernel ridge when fitting a model from a history file.
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
    /// Experiment config (read for the ODE coefficients).
    #[arg(long)]
    config: Option<std::path::PathBuf>,
}

fn sample_set_json(sample: &SampleSet) -> Value {
    json!({
        "base": sample.base().as_slice(),
        "points": sample.points().iter().map(|p| p.as_slice().to_vec()).collect::<Vec<_>>(),
    })
}

pub fn run(args: &EstimateArgs, cli: &Cli) -> Result<Value, Failure> {
    if !(args.sigma > 0.0) {
        return Err(Failure::config("--sigma must be positive"));
    }
    if !(args.h > 0.0) {
        return Err(Failure::config("--h must be positive"));
    }
    if let Some(path) = &args.history {
        return run_from_history(args, path);
    }
    let Some(problem_name) = &args.problem else {
        return Err(Failure::config("either --problem or --history is required"));
    };
    let config = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)
            .map_err(|e| Failure::config(format!("bad config: {e}")))?,
        None => ExperimentConfig::default(),
    };
    let lookup_name = if problem_name == "quad_k" {
        let k = args
            .k
            .ok_or_else(|| Failure::config("--k is required with --problem quad_k"))?;
        format!("quad_k_{k}")
    } else {
        problem_name.clone()
    };
    let problem = builtin_problem(&lookup_name, &config.ode())
        .ok_or_else(|| Failure::config(format!("unknown problem '{problem_name}'")))?
        .with_sigma(args.sigma);
    let x0 = match &args.at {
        Some(text) => parse_point(text)?,
        None => problem.start().clone(),
    };
    if x0.len() != problem.dim() {
        return Err(Failure::config(format!(
            "point has {} coordinates but {} has dimension {}",
            x0.len(),
            problem.name(),
            problem.dim()
        )));
    }
    let seed = cli.seed.unwrap_or(0);
    let mut evaluator = problem.noisy(seed);
    let mut f = |p: &DVector<f64>| evaluator.eval(p);
    let (gradient, sample, objective_value, history): (
        DVector<f64>,
        Option<SampleSet>,
        Option<f64>,
        EvaluationHistory,
    ) = match args.method {
        EstimateMethod::Cd => {
            let (g, hist) = cd_estimate(&mut f, &x0, args.h / 2.0)
                .map_err(|e| Failure::numerical(format!("central differences failed: {e}")))?;
            (g, None, None, hist)
        }
        EstimateMethod::Global => {
            return Err(Failure::config(
                "--method global requires --history (the model is its own gradient source)",
            ));
        }
        method => {
            let hessian = reference_hessian(&problem, &x0)
                .map_err(|e| Failure::numerical(format!("curvature estimation failed: {e}")))?;
            let spec = CurvatureSpec::new(hessian, args.sigma, args.h)
                .map_err(|e| Failure::numerical(format!("curvature spec: {e}")))?;
            let (sample, objective_value) = match method {
                EstimateMethod::Casg => {
                    let (sample, result) = casg_sample_set(&spec, &x0)
                        .map_err(|e| Failure::numerical(format!("sample-set construction: {e}")))?;
                    (sample, result.objective_value)
                }
                EstimateMethod::Ecasg => ecasg_sample_set(&spec, &x0)
                    .map_err(|e| Failure::numerical(format!("sample-set construction: {e}")))?,
                EstimateMethod::Fd => {
                    let (sample, _) = fd_sample_set(&spec, &x0)
                        .map_err(|e| Failure::numerical(format!("sample-set construction: {e}")))?;
                    let obj = casg::simplex::objective(&sample.difference_matrix(), &spec);
                    (sample, obj)
                }
                _ => unreachable!(),
            };
            let (g, hist) = fd_estimate(&mut f, &sample)
                .map_err(|e| Failure::numerical(format!("gradient estimation: {e}")))?;
            (g, Some(sample), Some(objective_value), hist)
        }
    };
    Ok(json!({
        "method": format!("{:?}", args.method).to_lowercase(),
        "problem": problem.name(),
        "at": x0.as_slice(),
        "sigma": args.sigma,
        "h": args.h,
        "seed": seed,
        "gradient": gradient.as_slice(),
        "sample_set": sample.as_ref().map(sample_set_json),
        "objective_value": objective_value,
        "evaluations": history.len(),
    }))
}

fn run_from_history(args: &EstimateArgs, path: &std::path::Path) -> Result<Value, Failure> {
    let file = std::fs::File::open(path)
        .map_err(|e| Failure::config(format!("cannot open {}: {e}", path.display())))?;
    let history = EvaluationHistory::read_csv(std::io::BufReader::new(file))
        .map_err(|e| Failure::config(format!("bad history file: {e}")))?;
    let Some(dim) = history.dim() else {
        return Err(Failure::config("history file has no records"));
    };
    let x0 = match &args.at {
        Some(text) => parse_point(text)?,
        None => return Err(Failure::config("--at is required with --history")),
    };
    if x0.len() != dim {
        return Err(Failure::config(format!(
            "point has {} coordinates but the history has dimension {dim}",
            x0.len()
        )));
    }
    let model = fit_rbf(history.records(), args.smoothing)
        .map_err(|e| Failure::numerical(format!("model fit failed: {e}")))?;
    let model_gradient = model.gradient(&x0);
    let (sample, objective_value) = match args.method {
        EstimateMethod::Global => (None, None),
        method => {
            let spec = CurvatureSpec::new(model.hessian(&x0), args.sigma, args.h)
                .map_err(|e| Failure::numerical(format!("curvature spec: {e}")))?;
            let (sample, obj) = match method {
                EstimateMethod::Casg => {
                    let (s, r) = casg_sample_set(&spec, &x0)
                        .map_err(|e| Failure::numerical(format!("sample-set construction: {e}")))?;
                    (s, r.objective_value)
                }
                EstimateMethod::Ecasg => ecasg_sample_set(&spec, &x0)
                    .map_err(|e| Failure::numerical(format!("sample-set construction: {e}")))?,
                EstimateMethod::Fd => {
                    let (s, _) = fd_sample_set(&spec, &x0)
                        .map_err(|e| Failure::numerical(format!("sample-set construction: {e}")))?;
                    let obj = casg::simplex::objective(&s.difference_matrix(), &spec);
                    (s, obj)
                }
                EstimateMethod::Cd => {
                    return Err(Failure::config(
                        "--method cd needs a live problem, not a history file",
                    ))
                }
                EstimateMethod::Global => unreachable!(),
            };
            (Some(sample), Some(obj))
        }
    };
    Ok(json!({
        "method": format!("{:?}", args.method).to_lowercase(),
        "history": path.display().to_string(),
        "at": x0.as_slice(),
        "sigma": args.sigma,
        "h": args.h,
        "gradient": model_gradient.as_slice(),
        "sample_set": sample.as_ref().map(sample_set_json),
        "objective_value": objective_value,
        "evaluations": 0,
        "note": "gradient differentiates the fitted model; evaluate sample_set to refresh it",
    }))
}
