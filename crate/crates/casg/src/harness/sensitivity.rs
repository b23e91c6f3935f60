//! Sensitivity-analysis driver: per-point mean-squared-error scoring of each
//! gradient estimation method over uniformly sampled domain points.
//!
//! Simplex methods are scored with the exact error decomposition: the design
//! objective evaluated with the reference Hessian at the point. Central
//! differences are scored as their noise variance plus the actual noiseless
//! bias; the global-model gradient as its squared distance to the reference
//! gradient. Setting `mc_trials > 0` switches every method to an empirical
//! Monte-Carlo score with the same noisy evaluation stream structure.

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{cd_estimate, fd_estimate, fd_sample_set};
use crate::ecasg::ecasg_sample_set;
use crate::global_model::{fit_rbf, RbfModel};
use crate::harness::config::{MethodName, SensitivityConfig};
use crate::harness::problems::Problem;
use crate::harness::reference::{reference_gradient, reference_hessian};
use crate::simplex::{mse_monte_carlo, objective, CurvatureSpec, SampleSet, SimplexError};
use crate::util::{median, mix_seed, percentile};

type ReferencePair = Result<(DVector<f64>, DMatrix<f64>), String>;

/// One scored (point, method, step) cell.
#[derive(Debug, Clone)]
pub struct SensitivityRecord {
    pub problem: String,
    pub point_index: usize,
    pub method: MethodName,
    pub h: f64,
    pub mse: f64,
}

/// Per-method summary at its best step size.
#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: MethodName,
    pub best_h: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    /// log2 of this method's median over the baseline method's median.
    pub log2_ratio_vs_baseline: f64,
}

/// One row of the history-size sweep.
#[derive(Debug, Clone)]
pub struct NSweepRecord {
    pub problem: String,
    pub n_points: usize,
    pub method: MethodName,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Full outcome for one problem.
#[derive(Debug, Clone)]
pub struct SensitivityOutcome {
    pub problem: String,
    pub sigma: f64,
    pub records: Vec<SensitivityRecord>,
    pub summaries: Vec<MethodSummary>,
    pub n_sweep: Vec<NSweepRecord>,
    /// Per-point failures, recorded and skipped.
    pub failures: Vec<(usize, MethodName, f64, String)>,
}

fn fit_global_model(
    problem: &Problem,
    sigma: f64,
    n: usize,
    smoothing: f64,
    seed: u64,
) -> Result<RbfModel, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = crate::history::EvaluationHistory::new();
    let noisy_problem = problem.with_sigma(sigma);
    let mut evaluator = noisy_problem.noisy(mix_seed(seed, 1));
    for _ in 0..n {
        let x = problem.sample_domain(&mut rng);
        let y = evaluator.eval(&x).map_err(|e| e.to_string())?;
        history.push(x, y).map_err(|e| e.to_string())?;
    }
    fit_rbf(history.records(), smoothing).map_err(|e| e.to_string())
}

/// Analytic MSE of one method at one point.
#[allow(clippy::too_many_arguments)]
fn score_method(
    method: MethodName,
    problem: &Problem,
    model: Option<&RbfModel>,
    x: &DVector<f64>,
    g_ref: &DVector<f64>,
    h_ref: &DMatrix<f64>,
    sigma: f64,
    h: f64,
    mc_trials: u64,
    seed: u64,
) -> Result<f64, String> {
    let score_spec = CurvatureSpec::new(h_ref.clone(), sigma, h).map_err(|e| e.to_string())?;
    let build_sample = |curvature: &DMatrix<f64>| -> Result<SampleSet, String> {
        let spec = CurvatureSpec::new(curvature.clone(), sigma, h).map_err(|e| e.to_string())?;
        match method {
            MethodName::CasgExact | MethodName::EcasgExact | MethodName::CasgRbf => {
                Ok(ecasg_sample_set(&spec, x).map_err(|e| e.to_string())?.0)
            }
            MethodName::FdExact | MethodName::FdRbf => {
                Ok(fd_sample_set(&spec, x).map_err(|e| e.to_string())?.0)
            }
            _ => unreachable!("simplex methods only"),
        }
    };
    match method {
        MethodName::GlobalGrad => {
            let model = model.ok_or("global model required")?;
            Ok((model.gradient(x) - g_ref).norm_squared())
        }
        MethodName::Cd => {
            let t = h / 2.0;
            if mc_trials > 0 {
                let noisy = problem.with_sigma(sigma);
                let stats = mse_monte_carlo(
                    |rng| {
                        let mut stream = noisy.noisy(rng.next_u64());
                        let mut f = |p: &DVector<f64>| stream.eval(p);
                        cd_estimate(&mut f, x, t)
                            .map(|(g, _)| g)
                            .map_err(|_| SimplexError::NonFiniteInput)
                    },
                    g_ref,
                    mc_trials,
                    seed,
                )
                .map_err(|e| e.to_string())?;
                return Ok(stats.mean);
            }
            let mut noiseless = |p: &DVector<f64>| problem.eval_noiseless(p);
            let (g_clean, _) = cd_estimate(&mut noiseless, x, t).map_err(|e| e.to_string())?;
            let bias = (g_clean - g_ref).norm_squared();
            let noise = x.len() as f64 * sigma * sigma / (2.0 * t * t);
            Ok(bias + noise)
        }
        _ => {
            let curvature = if method.uses_global_model() {
                model.ok_or("global model required")?.hessian(x)
            } else {
                h_ref.clone()
            };
            let sample = build_sample(&curvature)?;
            if mc_trials > 0 {
                let noisy = problem.with_sigma(sigma);
                let stats = mse_monte_carlo(
                    |rng| {
                        let mut stream = noisy.noisy(rng.next_u64());
                        let mut f = |p: &DVector<f64>| stream.eval(p);
                        fd_estimate(&mut f, &sample)
                            .map(|(g, _)| g)
                            .map_err(|_| SimplexError::NonFiniteInput)
                    },
                    g_ref,
                    mc_trials,
                    seed,
                )
                .map_err(|e| e.to_string())?;
                return Ok(stats.mean);
            }
            // Exact decomposition with the reference curvature.
            Ok(objective(&sample.difference_matrix(), &score_spec))
        }
    }
}

/// Runs the sensitivity experiment for one problem.
pub fn sensitivity_run(
    problem: &Problem,
    cfg: &SensitivityConfig,
    seed: u64,
) -> SensitivityOutcome {
    let sigma = cfg.sigma.unwrap_or(problem.sigma());
    let needs_model = cfg.methods.iter().any(|m| m.uses_global_model());
    let mut failures = Vec::new();
    let model = if needs_model {
        match fit_global_model(problem, sigma, cfg.rbf_points, cfg.rbf_smoothing, mix_seed(seed, 101)) {
            Ok(model) => Some(model),
            Err(e) => {
                // Model-driven cells will fail individually below; record
                // the root cause once.
                failures.push((usize::MAX, MethodName::CasgRbf, f64::NAN, e));
                None
            }
        }
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 7));
    let points: Vec<DVector<f64>> = (0..cfg.n_points)
        .map(|_| problem.sample_domain(&mut rng))
        .collect();
    let reference: Vec<ReferencePair> = points
        .par_iter()
        .map(|x| {
            let g = reference_gradient(problem, x).map_err(|e| e.to_string())?;
            let h = reference_hessian(problem, x).map_err(|e| e.to_string())?;
            Ok((g, h))
        })
        .collect();
    let mut records = Vec::new();
    let cells: Vec<(usize, MethodName, f64)> = (0..points.len())
        .flat_map(|pi| {
            cfg.methods
                .iter()
                .flat_map(move |&m| cfg.steps.iter().map(move |&h| (pi, m, h)))
                .collect::<Vec<_>>()
        })
        .collect();
    let scored: Vec<Result<f64, String>> = cells
        .par_iter()
        .map(|&(pi, method, h)| {
            let (g_ref, h_ref) = reference[pi].as_ref().map_err(|e| e.clone())?;
            score_method(
                method,
                problem,
                model.as_ref(),
                &points[pi],
                g_ref,
                h_ref,
                sigma,
                h,
                cfg.mc_trials,
                mix_seed(seed, 1000 + pi as u64),
            )
        })
        .collect();
    for ((pi, method, h), result) in cells.into_iter().zip(scored) {
        match result {
            Ok(mse) => records.push(SensitivityRecord {
                problem: problem.name().to_string(),
                point_index: pi,
                method,
                h,
                mse,
            }),
            Err(e) => failures.push((pi, method, h, e)),
        }
    }
    // Per-method best step by median, then the summary at that step.
    let mut summaries = Vec::new();
    let median_at = |method: MethodName, h: f64| -> Option<f64> {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.method == method && r.h == h)
            .map(|r| r.mse)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(median(&values))
        }
    };
    let best_h = |method: MethodName| -> Option<(f64, f64)> {
        cfg.steps
            .iter()
            .filter_map(|&h| median_at(method, h).map(|m| (h, m)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("non-finite median"))
    };
    let baseline_median = best_h(cfg.ratio_baseline).map(|(_, m)| m);
    for &method in &cfg.methods {
        if let Some((h_star, med)) = best_h(method) {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.method == method && r.h == h_star)
                .map(|r| r.mse)
                .collect();
            summaries.push(MethodSummary {
                method,
                best_h: h_star,
                median: med,
                q25: percentile(&values, 25.0),
                q75: percentile(&values, 75.0),
                log2_ratio_vs_baseline: baseline_median
                    .map(|b| (med / b).log2())
                    .unwrap_or(f64::NAN),
            });
        }
    }
    // History-size sweep for the global-model methods.
    let mut n_sweep = Vec::new();
    if !cfg.n_sweep.is_empty() && needs_model {
        for &n in &cfg.n_sweep {
            let model_n = match fit_global_model(
                problem,
                sigma,
                n,
                cfg.rbf_smoothing,
                mix_seed(seed, 5000 + n as u64),
            ) {
                Ok(m) => m,
                Err(e) => {
                    failures.push((usize::MAX, MethodName::CasgRbf, n as f64, e));
                    continue;
                }
            };
            for &method in cfg.methods.iter().filter(|m| m.uses_global_model()) {
                let mut best: Option<Vec<f64>> = None;
                let mut best_median = f64::INFINITY;
                for &h in &cfg.steps {
                    let values: Vec<f64> = points
                        .iter()
                        .enumerate()
                        .filter_map(|(pi, x)| {
                            let (g_ref, h_ref) = reference[pi].as_ref().ok()?;
                            score_method(
                                method,
                                problem,
                                Some(&model_n),
                                x,
                                g_ref,
                                h_ref,
                                sigma,
                                h,
                                0,
                                mix_seed(seed, 9000 + pi as u64),
                            )
                            .ok()
                        })
                        .collect();
                    if values.is_empty() {
                        continue;
                    }
                    let med = median(&values);
                    if med < best_median {
                        best_median = med;
                        best = Some(values);
                    }
                }
                if let Some(values) = best {
                    n_sweep.push(NSweepRecord {
                        problem: problem.name().to_string(),
                        n_points: n,
                        method,
                        q25: percentile(&values, 25.0),
                        median: median(&values),
                        q75: percentile(&values, 75.0),
                    });
                }
            }
        }
    }
    SensitivityOutcome {
        problem: problem.name().to_string(),
        sigma,
        records,
        summaries,
        n_sweep,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::OdeCoefficients;
    use crate::harness::problems::builtin_problem;

    #[test]
    fn exact_methods_on_a_quadratic() {
        let problem = builtin_problem("quad_ill_d4", &OdeCoefficients::default()).unwrap();
        let cfg = SensitivityConfig {
            problems: vec!["quad_ill_d4".into()],
            methods: vec![MethodName::CasgExact, MethodName::FdExact, MethodName::Cd],
            steps: vec![0.1, 0.01],
            n_points: 10,
            rbf_points: 0,
            ..SensitivityConfig::default()
        };
        let outcome = sensitivity_run(&problem, &cfg, 3);
        assert!(outcome.failures.is_empty());
        assert_eq!(outcome.records.len(), 10 * 3 * 2);
        // Theorem-backed dominance at every point and step.
        for pi in 0..10 {
            for &h in &[0.1, 0.01] {
                let get = |m: MethodName| {
                    outcome
                        .records
                        .iter()
                        .find(|r| r.point_index == pi && r.method == m && r.h == h)
                        .unwrap()
                        .mse
                };
                assert!(get(MethodName::CasgExact) <= get(MethodName::FdExact) + 1e-12);
            }
        }
        // Summaries carry a ratio against the baseline.
        let fd = outcome
            .summaries
            .iter()
            .find(|s| s.method == MethodName::FdExact)
            .unwrap();
        assert!(fd.log2_ratio_vs_baseline >= 0.0);
    }

    #[test]
    fn monte_carlo_agrees_with_analytic_on_a_quadratic() {
        let problem = builtin_problem("quad_well_d4", &OdeCoefficients::default()).unwrap();
        let x = problem.start().clone();
        let sigma = 1e-2;
        let h = 0.05;
        let g_ref = problem.analytic_gradient(&x).unwrap();
        let h_ref = problem.analytic_hessian(&x).unwrap();
        let analytic = score_method(
            MethodName::CasgExact,
            &problem,
            None,
            &x,
            &g_ref,
            &h_ref,
            sigma,
            h,
            0,
            1,
        )
        .unwrap();
        let empirical = score_method(
            MethodName::CasgExact,
            &problem,
            None,
            &x,
            &g_ref,
            &h_ref,
            sigma,
            h,
            60_000,
            1,
        )
        .unwrap();
        // The objective is the exact MSE for quadratics.
        assert!(
            (analytic - empirical).abs() <= 0.05 * analytic,
            "analytic {analytic} vs empirical {empirical}"
        );
    }
}
