//! Derivative-free optimization driver: L-BFGS over noisy function values
//! with pluggable gradient estimation, the random-run hyperparameter
//! protocol, and per-iteration run records.
//!
//! Budgets are measured in simplex-gradient units: total noisy function
//! evaluations divided by the problem dimension. Best-so-far values are
//! tracked with the noiseless objective, which is a metric only and never
//! visible to the optimizer.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::VecDeque;

use crate::baselines::{cd_estimate, fd_estimate, fd_sample_set};
use crate::ecasg::ecasg_sample_set;
use crate::global_model::{framework_step, EstimatorKind, FilterPolicy, FrameworkConfig};
use crate::harness::config::{DfoConfig, MethodName};
use crate::harness::problems::Problem;
use crate::harness::reference::reference_hessian;
use crate::history::EvaluationHistory;
use crate::simplex::CurvatureSpec;
use crate::util::mix_seed;

/// One optimization run: identification plus the per-iteration trace of
/// `(budget_units, best_true_value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub problem: String,
    pub method: String,
    pub h: f64,
    pub seed: u64,
    /// True (noiseless) value at the starting point.
    pub f_start: f64,
    /// Cumulative budget in simplex-gradient units and the best true value
    /// reached, one entry per iteration. Budgets are nondecreasing.
    pub points: Vec<(f64, f64)>,
}

impl RunTrace {
    /// Best value at the end of the run (the start value if no iteration
    /// completed).
    pub fn final_best(&self) -> f64 {
        self.points.last().map_or(self.f_start, |p| p.1)
    }
}

/// Outcome of the full protocol for one noise level.
#[derive(Debug, Clone)]
pub struct DfoOutcome {
    /// Noise level the runs used.
    pub sigma: f64,
    /// Every run, all hyperparameters.
    pub all_runs: Vec<RunTrace>,
    /// The runs at each method's chosen hyperparameter.
    pub chosen_runs: Vec<RunTrace>,
    /// Chosen hyperparameter per (problem, method).
    pub chosen_h: Vec<(String, String, f64)>,
    /// Runs that failed, with the error text.
    pub failures: Vec<(String, String, f64, u64, String)>,
}

struct LbfgsMemory {
    pairs: VecDeque<(DVector<f64>, DVector<f64>)>,
    capacity: usize,
}

impl LbfgsMemory {
    fn new(capacity: usize) -> Self {
        Self {
            pairs: VecDeque::new(),
            capacity,
        }
    }

    fn push(&mut self, s: DVector<f64>, y: DVector<f64>) {
        if s.dot(&y) > 1e-10 * s.norm() * y.norm() {
            if self.pairs.len() == self.capacity {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y));
        }
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Two-loop recursion for the quasi-Newton direction `-H g`.
    fn direction(&self, gradient: &DVector<f64>) -> DVector<f64> {
        let mut q = gradient.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y) in self.pairs.iter().rev() {
            let rho = 1.0 / y.dot(s);
            let alpha = rho * s.dot(&q);
            q -= y * alpha;
            alphas.push((alpha, rho));
        }
        if let Some((s, y)) = self.pairs.back() {
            q *= s.dot(y) / y.dot(y);
        }
        for ((s, y), (alpha, rho)) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let beta = rho * y.dot(&q);
            q += s * (alpha - beta);
        }
        -q
    }
}

/// Gradient estimation within a run.
struct RunEstimator<'p> {
    method: MethodName,
    problem: &'p Problem,
    sigma: f64,
    h: f64,
    history: EvaluationHistory,
    smoothing: f64,
}

impl RunEstimator<'_> {
    /// Estimates the gradient at `x`, returning it with the noisy value
    /// observed at `x` (if any) and the number of evaluations consumed.
    fn estimate(
        &mut self,
        x: &DVector<f64>,
        evaluator: &mut crate::harness::problems::NoisyEvaluator<'_>,
    ) -> Result<(DVector<f64>, Option<f64>), String> {
        match self.method {
            MethodName::CasgExact | MethodName::EcasgExact | MethodName::FdExact => {
                let hessian =
                    reference_hessian(self.problem, x).map_err(|e| e.to_string())?;
                let spec = CurvatureSpec::new(hessian, self.sigma, self.h)
                    .map_err(|e| e.to_string())?;
                let sample = if matches!(self.method, MethodName::FdExact) {
                    fd_sample_set(&spec, x).map_err(|e| e.to_string())?.0
                } else {
                    ecasg_sample_set(&spec, x).map_err(|e| e.to_string())?.0
                };
                let mut f = |p: &DVector<f64>| evaluator.eval(p);
                let (gradient, evals) = fd_estimate(&mut f, &sample).map_err(|e| e.to_string())?;
                let f0 = evals.records()[0].y;
                Ok((gradient, Some(f0)))
            }
            MethodName::Cd => {
                let mut f = |p: &DVector<f64>| evaluator.eval(p);
                let (gradient, _) =
                    cd_estimate(&mut f, x, self.h / 2.0).map_err(|e| e.to_string())?;
                Ok((gradient, None))
            }
            MethodName::CasgRbf | MethodName::FdRbf | MethodName::GlobalGrad => {
                let estimator = match self.method {
                    MethodName::CasgRbf => EstimatorKind::Ecasg,
                    MethodName::FdRbf => EstimatorKind::Fd,
                    _ => EstimatorKind::GlobalGrad,
                };
                let cfg = FrameworkConfig {
                    policy: FilterPolicy::default_for_dim(x.len()),
                    smoothing: self.smoothing,
                    estimator,
                    sigma: self.sigma,
                    h: self.h,
                };
                let mut f = |p: &DVector<f64>| evaluator.eval(p);
                let (gradient, extended) = framework_step(&self.history, &cfg, &mut f, x)
                    .map_err(|e| e.to_string())?;
                // The x0 evaluation leads each simplex stencil.
                let f0 = extended
                    .records()
                    .get(self.history.len())
                    .filter(|r| r.x == *x)
                    .map(|r| r.y);
                self.history = extended;
                Ok((gradient, f0))
            }
        }
    }
}

/// Settings of the noisy L-BFGS loop.
#[derive(Debug, Clone)]
pub struct LbfgsSettings {
    /// Curvature-pair memory.
    pub memory: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Additive relaxation of the acceptance test, in units of sigma.
    pub noise_allowance: f64,
    /// Maximum halvings per line search.
    pub max_backtracks: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            memory: 10,
            armijo_c1: 1e-4,
            noise_allowance: 2.0,
            max_backtracks: 30,
        }
    }
}

/// Runs noisy L-BFGS on one problem with one gradient method and records the
/// trace. `budget_units` bounds total noisy evaluations divided by `d`.
#[allow(clippy::too_many_arguments)]
pub fn lbfgs_run(
    problem: &Problem,
    method: MethodName,
    h: f64,
    sigma: f64,
    budget_units: f64,
    include_init_cost: bool,
    settings: &LbfgsSettings,
    seed: u64,
) -> Result<RunTrace, (RunTrace, String)> {
    let d = problem.dim();
    let noisy_problem = problem.with_sigma(sigma);
    let mut evaluator = noisy_problem.noisy(seed);
    let mut x = problem.start().clone();
    let f_start = problem
        .eval_noiseless(&x)
        .expect("starting point must be evaluable");
    let mut trace = RunTrace {
        problem: problem.name().to_string(),
        method: method.as_str().to_string(),
        h,
        seed,
        f_start,
        points: Vec::new(),
    };
    let mut estimator = RunEstimator {
        method,
        problem: &noisy_problem,
        sigma,
        h,
        history: EvaluationHistory::new(),
        smoothing: 0.1,
    };
    if method.uses_global_model() {
        // Initial global sample: 100 d points in a cube of side two around
        // the start.
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, u64::MAX));
        use rand::Rng;
        for _ in 0..100 * d {
            let point = DVector::from_fn(d, |i, _| x[i] + rng.random_range(-1.0..1.0));
            match evaluator.eval(&point) {
                Ok(y) => {
                    estimator.history.push(point, y).expect("fresh history accepts pushes");
                }
                Err(e) => {
                    return Err((trace, format!("initialization sample failed: {e}")));
                }
            }
        }
    }
    let budget_evals = (budget_units * d as f64).ceil() as u64;
    // When the initialization sample is free, it neither consumes budget nor
    // shifts the reported budgets; when it counts, both happen through the
    // plain evaluation counter.
    let counted = |ev: &crate::harness::problems::NoisyEvaluator<'_>| {
        if method.uses_global_model() && !include_init_cost {
            ev.count().saturating_sub(100 * d as u64)
        } else {
            ev.count()
        }
    };
    let mut best = f_start;
    let mut memory = LbfgsMemory::new(settings.memory);
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let sufficient = settings.noise_allowance * sigma;
    let mut iterations = 0usize;
    while counted(&evaluator) < budget_evals && iterations < 100_000 {
        iterations += 1;
        let (gradient, f0_noisy) = match estimator.estimate(&x, &mut evaluator) {
            Ok(v) => v,
            Err(e) => return Err((trace, e)),
        };
        if !gradient.iter().all(|v| v.is_finite()) {
            return Err((trace, "gradient estimate is not finite".into()));
        }
        if let Some((px, pg)) = prev.take() {
            memory.push(&x - &px, &gradient - &pg);
        }
        let mut direction = memory.direction(&gradient);
        let mut slope = gradient.dot(&direction);
        if !(slope < 0.0) {
            memory.clear();
            direction = -&gradient;
            slope = gradient.dot(&direction);
        }
        let f_current = match f0_noisy {
            Some(v) => v,
            None => match evaluator.eval(&x) {
                Ok(v) => v,
                Err(e) => return Err((trace, e.to_string())),
            },
        };
        // Backtracking with an additive noise allowance on the Armijo test.
        let gnorm = gradient.norm();
        let mut alpha = if memory.pairs.is_empty() {
            (1.0 / gnorm.max(1e-12)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..settings.max_backtracks {
            let candidate = &x + &direction * alpha;
            let f_candidate = match evaluator.eval(&candidate) {
                Ok(v) => v,
                Err(_) => {
                    alpha *= 0.5;
                    continue;
                }
            };
            if f_candidate <= f_current + settings.armijo_c1 * alpha * slope + sufficient {
                prev = Some((x.clone(), gradient.clone()));
                x = candidate;
                accepted = true;
                break;
            }
            alpha *= 0.5;
            if counted(&evaluator) >= budget_evals {
                break;
            }
        }
        if !accepted {
            memory.clear();
            prev = None;
        }
        if let Ok(true_value) = problem.eval_noiseless(&x) {
            best = best.min(true_value);
        }
        let budget_now = counted(&evaluator) as f64 / d as f64;
        trace.points.push((budget_now, best));
        if !accepted && memory.pairs.is_empty() && gnorm <= 1e-14 {
            break;
        }
    }
    Ok(trace)
}

/// Runs the full protocol for one noise level: for every problem, method,
/// and hyperparameter, `runs_per_step` seeded runs; the chosen
/// hyperparameter is the one whose single best run achieved the lowest
/// value.
pub fn dfo_run(
    problems: &[Problem],
    cfg: &DfoConfig,
    sigma: f64,
    seed: u64,
) -> DfoOutcome {
    let settings = LbfgsSettings::default();
    let mut tasks = Vec::new();
    for (pi, problem) in problems.iter().enumerate() {
        for (mi, &method) in cfg.methods.iter().enumerate() {
            for (hi, &h) in cfg.steps.iter().enumerate() {
                for run in 0..cfg.runs_per_step {
                    let task_id = ((pi * cfg.methods.len() + mi) * cfg.steps.len() + hi)
                        * cfg.runs_per_step
                        + run;
                    tasks.push((problem, method, h, mix_seed(seed, task_id as u64)));
                }
            }
        }
    }
    let results: Vec<Result<RunTrace, (RunTrace, String)>> = tasks
        .par_iter()
        .map(|(problem, method, h, run_seed)| {
            lbfgs_run(
                problem,
                *method,
                *h,
                sigma,
                cfg.budget_simplex_gradients,
                cfg.include_init_cost,
                &settings,
                *run_seed,
            )
        })
        .collect();
    let mut all_runs = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(trace) => all_runs.push(trace),
            Err((trace, error)) => {
                failures.push((
                    trace.problem.clone(),
                    trace.method.clone(),
                    trace.h,
                    trace.seed,
                    error,
                ));
                all_runs.push(trace);
            }
        }
    }
    // Hyperparameter choice: the h whose best single run went lowest.
    let mut chosen_runs = Vec::new();
    let mut chosen_h = Vec::new();
    for problem in problems {
        for &method in &cfg.methods {
            let candidates: Vec<&RunTrace> = all_runs
                .iter()
                .filter(|r| r.problem == problem.name() && r.method == method.as_str())
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let best = candidates
                .iter()
                .min_by(|a, b| {
                    a.final_best()
                        .partial_cmp(&b.final_best())
                        .expect("non-finite best value")
                })
                .expect("nonempty candidates");
            let h_star = best.h;
            chosen_h.push((
                problem.name().to_string(),
                method.as_str().to_string(),
                h_star,
            ));
            chosen_runs.extend(candidates.into_iter().filter(|r| r.h == h_star).cloned());
        }
    }
    DfoOutcome {
        sigma,
        all_runs,
        chosen_runs,
        chosen_h,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::OdeCoefficients;
    use crate::harness::problems::builtin_problem;

    #[test]
    fn lbfgs_solves_a_noiseless_quadratic_quickly() {
        let problem = builtin_problem("quad_well_d4", &OdeCoefficients::default()).unwrap();
        // Effectively noiseless; sigma must stay positive for the designs.
        let trace = lbfgs_run(
            &problem,
            MethodName::CasgExact,
            0.01,
            1e-12,
            60.0,
            false,
            &LbfgsSettings::default(),
            3,
        )
        .unwrap();
        let reached = trace
            .points
            .iter()
            .take(50)
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min);
        assert!(
            reached <= 1e-10,
            "did not reach the minimum: best {reached} of start {}",
            trace.f_start
        );
    }

    #[test]
    fn budget_accounting_is_exact_for_simplex_methods() {
        let problem = builtin_problem("quad_well_d4", &OdeCoefficients::default()).unwrap();
        let trace = lbfgs_run(
            &problem,
            MethodName::FdExact,
            0.01,
            1e-5,
            10.0,
            false,
            &LbfgsSettings {
                max_backtracks: 0,
                ..LbfgsSettings::default()
            },
            5,
        )
        .unwrap();
        // With line search disabled every iteration consumes exactly d + 1
        // evaluations plus one value re-evaluation... the value reuse comes
        // from the stencil, so it is exactly (d + 1) / d units per iteration.
        let d = 4.0;
        for (i, (budget, _)) in trace.points.iter().enumerate() {
            let expect = (i as f64 + 1.0) * (d + 1.0) / d;
            assert!(
                (budget - expect).abs() < 1e-12,
                "iteration {i}: budget {budget} vs {expect}"
            );
        }
    }

    #[test]
    fn cd_budget_is_two_units_per_gradient() {
        let problem = builtin_problem("quad_well_d4", &OdeCoefficients::default()).unwrap();
        let trace = lbfgs_run(
            &problem,
            MethodName::Cd,
            0.01,
            1e-5,
            8.0,
            false,
            &LbfgsSettings {
                max_backtracks: 0,
                ..LbfgsSettings::default()
            },
            5,
        )
        .unwrap();
        // 2d for the stencil plus one for the value at x: (2d + 1) / d.
        let d = 4.0;
        let first = trace.points[0].0;
        assert!((first - (2.0 * d + 1.0) / d).abs() < 1e-12);
    }

    #[test]
    fn model_driven_run_and_init_cost_accounting() {
        let problem = builtin_problem("quad_well_d4", &OdeCoefficients::default()).unwrap();
        let free = lbfgs_run(
            &problem,
            MethodName::CasgRbf,
            0.05,
            1e-4,
            30.0,
            false,
            &LbfgsSettings::default(),
            21,
        )
        .unwrap();
        assert!(free.points.last().unwrap().1 < free.f_start);
        // First iteration: d + 1 stencil evaluations, the initialization
        // sample is free.
        assert!(free.points[0].0 <= (4.0 + 1.0) / 4.0 + 1.0);
        let paid = lbfgs_run(
            &problem,
            MethodName::CasgRbf,
            0.05,
            1e-4,
            130.0,
            true,
            &LbfgsSettings::default(),
            21,
        )
        .unwrap();
        // Counting the 100 d initialization points shifts every budget by
        // 100 units.
        assert!(paid.points[0].0 >= 100.0);
        assert!((paid.points[0].0 - 100.0 - free.points[0].0).abs() < 1e-9);

        let global = lbfgs_run(
            &problem,
            MethodName::GlobalGrad,
            0.05,
            1e-4,
            15.0,
            false,
            &LbfgsSettings::default(),
            22,
        )
        .unwrap();
        assert!(global.points.last().unwrap().1 < global.f_start);
    }

    #[test]
    fn traces_are_deterministic() {
        let problem = builtin_problem("rosenbrock_d4", &OdeCoefficients::default()).unwrap();
        let run = || {
            lbfgs_run(
                &problem,
                MethodName::CasgExact,
                0.1,
                1e-3,
                20.0,
                false,
                &LbfgsSettings::default(),
                11,
            )
            .unwrap()
        };
        let trace = run();
        assert_eq!(trace, run());
        // Budgets never decrease across iterations.
        for w in trace.points.windows(2) {
            assert!(w[1].0 >= w[0].0);
        }
    }
}
