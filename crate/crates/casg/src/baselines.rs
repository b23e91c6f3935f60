//! Reference gradient estimators: objective-optimal forward differences and
//! fixed-step central differences.
//!
//! "Optimal" forward differences here means the design objective minimized
//! over diagonal positive difference matrices with the radius cap: the
//! separable per-coordinate problem `min 1/4 t^2 H_ii^2 + 2 sigma^2 / t^2`
//! capped at `h`. For non-diagonal Hessians this optimizes the separable
//! surrogate built from the diagonal while experiments always score the
//! resulting design with the full objective.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::history::EvaluationHistory;
use crate::simplex::{simplex_gradient, CurvatureSpec, SampleSet, SimplexError};

/// A single function evaluation failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    /// The value at the queried point is NaN or infinite.
    #[error("objective value is not finite at the queried point")]
    NonFiniteValue,
    /// A simulated trajectory left the finite range.
    #[error("trajectory state became non-finite after {steps} steps")]
    NonFiniteState { steps: usize },
}

/// Errors from baseline estimators.
#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("history bookkeeping failed: {0}")]
    History(#[from] crate::history::HistoryError),
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("step size must be positive")]
    NonPositiveStep,
}

/// Callback signature for noisy black-box evaluations.
pub type NoisyFn<'a> = dyn FnMut(&DVector<f64>) -> Result<f64, EvalError> + 'a;

/// Per-coordinate forward-difference step lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSteps {
    /// Positive step lengths, one per coordinate, each at most `h`.
    pub t: DVector<f64>,
}

/// Forward-difference sample set minimizing the separable objective: steps
/// `t_i = min(h, (8 sigma^2 / H_ii^2)^{1/4})`, with `t_i = h` where the
/// diagonal curvature vanishes.
pub fn fd_sample_set(
    spec: &CurvatureSpec,
    x0: &DVector<f64>,
) -> Result<(SampleSet, FdSteps), EstimateError> {
    let d = spec.dim();
    if x0.len() != d || !x0.iter().all(|v| v.is_finite()) {
        return Err(EstimateError::NonFiniteInput);
    }
    if spec.sigma() <= 0.0 {
        return Err(EstimateError::NonPositiveStep);
    }
    let sigma = spec.sigma();
    let h = spec.h();
    let t = DVector::from_fn(d, |i, _| {
        let hii = spec.hessian()[(i, i)];
        if hii == 0.0 {
            h
        } else {
            (8.0 * sigma * sigma / (hii * hii)).powf(0.25).min(h)
        }
    });
    let s = crate::simplex::DifferenceMatrix::new(DMatrix::from_diagonal(&t));
    let sample = SampleSet::from_difference_matrix(x0.clone(), &s);
    Ok((sample, FdSteps { t }))
}

/// Central-difference gradient with per-side offsets `h_step`:
/// `g_i = (f(x0 + h e_i) - f(x0 - h e_i)) / (2 h)`. Uses exactly `2 d`
/// evaluations, all recorded in the returned history.
pub fn cd_estimate(
    f: &mut NoisyFn<'_>,
    x0: &DVector<f64>,
    h_step: f64,
) -> Result<(DVector<f64>, EvaluationHistory), EstimateError> {
    if !(h_step > 0.0) || !h_step.is_finite() {
        return Err(EstimateError::NonPositiveStep);
    }
    let d = x0.len();
    let mut history = EvaluationHistory::new();
    let mut grad = DVector::zeros(d);
    for i in 0..d {
        let mut plus = x0.clone();
        plus[i] += h_step;
        let mut minus = x0.clone();
        minus[i] -= h_step;
        let fp = f(&plus)?;
        history.push(plus, fp)?;
        let fm = f(&minus)?;
        history.push(minus, fm)?;
        grad[i] = (fp - fm) / (2.0 * h_step);
    }
    Ok((grad, history))
}

/// Simplex-gradient estimate over an arbitrary sample set: evaluates all
/// `d + 1` points once (base first), forms the difference vector, and solves
/// for the gradient.
pub fn fd_estimate(
    f: &mut NoisyFn<'_>,
    sample: &SampleSet,
) -> Result<(DVector<f64>, EvaluationHistory), EstimateError> {
    let d = sample.dim();
    let mut history = EvaluationHistory::new();
    let f0 = f(sample.base())?;
    history.push(sample.base().clone(), f0)?;
    let mut delta = DVector::zeros(d);
    for (i, point) in sample.points().iter().enumerate() {
        let fi = f(point)?;
        history.push(point.clone(), fi)?;
        delta[i] = fi - f0;
    }
    let grad = simplex_gradient(&sample.difference_matrix(), &delta)?;
    Ok((grad, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn noiseless<'a>(
        f: impl Fn(&DVector<f64>) -> f64 + 'a,
    ) -> impl FnMut(&DVector<f64>) -> Result<f64, EvalError> + 'a {
        move |x| Ok(f(x))
    }

    #[test]
    fn fd_steps_match_golden_section() {
        // Golden-section minimization of the per-coordinate objective is the
        // independent oracle for the closed-form step.
        let sigma = 0.1;
        let h = 1.0;
        let spec = CurvatureSpec::new(dmatrix![1.0, 0.0; 0.0, 4.0], sigma, h).unwrap();
        let (_, steps) = fd_sample_set(&spec, &dvector![0.0, 0.0]).unwrap();
        let per_coord = |t: f64, hii: f64| 0.25 * t * t * hii * hii + 2.0 * sigma * sigma / (t * t);
        for (i, hii) in [1.0, 4.0].into_iter().enumerate() {
            let golden = golden_section(|t| per_coord(t, hii), 1e-6, h, 1e-10);
            assert!(
                (per_coord(steps.t[i], hii) - per_coord(golden, hii)).abs()
                    <= 1e-8 * (1.0 + per_coord(golden, hii))
            );
        }
        assert_relative_eq!(steps.t[0], (8.0 * sigma * sigma).powf(0.25), max_relative = 1e-12);
    }

    #[test]
    fn fd_steps_edge_cases() {
        let h = 0.7;
        let spec = CurvatureSpec::new(dmatrix![0.0, 0.0; 0.0, 1.0], 0.1, h).unwrap();
        let (_, steps) = fd_sample_set(&spec, &dvector![0.0, 0.0]).unwrap();
        assert_eq!(steps.t[0], h);
        // sigma -> 0 drives the step to zero.
        let spec_small = CurvatureSpec::new(dmatrix![0.0, 0.0; 0.0, 1.0], 1e-12, h).unwrap();
        let (_, steps_small) = fd_sample_set(&spec_small, &dvector![0.0, 0.0]).unwrap();
        assert!(steps_small.t[1] < 1e-5);
    }

    #[test]
    fn cd_exact_on_quadratics() {
        let hess = dmatrix![2.0, 0.5; 0.5, -1.0];
        let g = dvector![1.0, -2.0];
        let f = |x: &DVector<f64>| 0.5 * (x.transpose() * &hess * x)[(0, 0)] + g.dot(x);
        let x0 = dvector![0.3, -0.7];
        let expect = &hess * &x0 + &g;
        let (grad, history) = cd_estimate(&mut noiseless(f), &x0, 0.05).unwrap();
        assert_relative_eq!(grad, expect, max_relative = 1e-10);
        assert_eq!(history.len(), 4);
    }

    #[test]
    fn cd_noise_variance_matches_formula() {
        // Pure noise: MSE = d sigma^2 / (2 h^2).
        use rand_distr::{Distribution, StandardNormal};
        let d = 3;
        let sigma = 0.4;
        let h_step = 0.25;
        let x0 = DVector::zeros(d);
        let expect = d as f64 * sigma * sigma / (2.0 * h_step * h_step);
        let stats = crate::simplex::mse_monte_carlo(
            |rng| {
                let mut noisy = |_x: &DVector<f64>| {
                    Ok(sigma * Distribution::<f64>::sample(&StandardNormal, rng))
                };
                cd_estimate(&mut noisy, &x0, h_step)
                    .map(|(g, _)| g)
                    .map_err(|_| SimplexError::NonFiniteInput)
            },
            &DVector::zeros(d),
            150_000,
            17,
        )
        .unwrap();
        assert!(
            (stats.mean - expect).abs() <= 3.0 * stats.stderr,
            "mc {} +- {} vs analytic {expect}",
            stats.mean,
            stats.stderr
        );
    }

    #[test]
    fn fd_estimate_affine_and_accounting() {
        let g = dvector![3.0, -1.0, 0.25];
        let f = |x: &DVector<f64>| g.dot(x) + 5.0;
        let spec = CurvatureSpec::new(DMatrix::zeros(3, 3), 0.1, 0.5).unwrap();
        let (sample, _) = fd_sample_set(&spec, &dvector![1.0, 2.0, 3.0]).unwrap();
        let (grad, history) = fd_estimate(&mut noiseless(f), &sample).unwrap();
        assert_relative_eq!(grad, g, max_relative = 1e-12);
        assert_eq!(history.len(), 4);
    }

    #[test]
    fn fd_monte_carlo_mse_matches_objective_on_the_toy() {
        // On the conditioning toy the objective is the exact mean squared
        // error of the forward-difference estimate.
        use rand_distr::{Distribution, StandardNormal};
        let k = 0.3;
        let hess = dmatrix![2.0 * k, 0.0; 0.0, 2.0];
        let sigma = 0.05;
        let spec = CurvatureSpec::new(hess.clone(), sigma, 1.0).unwrap();
        let x0 = dvector![0.4, -0.2];
        let (sample, _) = fd_sample_set(&spec, &x0).unwrap();
        let analytic = crate::simplex::objective(&sample.difference_matrix(), &spec);
        let f = |x: &DVector<f64>| k * x[0] * x[0] + x[1] * x[1];
        let truth = dvector![2.0 * k * x0[0], 2.0 * x0[1]];
        let stats = crate::simplex::mse_monte_carlo(
            |rng| {
                let mut noisy = |x: &DVector<f64>| {
                    Ok(f(x) + sigma * Distribution::<f64>::sample(&StandardNormal, rng))
                };
                fd_estimate(&mut noisy, &sample)
                    .map(|(g, _)| g)
                    .map_err(|_| SimplexError::NonFiniteInput)
            },
            &truth,
            60_000,
            4,
        )
        .unwrap();
        assert!(
            (stats.mean - analytic).abs() <= 3.0 * stats.stderr,
            "mc {} +- {} vs objective {analytic}",
            stats.mean,
            stats.stderr
        );
    }

    #[test]
    fn fd_estimate_zero_set_aligned_quadratic() {
        let hess = dmatrix![-1.0, 0.0; 0.0, 1.0];
        let f = |x: &DVector<f64>| 0.5 * (x.transpose() * &hess * x)[(0, 0)];
        let spec = CurvatureSpec::new(hess.clone(), 0.1, 1.0).unwrap();
        let (sample, result) =
            crate::solver::casg_sample_set(&spec, &dvector![0.0, 0.0]).unwrap();
        assert!(!result.negated);
        let (grad, _) = fd_estimate(&mut noiseless(f), &sample).unwrap();
        // Gradient at the origin is zero; zero-set alignment kills the bias.
        assert!(grad.norm() <= 1e-12);
    }

    fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
        let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        while (b - a).abs() > tol {
            if f(c) < f(d) {
                b = d;
                d = c;
                c = b - phi * (b - a);
            } else {
                a = c;
                c = d;
                d = a + phi * (b - a);
            }
        }
        0.5 * (a + b)
    }
}
