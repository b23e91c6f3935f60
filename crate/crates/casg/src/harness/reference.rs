//! Reference derivatives for problems without analytic ones: noiseless
//! central differences with Richardson refinement.

use nalgebra::{DMatrix, DVector};

use crate::baselines::EvalError;
use crate::harness::problems::Problem;

/// Base step of the noiseless central differences before refinement.
pub const RICHARDSON_BASE_STEP: f64 = 1e-4;

/// Relative stability target for the refinement.
pub const RICHARDSON_TOL: f64 = 1e-7;

/// Central-difference derivative of a scalar function along coordinate `i`.
fn cd_partial(
    f: &mut dyn FnMut(&DVector<f64>) -> Result<f64, EvalError>,
    x: &DVector<f64>,
    i: usize,
    t: f64,
) -> Result<f64, EvalError> {
    let mut xp = x.clone();
    let mut xm = x.clone();
    xp[i] += t;
    xm[i] -= t;
    Ok((f(&xp)? - f(&xm)?) / (2.0 * t))
}

/// Richardson-refined central-difference gradient of a noiseless function:
/// starts at [`RICHARDSON_BASE_STEP`], halves the step, and extrapolates the
/// leading quadratic error until successive refinements differ by at most
/// [`RICHARDSON_TOL`] relative (or a depth cap is reached).
pub fn richardson_gradient(
    f: &mut dyn FnMut(&DVector<f64>) -> Result<f64, EvalError>,
    x: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>, EvalError> {
    let d = x.len();
    let mut t = RICHARDSON_BASE_STEP;
    let mut prev = DVector::from_fn(d, |_, _| 0.0);
    for i in 0..d {
        prev[i] = cd_partial(f, x, i, t)?;
    }
    let mut estimate = prev.clone();
    for depth in 0..8 {
        t *= 0.5;
        let mut halved = DVector::zeros(d);
        for i in 0..d {
            halved[i] = cd_partial(f, x, i, t)?;
        }
        // CD error is O(t^2): one extrapolation step per halving.
        let refined = (&halved * 4.0 - &prev) / 3.0;
        let change = (&refined - &estimate).norm();
        let scale = 1.0 + refined.norm();
        let done = change <= tol * scale;
        prev = halved;
        estimate = refined;
        if done && depth >= 1 {
            break;
        }
    }
    Ok(estimate)
}

/// Reference gradient: analytic when the problem supplies one, otherwise the
/// Richardson-refined noiseless central differences.
pub fn reference_gradient(problem: &Problem, x: &DVector<f64>) -> Result<DVector<f64>, EvalError> {
    if let Some(g) = problem.analytic_gradient(x) {
        return Ok(g);
    }
    let mut f = |p: &DVector<f64>| problem.eval_noiseless(p);
    richardson_gradient(&mut f, x, RICHARDSON_TOL)
}

/// Reference Hessian: analytic when available, otherwise the same
/// central-difference refinement applied to the reference gradient, column by
/// column, symmetrized.
pub fn reference_hessian(problem: &Problem, x: &DVector<f64>) -> Result<DMatrix<f64>, EvalError> {
    if let Some(h) = problem.analytic_hessian(x) {
        return Ok(h);
    }
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    // One refinement level on the outer difference; the inner gradients are
    // themselves refined, so a second extrapolation brings no benefit at the
    // noiseless-evaluation precision available here.
    let t = 10.0 * RICHARDSON_BASE_STEP;
    for j in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += t;
        xm[j] -= t;
        let gp = reference_gradient(problem, &xp)?;
        let gm = reference_gradient(problem, &xm)?;
        let col = (gp - gm) / (2.0 * t);
        h.set_column(j, &col);
    }
    Ok((&h + h.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::OdeCoefficients;
    use crate::harness::problems::{builtin_problem, colon_ode};
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_reference_is_exact() {
        let ode = OdeCoefficients::default();
        let p = builtin_problem("quad_ill_d4", &ode).unwrap();
        let x = nalgebra::dvector![0.5, -1.0, 0.25, 2.0];
        let g = reference_gradient(&p, &x).unwrap();
        let expect = nalgebra::dvector![0.5 * 1e-2, -1.0, 2.5, 200.0];
        assert_relative_eq!(g, expect, max_relative = 1e-12);
    }

    #[test]
    fn ackley_dual_path_agrees() {
        // Analytic gradient vs the Richardson fallback on the same function.
        let p = builtin_problem("ackley_d4", &OdeCoefficients::default()).unwrap();
        let x = nalgebra::dvector![0.21, -0.34, 0.05, 0.4];
        let analytic = reference_gradient(&p, &x).unwrap();
        let mut f = |q: &DVector<f64>| p.eval_noiseless(q);
        let numeric = richardson_gradient(&mut f, &x, RICHARDSON_TOL).unwrap();
        assert!(
            (&analytic - &numeric).norm() <= 1e-7 * (1.0 + numeric.norm()),
            "analytic {analytic:?} vs numeric {numeric:?}"
        );
    }

    #[test]
    fn colon_reference_gradient_is_refinement_stable() {
        let p = colon_ode(&OdeCoefficients::default());
        let x = p.start().clone();
        let mut f = |q: &DVector<f64>| p.eval_noiseless(q);
        let loose = richardson_gradient(&mut f, &x, 1e-4).unwrap();
        let tight = richardson_gradient(&mut f, &x, RICHARDSON_TOL).unwrap();
        assert!(
            (&loose - &tight).norm() <= 1e-6 * (1.0 + tight.norm()),
            "refinement drifted: {loose:?} vs {tight:?}"
        );
    }
}
