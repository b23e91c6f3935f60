//! Conditioning sweep on the two-dimensional toy quadratic `k x^2 + y^2`:
//! objective values of the curvature-aligned design against the optimal
//! forward-difference design and the central-difference noise floor.

use nalgebra::{dmatrix, dvector};

use crate::baselines::fd_sample_set;
use crate::simplex::{approximation_error, objective, CurvatureSpec};
use crate::solver::{casg_sample_set, SolverError};

/// One row of the toy sweep.
#[derive(Debug, Clone)]
pub struct ToyRow {
    /// Conditioning parameter of `k x^2 + y^2`.
    pub k: f64,
    /// Objective attained by the curvature-aligned design.
    pub casg_objective: f64,
    /// Objective attained by the optimal forward-difference design.
    pub fd_objective: f64,
    /// Noise error of central differences whose difference vectors have
    /// length equal to the radius bound (per-side offsets of half that).
    pub cd_noise_error: f64,
    /// Approximation error of the curvature-aligned design.
    pub casg_approx_error: f64,
}

/// Sweeps the toy quadratic over `k_values` at fixed noise and radius.
pub fn toy_sweep(k_values: &[f64], sigma: f64, h: f64) -> Result<Vec<ToyRow>, SolverError> {
    let mut rows = Vec::with_capacity(k_values.len());
    let x0 = dvector![0.0, 0.0];
    for &k in k_values {
        let hessian = dmatrix![2.0 * k, 0.0; 0.0, 2.0];
        let spec = CurvatureSpec::new(hessian.clone(), sigma, h)
            .map_err(|_| SolverError::NonFiniteInput)?;
        let (_, result) = casg_sample_set(&spec, &x0)?;
        let (fd_sample, _) =
            fd_sample_set(&spec, &x0).map_err(|_| SolverError::NonFiniteInput)?;
        let fd_objective = objective(&fd_sample.difference_matrix(), &spec);
        let casg_approx = approximation_error(&result.s_star, &hessian)
            .map_err(|_| SolverError::NonFiniteInput)?;
        // CD with difference-vector length h: per-side offsets of h/2, so
        // the pure-noise mean squared error is d sigma^2 / (2 (h/2)^2).
        let t = h / 2.0;
        let cd_noise_error = 2.0 * sigma * sigma / (2.0 * t * t);
        rows.push(ToyRow {
            k,
            casg_objective: result.objective_value,
            fd_objective,
            cd_noise_error,
            casg_approx_error: casg_approx,
        });
    }
    Ok(rows)
}

/// Decade grid from `10^lo` to `10^hi` inclusive.
pub fn decades(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 10f64.powi(e)).collect()
}
