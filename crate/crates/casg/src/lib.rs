//! Curvature aligned simplex gradients.
//!
//! Numerical differentiation from `d + 1` noisy function evaluations, with
//! the evaluation points chosen to minimize the mean squared error of the
//! resulting simplex gradient. The crate provides:
//!
//! - [`simplex`]: sample sets, the simplex gradient, and the error
//!   functionals (approximation error, noise error, and their sum).
//! - [`solver`]: the closed-form construction of the MSE-optimal sample set
//!   for power-of-two dimensions (CASG), built from an active-set scan over
//!   the squared singular values and a Hadamard mixing matrix.
//! - [`ecasg`]: the extension to arbitrary dimension by partitioning
//!   eigen-directions into power-of-two cells.
//! - [`baselines`]: objective-optimal forward differences and fixed-step
//!   central differences, the reference estimators.
//! - [`global_model`]: a cubic radial-basis surrogate fitted to an
//!   evaluation history, with analytic gradients and Hessians, feeding
//!   curvature estimates to the sample-set constructors.
//! - [`history`]: the append-only evaluation history and its CSV format.
//! - [`harness`]: test problems, reference derivatives, and the sensitivity
//!   and derivative-free-optimization experiment drivers.
//!
//! The accompanying book under `book/` walks through the concepts; the
//! `casg` binary exposes the experiment drivers on the command line.
//!
//! # Quick start
//!
//! Estimating the gradient of a noisy quadratic from four evaluations, with
//! the evaluation points chosen for its curvature:
//!
//! ```
//! use nalgebra::{dmatrix, dvector, DVector};
//! use casg::{casg_sample_set, CurvatureSpec};
//! use casg::baselines::fd_estimate;
//!
//! // Curvature of f(x, y) = -x^2 + y^2, noise level, and sample radius.
//! let spec = CurvatureSpec::new(dmatrix![-2.0, 0.0; 0.0, 2.0], 1e-3, 0.5).unwrap();
//! let x0 = dvector![0.2, -0.1];
//! let (sample, design) = casg_sample_set(&spec, &x0).unwrap();
//!
//! // The design exploits the zero-curvature diagonals: no quadratic bias.
//! assert!(design.objective_value < 1e-4);
//!
//! let mut f = |x: &DVector<f64>| Ok(-x[0] * x[0] + x[1] * x[1]);
//! let (gradient, evals) = fd_estimate(&mut f, &sample).unwrap();
//! assert_eq!(evals.len(), 3); // d + 1 evaluations
//! let truth = dvector![-2.0 * x0[0], 2.0 * x0[1]];
//! assert!((gradient - truth).norm() < 1e-10); // noiseless here, so exact
//! ```

// Negated comparisons like `!(x > 0.0)` are used on purpose: they reject NaN
// along with the out-of-domain values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod ecasg;
pub mod global_model;
pub mod harness;
pub mod history;
pub mod linalg;
pub mod simplex;
pub mod solver;
pub mod util;

pub use simplex::{
    approximation_error, mse_monte_carlo, noise_error, objective, simplex_gradient,
    CurvatureSpec, DifferenceMatrix, MonteCarloStats, SampleSet, SimplexError,
};
pub use solver::{casg_sample_set, hadamard, CasgResult, SolverError, SpectrumSolution};
pub use ecasg::{ecasg_sample_set, subdivide, EcasgError, Partition};
