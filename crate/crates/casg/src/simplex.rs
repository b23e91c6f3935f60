//! Sample sets, the simplex gradient, and the error functionals that score a
//! sample set under noise: the approximation error from curvature, the noise
//! error from the evaluation variance, and their sum, the design objective.
//!
//! A sample set holds the `d + 1` evaluation points of one gradient estimate.
//! Its difference matrix `S` has column `i` equal to `x_i - x_0`; the simplex
//! gradient is `S^{-T} (f(x_i) - f(x_0))_i`, the gradient of the unique affine
//! interpolant through the points.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, SINGULARITY_COND};
use crate::util::mix_seed;

/// Errors from simplex-gradient computations.
#[derive(Debug, Clone, Error)]
pub enum SimplexError {
    /// The difference matrix is numerically singular (condition estimate
    /// above 1e12); the simplex gradient is not reliable in double precision.
    #[error("difference matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularDifferenceMatrix {
        /// Estimated 2-norm condition number.
        cond: f64,
    },
    /// Mismatched dimensions between inputs.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// An input contained NaN or infinity.
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    /// A Monte-Carlo trial's estimator failed.
    #[error("gradient estimator failed on trial {trial}: {source}")]
    TrialFailed {
        trial: u64,
        #[source]
        source: Box<SimplexError>,
    },
    /// A scalar argument violated its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// The `d + 1` evaluation points of one simplex-gradient estimate: the base
/// point `x0` plus `d` displaced points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    base: DVector<f64>,
    points: Vec<DVector<f64>>,
}

impl SampleSet {
    /// Builds a sample set from the base point and the `d` remaining points.
    /// Spanning is not checked here; a rank-deficient set is reported when
    /// the difference matrix is inverted downstream.
    pub fn new(base: DVector<f64>, points: Vec<DVector<f64>>) -> Result<Self, SimplexError> {
        let d = base.len();
        if points.len() != d {
            return Err(SimplexError::DimensionMismatch {
                expected: d,
                got: points.len(),
            });
        }
        for p in &points {
            if p.len() != d {
                return Err(SimplexError::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
        }
        if !base.iter().all(|v| v.is_finite())
            || !points.iter().all(|p| p.iter().all(|v| v.is_finite()))
        {
            return Err(SimplexError::NonFiniteInput);
        }
        Ok(Self { base, points })
    }

    /// Base point and its displaced points as `x_i = x0 + s_i`.
    pub fn from_difference_matrix(base: DVector<f64>, s: &DifferenceMatrix) -> Self {
        let points = (0..base.len())
            .map(|j| &base + DVector::from(s.matrix().column(j)))
            .collect();
        Self { base, points }
    }

    /// Problem dimension `d`.
    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// The base point `x0`.
    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    /// The displaced points `x1..xd`.
    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    /// All `d + 1` points, base first.
    pub fn all_points(&self) -> impl Iterator<Item = &DVector<f64>> {
        std::iter::once(&self.base).chain(self.points.iter())
    }

    /// The difference matrix with column `i` equal to `x_i - x0`.
    ///
    /// ```
    /// use nalgebra::{dvector, DMatrix};
    /// use casg::simplex::SampleSet;
    ///
    /// let set = SampleSet::new(
    ///     dvector![0.0, 0.0],
    ///     vec![dvector![1.0, 0.0], dvector![0.0, 1.0]],
    /// )
    /// .unwrap();
    /// assert_eq!(*set.difference_matrix().matrix(), DMatrix::identity(2, 2));
    /// ```
    pub fn difference_matrix(&self) -> DifferenceMatrix {
        let d = self.dim();
        let s = DMatrix::from_fn(d, d, |i, j| self.points[j][i] - self.base[i]);
        DifferenceMatrix::new(s)
    }
}

/// The `d x d` matrix `S` whose columns are the difference vectors of a
/// sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMatrix {
    s: DMatrix<f64>,
}

impl DifferenceMatrix {
    /// Wraps a square matrix as a difference matrix.
    pub fn new(s: DMatrix<f64>) -> Self {
        assert_eq!(s.nrows(), s.ncols(), "difference matrix must be square");
        Self { s }
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// The raw matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// Column `i`, the difference vector `s_i`.
    pub fn column(&self, i: usize) -> DVector<f64> {
        DVector::from(self.s.column(i))
    }

    /// Spectral norm, used for the sample-radius feasibility check.
    pub fn spectral_norm(&self) -> f64 {
        linalg::spectral_norm(&self.s)
    }
}

/// Curvature information driving sample-set design: a symmetric Hessian `H`
/// with cached eigendecomposition `H = R diag(D) R^T` (eigenvalues increasing),
/// the noise level `sigma`, and the sample-radius bound `h`.
#[derive(Debug, Clone)]
pub struct CurvatureSpec {
    hessian: DMatrix<f64>,
    sigma: f64,
    h: f64,
    rotation: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl CurvatureSpec {
    /// Decomposes `hessian` (symmetrized as `(H + H^T)/2`) and validates the
    /// cached factors. `sigma` must be nonnegative and `h` positive.
    pub fn new(hessian: DMatrix<f64>, sigma: f64, h: f64) -> Result<Self, SimplexError> {
        let d = hessian.nrows();
        if d == 0 {
            return Err(SimplexError::InvalidParameter("dimension must be at least one"));
        }
        if hessian.ncols() != d {
            return Err(SimplexError::DimensionMismatch {
                expected: d,
                got: hessian.ncols(),
            });
        }
        if !hessian.iter().all(|v| v.is_finite()) || !sigma.is_finite() || !h.is_finite() {
            return Err(SimplexError::NonFiniteInput);
        }
        if sigma < 0.0 || h <= 0.0 {
            return Err(SimplexError::NonFiniteInput);
        }
        let sym = (&hessian + hessian.transpose()) * 0.5;
        let eig = linalg::sorted_symmetric_eigen(&sym);
        if linalg::orthogonality_defect(&eig.vectors) > 1e-10 {
            return Err(SimplexError::NonFiniteInput);
        }
        let rebuilt = &eig.vectors * DMatrix::from_diagonal(&eig.values) * eig.vectors.transpose();
        if linalg::max_norm_diff(&rebuilt, &sym) > 1e-8 * (1.0 + sym.amax()) {
            return Err(SimplexError::NonFiniteInput);
        }
        Ok(Self {
            hessian: sym,
            sigma,
            h,
            rotation: eig.vectors,
            eigenvalues: eig.values,
        })
    }

    /// Problem dimension.
    pub fn dim(&self) -> usize {
        self.hessian.nrows()
    }

    /// The (symmetrized) Hessian.
    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// Noise standard deviation.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Sample-radius bound on the spectral norm of the difference matrix.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Orthogonal eigenvector matrix `R`, columns matching `eigenvalues`.
    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    /// Eigenvalues of the Hessian in increasing order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }
}

/// Factored view of a difference matrix used by the error functionals: the
/// singular values give the spectral norm, condition number, and
/// `||S^{-1}||_F`; an LU factorization of `S^T` backs the solves, so no
/// inverse is ever formed.
struct DesignFactors {
    singular: DVector<f64>,
    lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DesignFactors {
    fn new(s: &DifferenceMatrix) -> Result<Self, SimplexError> {
        let singular = s.matrix().clone().svd(false, false).singular_values;
        let smin = singular.min();
        let smax = singular.max();
        if !(smin > 0.0) || smax / smin > SINGULARITY_COND {
            return Err(SimplexError::SingularDifferenceMatrix {
                cond: if smin > 0.0 { smax / smin } else { f64::INFINITY },
            });
        }
        let lu_t = s.matrix().transpose().lu();
        Ok(Self { singular, lu_t })
    }

    fn spectral_norm(&self) -> f64 {
        self.singular.max()
    }

    /// Squared Frobenius norm of the inverse: sum of 1 / sigma_i^2.
    fn inverse_frobenius_sq(&self) -> f64 {
        self.singular.iter().map(|s| 1.0 / (s * s)).sum()
    }

    /// S^{-T} w via the LU factorization of S^T.
    fn solve_inv_transpose(&self, w: &DVector<f64>) -> DVector<f64> {
        self.lu_t
            .solve(w)
            .expect("factorization passed the condition check")
    }
}

/// Simplex gradient `S^{-T} delta_f` where `delta_f_i = f(x_i) - f(x0)`.
///
/// Solves with an LU factorization of `S^T`; errors when the condition
/// estimate exceeds 1e12. Exact on affine functions:
///
/// ```
/// use nalgebra::{dmatrix, dvector, DVector};
/// use casg::simplex::{simplex_gradient, DifferenceMatrix, SampleSet};
///
/// let f = |x: &DVector<f64>| 2.0 * x[0] - 3.0 * x[1] + 7.0;
/// let s = DifferenceMatrix::new(dmatrix![0.9, -0.2; 0.4, 1.1]);
/// let set = SampleSet::from_difference_matrix(dvector![0.3, -0.1], &s);
/// let delta = DVector::from_fn(2, |i, _| f(&set.points()[i]) - f(set.base()));
/// let gradient = simplex_gradient(&s, &delta).unwrap();
/// assert!((gradient - dvector![2.0, -3.0]).norm() < 1e-12);
/// ```
pub fn simplex_gradient(
    s: &DifferenceMatrix,
    delta_f: &DVector<f64>,
) -> Result<DVector<f64>, SimplexError> {
    let d = s.dim();
    if delta_f.len() != d {
        return Err(SimplexError::DimensionMismatch {
            expected: d,
            got: delta_f.len(),
        });
    }
    let lu = s.matrix().transpose().lu();
    // Cheap condition estimate from the pivot magnitudes of U.
    let diag = lu.u();
    let mut dmax: f64 = 0.0;
    let mut dmin = f64::INFINITY;
    for i in 0..d {
        let v = diag[(i, i)].abs();
        dmax = dmax.max(v);
        dmin = dmin.min(v);
    }
    if !(dmin > 0.0) || dmax / dmin > SINGULARITY_COND {
        return Err(SimplexError::SingularDifferenceMatrix {
            cond: if dmin > 0.0 { dmax / dmin } else { f64::INFINITY },
        });
    }
    lu.solve(delta_f)
        .ok_or(SimplexError::SingularDifferenceMatrix { cond: f64::INFINITY })
}

/// Noise error `sigma^2 ||S^{-1}||_F^2 + sigma^2 ||S^{-T} 1||^2`: the exact
/// variance contribution of i.i.d. evaluation noise to the simplex-gradient
/// mean squared error, including the shared base-point term.
///
/// ```
/// use casg::simplex::{noise_error, DifferenceMatrix};
/// let s = DifferenceMatrix::new(nalgebra::DMatrix::identity(2, 2));
/// // Both norms equal d for the identity: 0.01 * 2 + 0.01 * 2.
/// assert!((noise_error(&s, 0.1).unwrap() - 0.04).abs() < 1e-15);
/// ```
pub fn noise_error(s: &DifferenceMatrix, sigma: f64) -> Result<f64, SimplexError> {
    let f = DesignFactors::new(s)?;
    Ok(noise_error_from(&f, sigma))
}

fn noise_error_from(f: &DesignFactors, sigma: f64) -> f64 {
    let ones = DVector::from_element(f.singular.len(), 1.0);
    let shared = f.solve_inv_transpose(&ones).norm_squared();
    sigma * sigma * (f.inverse_frobenius_sq() + shared)
}

/// Approximation error `(1/4) ||S^{-T} [s_1^T H s_1, ..., s_d^T H s_d]||^2`:
/// the squared second-order bias of the simplex gradient. Exact for
/// quadratics, and zero when every difference vector lies on the zero set of
/// the curvature form:
///
/// ```
/// use nalgebra::dmatrix;
/// use casg::simplex::{approximation_error, DifferenceMatrix};
///
/// let hessian = dmatrix![-1.0, 0.0; 0.0, 1.0];
/// let c = 1.0 / 2.0_f64.sqrt();
/// // Columns along the diagonals, where s^T H s = 0.
/// let s = DifferenceMatrix::new(dmatrix![c, c; c, -c]);
/// assert!(approximation_error(&s, &hessian).unwrap() <= 1e-30);
/// ```
pub fn approximation_error(s: &DifferenceMatrix, hessian: &DMatrix<f64>) -> Result<f64, SimplexError> {
    let f = DesignFactors::new(s)?;
    Ok(approximation_error_from(&f, s, hessian))
}

fn approximation_error_from(f: &DesignFactors, s: &DifferenceMatrix, hessian: &DMatrix<f64>) -> f64 {
    let d = s.dim();
    let hs = hessian * s.matrix();
    let quad = DVector::from_fn(d, |j, _| s.matrix().column(j).dot(&hs.column(j)));
    0.25 * f.solve_inv_transpose(&quad).norm_squared()
}

/// Relative slack on the sample-radius feasibility check; boundary-optimal
/// designs sit exactly on `||S||_2 = h`.
pub const RADIUS_SLACK: f64 = 1e-12;

/// The design objective: approximation error plus noise error when `S` is
/// invertible and `||S||_2 <= h` (with relative slack 1e-12), `+inf`
/// otherwise. Infeasibility is encoded in the value, never an error.
///
/// ```
/// use nalgebra::{dmatrix, DMatrix};
/// use casg::simplex::{objective, CurvatureSpec, DifferenceMatrix};
///
/// let spec = CurvatureSpec::new(dmatrix![3.0, 0.0; 0.0, 1.0], 0.1, 1.0).unwrap();
/// let s = DifferenceMatrix::new(DMatrix::identity(2, 2));
/// // 1/4 (3^2 + 1^2) + sigma^2 (2 + 2) = 2.5 + 0.04
/// assert!((objective(&s, &spec) - 2.54).abs() < 1e-12);
/// ```
pub fn objective(s: &DifferenceMatrix, spec: &CurvatureSpec) -> f64 {
    let f = match DesignFactors::new(s) {
        Ok(f) => f,
        Err(_) => return f64::INFINITY,
    };
    if f.spectral_norm() > spec.h() * (1.0 + RADIUS_SLACK) {
        return f64::INFINITY;
    }
    approximation_error_from(&f, s, spec.hessian()) + noise_error_from(&f, spec.sigma())
}

/// Mean and standard error of `||g_hat - g||^2` over independently seeded
/// trials of a gradient estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloStats {
    /// Sample mean of the squared error.
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    /// Number of trials.
    pub trials: u64,
}

/// Empirical mean squared error of a gradient estimator against the true
/// gradient, over `trials` independently seeded runs.
///
/// Each trial receives an RNG seeded from `(seed, trial index)`, so the
/// result is deterministic for a fixed seed regardless of thread schedule.
/// Trials run in parallel; failures carry the trial index.
pub fn mse_monte_carlo<F>(
    estimator: F,
    true_gradient: &DVector<f64>,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloStats, SimplexError>
where
    F: Fn(&mut ChaCha8Rng) -> Result<DVector<f64>, SimplexError> + Sync,
{
    if trials < 2 {
        return Err(SimplexError::InvalidParameter("at least two trials are required"));
    }
    let sq_errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, trial));
            let estimate = estimator(&mut rng).map_err(|e| SimplexError::TrialFailed {
                trial,
                source: Box::new(e),
            })?;
            Ok((estimate - true_gradient).norm_squared())
        })
        .collect::<Result<_, SimplexError>>()?;
    let n = sq_errors.len() as f64;
    let mean = sq_errors.iter().sum::<f64>() / n;
    let var = sq_errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloStats {
        mean,
        stderr: (var / n).sqrt(),
        trials,
    })
}
