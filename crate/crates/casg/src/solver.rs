//! Closed-form construction of the MSE-optimal sample set for power-of-two
//! dimensions (CASG).
//!
//! In the eigenbasis of the Hessian the design objective depends on the
//! singular values of `S` and a Hadamard mixing matrix. Writing `lambda` for
//! the squared singular values, the optimal `lambda` pins a prefix of entries
//! at `h^2` (the active set) and places the rest on a stationary curve
//! parameterized by one scalar `a = sum_i D_i lambda_i`. Scanning the active
//! set size upward and solving for `a` in closed form (a quartic for the
//! empty active set, otherwise one positive cubic root) yields the optimum in
//! linear time. The optimal mixing matrix is the Hadamard matrix whose
//! all-positive column aligns with the largest singular value.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::simplex::{CurvatureSpec, DifferenceMatrix, SampleSet, RADIUS_SLACK};

/// Positive eigenvalues at or below this threshold are pinned to the radius
/// bound along with nonpositive ones; their unconstrained scaling would
/// exceed `h^2` anyway and the ratio `1/D` overflows.
pub const PIN_THRESHOLD: f64 = 1e-300;

/// Errors from the sample-set constructor.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    /// CASG requires the dimension to be a power of two.
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    /// An input contained NaN or infinity.
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    /// The eigenvalue sum is negative; callers negate the Hessian first.
    #[error("eigenvalue sum is negative; solve with the negated curvature")]
    NegativeTrace,
    /// Preconditions of the active-set candidate solve were violated.
    #[error("invalid active set of size {pinned}: {detail}")]
    InvalidActiveSet {
        pinned: usize,
        detail: &'static str,
    },
    /// Index argument outside the matrix dimension.
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    /// A scalar parameter violated its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    /// No active set produced a feasible candidate. The all-pinned fallback
    /// always accepts, so this indicates a logic error upstream.
    #[error("no feasible active-set candidate found")]
    NoFeasibleCandidate,
}

/// Solution of the constrained spectrum problem: the squared singular values
/// of the optimal design in the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSolution {
    /// Squared singular values, in decreasing order.
    pub lambda: DVector<f64>,
    /// The weighted trace `a = sum_i D_i lambda_i`.
    pub weighted_trace: f64,
    /// Number of leading entries pinned at `h^2` (the active-set size `J`).
    pub pinned: usize,
}

/// The constructed optimal design and its factors.
#[derive(Debug, Clone)]
pub struct CasgResult {
    /// The optimal difference matrix in the original coordinates.
    pub s_star: DifferenceMatrix,
    /// Basis actually used: the Hessian eigenvectors, columns reversed when
    /// the curvature was negated. Satisfies `s_star = rotation * diag(sigma) * hadamard^T`.
    pub rotation: DMatrix<f64>,
    /// Left factor in the eigenbasis; the optimum is the identity.
    pub u: DMatrix<f64>,
    /// Singular values of the design, decreasing.
    pub sigma: DVector<f64>,
    /// The Hadamard mixing matrix `V`.
    pub hadamard: DMatrix<f64>,
    /// Objective value attained by `s_star`.
    pub objective_value: f64,
    /// Whether the curvature was negated to obtain a nonnegative trace.
    pub negated: bool,
}

fn validate_increasing(eigs: &[f64]) -> Result<(), SolverError> {
    if !eigs.iter().all(|v| v.is_finite()) {
        return Err(SolverError::NonFiniteInput);
    }
    if eigs.windows(2).any(|w| w[0] > w[1]) {
        return Err(SolverError::InvalidParameter("eigenvalues must be sorted increasing"));
    }
    Ok(())
}

/// Candidate solution for the active set that pins the first `pinned`
/// entries at `h^2`: returns `(lambda_next, a)` where `lambda_next` is the
/// first unpinned entry of the stationary point and `a` its weighted trace.
///
/// `c1` and `c2` are the raw sums `sum_{i > pinned} sqrt(D_i)` and
/// `sum_{i <= pinned} D_i`; all scaling is applied internally.
///
/// For the empty active set the unique positive `a` solves a quartic with a
/// closed form; otherwise `x = sqrt(a)` is the unique positive root of
/// `x^3 - c2 h^2 x - sigma sqrt(2 d h^2) c1 = 0`, evaluated by radicals when
/// the discriminant is nonnegative and trigonometrically otherwise.
pub fn active_set_candidate(
    pinned: usize,
    eigs: &[f64],
    sigma: f64,
    h: f64,
    c1: f64,
    c2: f64,
) -> Result<(f64, f64), SolverError> {
    let d = eigs.len();
    validate_increasing(eigs)?;
    if !(sigma > 0.0 && h > 0.0) || !sigma.is_finite() || !h.is_finite() {
        return Err(SolverError::InvalidParameter("sigma and h must be positive and finite"));
    }
    if pinned >= d {
        return Err(SolverError::InvalidActiveSet {
            pinned,
            detail: "active set must leave at least one entry free",
        });
    }
    if eigs[pinned] <= PIN_THRESHOLD {
        return Err(SolverError::InvalidActiveSet {
            pinned,
            detail: "free entries must have positive eigenvalues",
        });
    }
    let df = d as f64;
    if pinned == 0 {
        // Empty active set: quartic closed form in a, then the stationary
        // value of the largest entry.
        let d1 = eigs[0];
        let c = c1 - d1.sqrt();
        let inner = c * (8.0 * d1 * (df + 1.0) + c * c).sqrt() + 2.0 * d1 * (df + 1.0) + c * c;
        let a = std::f64::consts::SQRT_2 * (df * sigma * sigma / d1 * inner).sqrt();
        let lambda_1 = 2.0 * df / (a * d1) * (a * a / (4.0 * df) + sigma * sigma * (df + 1.0));
        if !(a > 0.0 && lambda_1 > 0.0) {
            return Err(SolverError::InvalidActiveSet {
                pinned,
                detail: "candidate produced a nonpositive scalar",
            });
        }
        Ok((lambda_1, a))
    } else {
        // Nonempty active set: one positive cubic root. The scaled constants
        // follow the stationarity conditions, so the returned a satisfies
        // a^{3/2} = sigma sqrt(2 d h^2) c1 + sqrt(a) h^2 c2.
        let c1s = sigma * (2.0 * df * h * h).sqrt() * c1;
        let c2s = h * h * c2;
        if !(c1s > 0.0) {
            return Err(SolverError::InvalidActiveSet {
                pinned,
                detail: "sum of root eigenvalues beyond the active set must be positive",
            });
        }
        // Sign test on 27 c1^2 - 4 c2^3; only the sign matters, products use
        // fused multiply-adds to keep it stable near zero.
        let c1_sq = c1s * c1s;
        let c2_cu = c2s * c2s * c2s;
        let disc = 27.0f64.mul_add(c1_sq, -4.0 * c2_cu);
        let x = if disc >= 0.0 {
            let w = ((3.0 * disc).sqrt() + 9.0 * c1s).cbrt();
            (2.0 / 3.0f64).cbrt() * c2s / w + w / 18.0f64.cbrt()
        } else {
            // disc < 0 forces c2 > 0; clamp the cosine argument against
            // rounding at the branch boundary.
            let theta = (9.0 * c1s / (12.0 * c2_cu).sqrt()).clamp(-1.0, 1.0).acos();
            2.0 * (c2s / 3.0).sqrt() * (theta / 3.0).cos()
        };
        let a = x * x;
        let lambda_next = sigma * (2.0 * df * h * h / (a * eigs[pinned])).sqrt();
        if !(a > 0.0 && lambda_next.is_finite()) {
            return Err(SolverError::InvalidActiveSet {
                pinned,
                detail: "candidate produced a nonpositive scalar",
            });
        }
        Ok((lambda_next, a))
    }
}

/// Builds the full candidate spectrum for a given active-set size.
fn assemble_lambda(
    pinned: usize,
    lambda_first_free: f64,
    a: f64,
    eigs: &[f64],
    sigma: f64,
    h: f64,
) -> DVector<f64> {
    let d = eigs.len();
    let h2 = h * h;
    let lambda_max = if pinned == 0 { lambda_first_free } else { h2 };
    DVector::from_fn(d, |i, _| {
        if i < pinned {
            h2
        } else if i == 0 {
            lambda_first_free
        } else {
            sigma * (2.0 * d as f64 * lambda_max / (a * eigs[i])).sqrt()
        }
    })
}

/// Solves the constrained spectrum problem for eigenvalues `eigs` (sorted
/// increasing, nonnegative sum), noise level `sigma > 0`, and radius bound
/// `h > 0`.
///
/// Scans active-set sizes upward from the count of nonpositive eigenvalues
/// and accepts the first feasible candidate; the all-pinned spectrum
/// `lambda = h^2` is the terminal fallback. A zero eigenvalue sum returns
/// the all-pinned spectrum immediately.
pub fn optimal_spectrum(
    eigs: &DVector<f64>,
    sigma: f64,
    h: f64,
) -> Result<SpectrumSolution, SolverError> {
    let d = eigs.len();
    if d == 0 {
        return Err(SolverError::InvalidParameter("empty eigenvalue vector"));
    }
    validate_increasing(eigs.as_slice())?;
    if !(sigma > 0.0 && h > 0.0) {
        return Err(SolverError::InvalidParameter("sigma and h must be positive"));
    }
    let h2 = h * h;
    let trace: f64 = eigs.iter().sum();
    if trace < 0.0 {
        return Err(SolverError::NegativeTrace);
    }
    if trace == 0.0 {
        return Ok(SpectrumSolution {
            lambda: DVector::from_element(d, h2),
            weighted_trace: 0.0,
            pinned: d,
        });
    }
    let feasible_cap = h2 * (1.0 + RADIUS_SLACK);
    let mut pinned = eigs.iter().take_while(|&&v| v <= PIN_THRESHOLD).count();
    let mut c1: f64 = eigs.iter().skip(pinned).map(|v| v.sqrt()).sum();
    let mut c2: f64 = eigs.iter().take(pinned).sum();
    while pinned < d {
        let (lambda_next, a) = active_set_candidate(pinned, eigs.as_slice(), sigma, h, c1, c2)?;
        let feasible = if pinned == 0 {
            // No pinned entry bounds the rest; check the whole candidate.
            let lambda = assemble_lambda(0, lambda_next, a, eigs.as_slice(), sigma, h);
            lambda.iter().all(|&v| v <= feasible_cap)
        } else {
            // Entries beyond the first free one only shrink, so one check
            // suffices.
            lambda_next <= feasible_cap
        };
        if feasible {
            let lambda = assemble_lambda(pinned, lambda_next, a, eigs.as_slice(), sigma, h);
            let weighted_trace = eigs.iter().zip(lambda.iter()).map(|(d_i, l_i)| d_i * l_i).sum();
            return Ok(SpectrumSolution {
                lambda,
                weighted_trace,
                pinned,
            });
        }
        c1 -= eigs[pinned].sqrt();
        c2 += eigs[pinned];
        pinned += 1;
    }
    Ok(SpectrumSolution {
        lambda: DVector::from_element(d, h2),
        weighted_trace: h2 * trace,
        pinned: d,
    })
}

/// Orthogonal Hadamard matrix of a power-of-two dimension with every entry
/// `+-1/sqrt(d)` and all entries of column `positive_col` positive.
///
/// Built by Sylvester doubling followed by the symmetric permutation that
/// moves the all-ones column into place, so `M * 1 = sqrt(d) * e_k` as well.
///
/// ```
/// let m = casg::hadamard(2, 0).unwrap();
/// let s = 1.0 / 2.0_f64.sqrt();
/// assert_eq!(m, nalgebra::dmatrix![s, s; s, -s]);
/// ```
pub fn hadamard(dim: usize, positive_col: usize) -> Result<DMatrix<f64>, SolverError> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(SolverError::NotPowerOfTwo(dim));
    }
    if positive_col >= dim {
        return Err(SolverError::IndexOutOfRange {
            index: positive_col,
            dim,
        });
    }
    let mut m = DMatrix::from_element(1, 1, 1.0);
    let mut n = 1;
    while n < dim {
        let mut next = DMatrix::zeros(2 * n, 2 * n);
        next.view_mut((0, 0), (n, n)).copy_from(&m);
        next.view_mut((0, n), (n, n)).copy_from(&m);
        next.view_mut((n, 0), (n, n)).copy_from(&m);
        next.view_mut((n, n), (n, n)).copy_from(&(-&m));
        m = next;
        n *= 2;
    }
    m /= (dim as f64).sqrt();
    if positive_col != 0 {
        m.swap_columns(0, positive_col);
        m.swap_rows(0, positive_col);
    }
    Ok(m)
}

/// Optimal design for a diagonal curvature `eigs` (sorted increasing),
/// expressed in the coordinates of the input ordering. Handles a negative
/// trace by solving the negated problem, which shares the same objective.
pub(crate) struct DiagonalSolve {
    /// Difference matrix in the input coordinate order.
    pub s: DMatrix<f64>,
    /// Spectrum solution of the (possibly negated) problem.
    pub spectrum: SpectrumSolution,
    /// Objective value attained.
    pub objective_value: f64,
    /// Whether the eigenvalues were negated (and re-sorted) internally.
    pub negated: bool,
    /// Hadamard factor used.
    pub hadamard: DMatrix<f64>,
    /// Whether coordinates were reversed relative to the input order.
    pub reversed: bool,
}

pub(crate) fn solve_diagonal(
    eigs: &DVector<f64>,
    sigma: f64,
    h: f64,
) -> Result<DiagonalSolve, SolverError> {
    let d = eigs.len();
    if !d.is_power_of_two() {
        return Err(SolverError::NotPowerOfTwo(d));
    }
    validate_increasing(eigs.as_slice())?;
    let trace: f64 = eigs.iter().sum();
    let negated = trace < 0.0;
    let work_eigs = if negated {
        DVector::from_iterator(d, eigs.iter().rev().map(|v| -v))
    } else {
        eigs.clone()
    };
    let spectrum = optimal_spectrum(&work_eigs, sigma, h)?;
    // Largest singular value first; ties keep the smallest index, so the
    // all-positive Hadamard column is always column 0.
    let v = hadamard(d, 0)?;
    let sigmas = spectrum.lambda.map(|l| l.sqrt());
    let mut s = DMatrix::from_diagonal(&sigmas) * v.transpose();
    if negated {
        // Map back to the input coordinate order.
        for i in 0..d / 2 {
            s.swap_rows(i, d - 1 - i);
        }
    }
    let objective_value = spectrum_objective(&work_eigs, &spectrum, sigma);
    Ok(DiagonalSolve {
        s,
        spectrum,
        objective_value,
        negated,
        hadamard: v,
        reversed: negated,
    })
}

/// Objective value of a spectrum solution in the eigenbasis:
/// `a^2 / (4 d lambda_max) + sigma^2 sum_i 1/lambda_i + sigma^2 d / lambda_max`.
fn spectrum_objective(eigs: &DVector<f64>, spectrum: &SpectrumSolution, sigma: f64) -> f64 {
    let d = eigs.len() as f64;
    let lambda_max = spectrum.lambda[0];
    let a = spectrum.weighted_trace;
    let inv_sum: f64 = spectrum.lambda.iter().map(|l| 1.0 / l).sum();
    a * a / (4.0 * d * lambda_max) + sigma * sigma * inv_sum + sigma * sigma * d / lambda_max
}

/// Constructs the globally optimal sample set around `x0` for a
/// power-of-two dimension: `S* = R Sigma* V*^T` in the eigenbasis of the
/// Hessian, with `Sigma*` from the active-set solver and `V*` the Hadamard
/// matrix aligned with the largest singular value.
///
/// ```
/// use nalgebra::{dmatrix, dvector};
/// use casg::{casg_sample_set, objective, CurvatureSpec};
///
/// let spec = CurvatureSpec::new(dmatrix![-1.0, 0.0; 0.0, 1.0], 0.1, 1.0).unwrap();
/// let (_, result) = casg_sample_set(&spec, &dvector![0.0, 0.0]).unwrap();
/// // Zero-trace curvature: the design reaches the pure noise floor.
/// assert!((result.objective_value - 0.04).abs() < 1e-14);
/// assert!((objective(&result.s_star, &spec) - 0.04).abs() < 1e-14);
/// ```
pub fn casg_sample_set(
    spec: &CurvatureSpec,
    x0: &DVector<f64>,
) -> Result<(SampleSet, CasgResult), SolverError> {
    let d = spec.dim();
    if !d.is_power_of_two() {
        return Err(SolverError::NotPowerOfTwo(d));
    }
    if spec.sigma() <= 0.0 {
        return Err(SolverError::InvalidParameter("sigma must be positive"));
    }
    if x0.len() != d {
        return Err(SolverError::IndexOutOfRange {
            index: x0.len(),
            dim: d,
        });
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(SolverError::NonFiniteInput);
    }
    let solve = solve_diagonal(spec.eigenvalues(), spec.sigma(), spec.h())?;
    let s_star = spec.rotation() * &solve.s;
    let rotation = if solve.reversed {
        let mut r = spec.rotation().clone();
        for j in 0..d / 2 {
            r.swap_columns(j, d - 1 - j);
        }
        r
    } else {
        spec.rotation().clone()
    };
    let s_star = DifferenceMatrix::new(s_star);
    let sample = SampleSet::from_difference_matrix(x0.clone(), &s_star);
    Ok((
        sample,
        CasgResult {
            s_star,
            rotation,
            u: DMatrix::identity(d, d),
            sigma: solve.spectrum.lambda.map(|l| l.sqrt()),
            hadamard: solve.hadamard,
            objective_value: solve.objective_value,
            negated: solve.negated,
        },
    ))
}

/// Lower bound on the objective over all mixing matrices, evaluated at the
/// identity left factor: for positive diagonal `sigmas` paired with the
/// spec's eigenvalues,
/// `a^2/(4 d max^2) + sigma^2 sum 1/sigmas_i^2 + sigma^2 d / max^2` with
/// `a = sum_i D_i sigmas_i^2`, or `+inf` when some entry exceeds `h`.
///
/// The bound is tight at the optimal spectrum and Hadamard factor.
pub fn objective_lower_bound(spec: &CurvatureSpec, sigmas: &DVector<f64>) -> f64 {
    let d = spec.dim();
    assert_eq!(sigmas.len(), d, "sigma vector must match the spec dimension");
    if sigmas.iter().any(|&s| s <= 0.0) {
        return f64::INFINITY;
    }
    if sigmas.iter().any(|&s| s > spec.h() * (1.0 + RADIUS_SLACK)) {
        return f64::INFINITY;
    }
    let eigs = spec.eigenvalues();
    let a: f64 = (0..d).map(|i| eigs[i] * sigmas[i] * sigmas[i]).sum();
    let smax_sq = sigmas.iter().fold(0.0f64, |m, &s| m.max(s * s));
    let inv_sum: f64 = sigmas.iter().map(|s| 1.0 / (s * s)).sum();
    let noise = spec.sigma() * spec.sigma();
    a * a / (4.0 * d as f64 * smax_sq) + noise * inv_sum + noise * d as f64 / smax_sq
}
