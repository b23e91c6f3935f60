//! Thin wrappers over nalgebra for the decompositions this crate relies on:
//! sorted symmetric eigendecompositions and SVD-based condition checks.

use nalgebra::{DMatrix, DVector};

/// Condition-number threshold beyond which a matrix is treated as singular.
pub const SINGULARITY_COND: f64 = 1e12;

/// Eigendecomposition H = R diag(values) R^T with `values` in increasing
/// order and the columns of `R` permuted consistently.
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with eigenvalues sorted increasing.
/// The input is symmetrized as (A + A^T)/2 before decomposing.
pub fn sorted_symmetric_eigen(matrix: &DMatrix<f64>) -> SortedEigen {
    let d = matrix.nrows();
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("non-finite eigenvalue")
    });
    let values = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(d, d);
    for (new_col, &old_col) in order.iter().enumerate() {
        vectors.set_column(new_col, &eig.eigenvectors.column(old_col));
    }
    SortedEigen { values, vectors }
}

/// Max-norm of R R^T - I, the orthogonality defect.
pub fn orthogonality_defect(r: &DMatrix<f64>) -> f64 {
    let d = r.nrows();
    let gram = r * r.transpose();
    let mut defect: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((gram[(i, j)] - target).abs());
        }
    }
    defect
}

/// Max-norm of A - B.
pub fn max_norm_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Singular values of a square matrix, descending.
pub fn singular_values(matrix: &DMatrix<f64>) -> DVector<f64> {
    matrix.clone().svd(false, false).singular_values
}

/// Spectral norm, the largest singular value.
pub fn spectral_norm(matrix: &DMatrix<f64>) -> f64 {
    singular_values(matrix).max()
}

/// Exact 2-norm condition number from the SVD. Returns infinity when the
/// smallest singular value underflows to zero.
pub fn condition_number(matrix: &DMatrix<f64>) -> f64 {
    let sv = singular_values(matrix);
    let smin = sv.min();
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        sv.max() / smin
    }
}

/// Random orthogonal matrix via QR of a Gaussian matrix, with the sign
/// convention fixed so the distribution is Haar.
pub fn random_orthogonal(d: usize, rng: &mut impl rand::Rng) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let h = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, -2.0, 0.0, 0.5, 0.0, 1.0]);
        let e = sorted_symmetric_eigen(&h);
        for i in 1..3 {
            assert!(e.values[i - 1] <= e.values[i]);
        }
        let rebuilt = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!(max_norm_diff(&rebuilt, &h) < 1e-12);
        assert!(orthogonality_defect(&e.vectors) < 1e-13);
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let q = random_orthogonal(5, &mut rng);
        assert!(orthogonality_defect(&q) < 1e-12);
    }

    #[test]
    fn condition_of_identity_is_one() {
        let eye = DMatrix::<f64>::identity(4, 4);
        assert!((condition_number(&eye) - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&eye) - 1.0).abs() < 1e-14);
    }
}
