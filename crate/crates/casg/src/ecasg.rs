//! Extension of CASG to arbitrary dimension.
//!
//! The eigen-directions are partitioned into cells whose sizes are the
//! powers of two in the binary expansion of `d`. Restricted to
//! block-diagonal designs over such a partition, the objective is additive
//! across cells, so each cell is solved exactly by the power-of-two
//! constructor and the blocks are reassembled in the original basis.
//!
//! Cells are filled greedily: multi-element cells take (lowest, highest)
//! curvature pairs from the remaining pool so that indefinite directions can
//! cancel along zero sets, and a singleton cell takes the lowest remaining
//! curvature. Larger cells pick first.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::simplex::{CurvatureSpec, DifferenceMatrix, SampleSet};
use crate::solver::{solve_diagonal, SolverError};

/// Errors from the arbitrary-dimension constructor.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EcasgError {
    /// A cell's sub-problem failed.
    #[error("cell {cell} (size {size}) failed: {source}")]
    Cell {
        cell: usize,
        size: usize,
        #[source]
        source: SolverError,
    },
    /// Invalid scalar parameters.
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    /// Non-finite input.
    #[error("input contains a non-finite value")]
    NonFiniteInput,
}

/// A partition of the eigen-direction indices `0..d` into power-of-two
/// sized cells, ordered by decreasing size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    cells: Vec<Vec<usize>>,
}

impl Partition {
    /// The cells, each a set of indices into the sorted eigenvalue vector.
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Cell sizes, decreasing.
    pub fn sizes(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.len()).collect()
    }
}

/// Splits the index range `0..d` into power-of-two cells following the
/// binary expansion of `d`, pairing extreme curvatures.
///
/// Indices refer to positions in the increasing-eigenvalue order. Cells are
/// visited round-robin from the largest; a cell of size `2k` receives the
/// pair (lowest remaining, highest remaining) per visit, and a size-one cell
/// receives the single lowest remaining index.
///
/// ```
/// let p = casg::subdivide(11);
/// assert_eq!(p.sizes(), vec![8, 2, 1]);
/// ```
pub fn subdivide(d: usize) -> Partition {
    assert!(d >= 1, "dimension must be at least one");
    let mut sizes: Vec<usize> = (0..usize::BITS)
        .rev()
        .map(|b| 1usize << b)
        .filter(|bit| d & bit != 0)
        .collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut cells: Vec<Vec<usize>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    let mut lo = 0usize;
    let mut hi = d - 1;
    let mut remaining = d;
    while remaining > 0 {
        for (cell, &size) in cells.iter_mut().zip(sizes.iter()) {
            if cell.len() == size {
                continue;
            }
            if size == 1 {
                cell.push(lo);
                lo += 1;
                remaining -= 1;
            } else {
                cell.push(lo);
                cell.push(hi);
                lo += 1;
                hi -= 1;
                remaining -= 2;
            }
        }
    }
    for cell in &mut cells {
        cell.sort_unstable();
    }
    Partition { cells }
}

/// Constructs the extended-CASG sample set around `x0` for any dimension:
/// each cell of [`subdivide`] is solved by the power-of-two constructor on
/// its eigenvalue slice, the blocks are assembled block-diagonally, and the
/// result is rotated back to the original coordinates.
///
/// Returns the sample set and the attained objective value, which by
/// block additivity equals the sum of the cell objectives.
///
/// ```
/// use nalgebra::{dmatrix, dvector};
/// use casg::{ecasg_sample_set, objective, CurvatureSpec};
///
/// let spec = CurvatureSpec::new(
///     dmatrix![-5.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 9.0],
///     0.1,
///     1.0,
/// )
/// .unwrap();
/// let (sample, value) = ecasg_sample_set(&spec, &dvector![0.0, 0.0, 0.0]).unwrap();
/// // The cell sum equals the full objective of the assembled design.
/// let direct = objective(&sample.difference_matrix(), &spec);
/// assert!((value - direct).abs() <= 1e-10 * (1.0 + direct));
/// ```
pub fn ecasg_sample_set(
    spec: &CurvatureSpec,
    x0: &DVector<f64>,
) -> Result<(SampleSet, f64), EcasgError> {
    let d = spec.dim();
    if spec.sigma() <= 0.0 {
        return Err(EcasgError::InvalidParameter("sigma must be positive"));
    }
    if x0.len() != d {
        return Err(EcasgError::InvalidParameter("x0 dimension mismatch"));
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(EcasgError::NonFiniteInput);
    }
    let partition = subdivide(d);
    let eigs = spec.eigenvalues();
    // Block-diagonal design in the cell-ordered basis, then rows permuted
    // back to the eigenbasis ordering: S_D[idx[p], q + off] = S_cell[p, q].
    let mut s_eigen = DMatrix::zeros(d, d);
    let mut total_objective = 0.0;
    let mut offset = 0;
    for (cell_no, idx) in partition.cells().iter().enumerate() {
        let size = idx.len();
        let cell_eigs = DVector::from_iterator(size, idx.iter().map(|&i| eigs[i]));
        let solve = solve_diagonal(&cell_eigs, spec.sigma(), spec.h()).map_err(|source| {
            EcasgError::Cell {
                cell: cell_no,
                size,
                source,
            }
        })?;
        for (p, &row) in idx.iter().enumerate() {
            for q in 0..size {
                s_eigen[(row, offset + q)] = solve.s[(p, q)];
            }
        }
        total_objective += solve.objective_value;
        offset += size;
    }
    let s = DifferenceMatrix::new(spec.rotation() * s_eigen);
    let sample = SampleSet::from_difference_matrix(x0.clone(), &s);
    Ok((sample, total_objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::objective;
    use crate::solver::casg_sample_set;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn subdivide_matches_binary_expansion() {
        assert_eq!(subdivide(11).sizes(), vec![8, 2, 1]);
        assert_eq!(subdivide(4).sizes(), vec![4]);
        assert_eq!(subdivide(1).sizes(), vec![1]);
        assert_eq!(subdivide(7).sizes(), vec![4, 2, 1]);
    }

    #[test]
    fn subdivide_partitions_all_indices() {
        for d in 1..=257 {
            let p = subdivide(d);
            let mut seen = vec![false; d];
            let mut total = 0;
            for cell in p.cells() {
                assert!(cell.len().is_power_of_two());
                for &i in cell {
                    assert!(!seen[i], "index {i} assigned twice for d={d}");
                    seen[i] = true;
                }
                total += cell.len();
            }
            assert_eq!(total, d);
            assert!(seen.iter().all(|&s| s));
            // Sizes are exactly the binary expansion, decreasing.
            let sizes = p.sizes();
            let expect: Vec<usize> = (0..usize::BITS)
                .rev()
                .map(|b| 1usize << b)
                .filter(|bit| d & bit != 0)
                .collect();
            assert_eq!(sizes, expect);
        }
    }

    #[test]
    fn subdivide_pairs_extremes() {
        // d = 3: the pair cell takes indices {0, 2}, the singleton takes {1}.
        let p = subdivide(3);
        assert_eq!(p.cells(), &[vec![0, 2], vec![1]]);
    }

    #[test]
    fn power_of_two_reduces_to_casg() {
        let spec = CurvatureSpec::new(
            dmatrix![2.0, 0.3, 0.0, 0.0;
                     0.3, -1.0, 0.1, 0.0;
                     0.0, 0.1, 0.7, 0.2;
                     0.0, 0.0, 0.2, 1.2],
            0.1,
            1.0,
        )
        .unwrap();
        let x0 = dvector![0.5, -0.5, 0.0, 1.0];
        let (sample_e, obj_e) = ecasg_sample_set(&spec, &x0).unwrap();
        let (sample_c, result_c) = casg_sample_set(&spec, &x0).unwrap();
        assert_relative_eq!(obj_e, result_c.objective_value, max_relative = 1e-12);
        let se = sample_e.difference_matrix();
        let sc = sample_c.difference_matrix();
        assert!((se.matrix() - sc.matrix()).amax() <= 1e-12);
    }

    #[test]
    fn three_dim_cells_add_up() {
        let spec = CurvatureSpec::new(
            dmatrix![-5.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 9.0],
            0.1,
            1.0,
        )
        .unwrap();
        let (sample, obj) = ecasg_sample_set(&spec, &dvector![0.0, 0.0, 0.0]).unwrap();
        let s = sample.difference_matrix();
        // Direct evaluation of the full objective agrees with the cell sum.
        assert_relative_eq!(objective(&s, &spec), obj, max_relative = 1e-10);
        // The {-5, 9} cell has positive trace and mixed signs; its design
        // exploits directions of small quadratic form, so the total beats
        // pinning everything naively. Sanity: finite and positive.
        assert!(obj.is_finite() && obj > 0.0);
    }

    #[test]
    fn feasibility_and_invertibility() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        for d in [2usize, 3, 5, 6, 11] {
            let q = crate::linalg::random_orthogonal(d, &mut rng);
            let eigs = DVector::from_fn(d, |i, _| (i as f64) - 1.5);
            let h_mat = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
            let spec = CurvatureSpec::new(h_mat, 0.2, 0.7).unwrap();
            let (sample, obj) = ecasg_sample_set(&spec, &DVector::zeros(d)).unwrap();
            let s = sample.difference_matrix();
            assert!(s.spectral_norm() <= 0.7 * (1.0 + 1e-12));
            assert!(objective(&s, &spec).is_finite());
            assert!(obj.is_finite());
        }
    }
}
