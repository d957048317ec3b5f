//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues threshold relative to the largest one below which a scatter
/// matrix is treated as singular.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
///
/// Columns of the returned matrix are the matching unit eigenvectors. Equal
/// eigenvalues keep the order produced by the solver.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let p = m.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(p, p, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// The unique symmetric positive-definite `T` with `T * s * T = I`.
pub fn symmetric_inverse_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !s.is_square() || s.nrows() == 0 {
        return Err(Error::InvalidInput(
            "scatter must be a non-empty square matrix".into(),
        ));
    }
    let (values, vectors) = sym_eigen_desc(s);
    let largest = values[0];
    let smallest = *values.last().unwrap();
    if largest.is_nan() || largest <= 0.0 || smallest <= SINGULAR_RATIO * largest {
        return Err(Error::SingularScatter {
            ratio: if largest > 0.0 {
                smallest / largest
            } else {
                0.0
            },
        });
    }
    let scale = DVector::from_iterator(values.len(), values.iter().map(|v| v.sqrt().recip()));
    let scaled = DMatrix::from_fn(s.nrows(), s.ncols(), |r, c| vectors[(r, c)] * scale[c]);
    Ok(symmetrize(&(scaled * vectors.transpose())))
}

/// Orthonormal basis for the column span of `b` via Householder QR.
///
/// Column `j` of the result is oriented so that it has a positive inner
/// product with column `j` of `b`. Fails when `b` is (numerically) rank
/// deficient.
pub fn orthonormalize(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, d) = b.shape();
    if d == 0 || d > p {
        return Err(Error::RankDeficient);
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("basis has non-finite entries".into()));
    }
    let qr = b.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    let col_scale = (0..d).map(|j| b.column(j).norm()).fold(0.0, f64::max);
    for j in 0..d {
        let rjj = r[(j, j)];
        if rjj.is_nan() || rjj.abs() <= 1e-10 * col_scale {
            return Err(Error::RankDeficient);
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Median of a slice; the mean of the two middle order statistics for even
/// lengths. Sorts the input in place.
pub fn median_in_place(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}
