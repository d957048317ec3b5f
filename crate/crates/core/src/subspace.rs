//! Spectral extraction of the reduction basis and dimension selection.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;
use crate::linalg::{orthonormalize, sym_eigen_desc};

pub const DEFAULT_D_MAX: usize = 5;

/// Denominators of the eigenvalue ratios are floored at this multiple of the
/// leading eigenvalue.
pub const MERC_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEstimate {
    /// All kernel eigenvalues, descending and clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Leading eigenvectors in projected (whitened) coordinates.
    pub basis_proj: DMatrix<f64>,
    /// The same directions mapped to raw predictor coordinates; `None` until
    /// [`back_transform`] runs.
    pub basis_x: Option<DMatrix<f64>>,
    pub d: usize,
}

/// Eigenvectors of the `d` largest eigenvalues of `kernel`.
///
/// Each eigenvector is signed so its largest-magnitude entry (lowest index on
/// ties) is positive. Among equal eigenvalues, vectors peaking at a lower
/// coordinate come first.
pub fn top_eigen(kernel: &KernelMatrix, d: usize) -> Result<SubspaceEstimate> {
    let p = kernel.m.nrows();
    if d == 0 || d > p {
        return Err(Error::InvalidInput(format!(
            "requested dimension {d} outside 1..={p}"
        )));
    }
    let (values, vectors) = sym_eigen_desc(&kernel.m);
    let mut columns: Vec<(f64, usize, DMatrix<f64>)> = values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let mut col = vectors.column(j).into_owned();
            let peak = peak_index(col.as_slice());
            if col[peak] < 0.0 {
                col.neg_mut();
            }
            (
                v.max(0.0),
                peak,
                DMatrix::from_column_slice(p, 1, col.as_slice()),
            )
        })
        .collect();
    // exact ties only: eigenvalues from the solver are already sorted
    columns.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let eigenvalues = columns.iter().map(|c| c.0).collect();
    let basis_proj = DMatrix::from_fn(p, d, |r, c| columns[c].2[(r, 0)]);
    Ok(SubspaceEstimate {
        eigenvalues,
        basis_proj,
        basis_x: None,
        d,
    })
}

fn peak_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Maps projected-coordinate directions to raw coordinates: the columns of
/// `inv_sqrt · basis_proj`, orthonormalized by QR.
pub fn back_transform(est: &SubspaceEstimate, inv_sqrt: &DMatrix<f64>) -> Result<SubspaceEstimate> {
    let p = est.basis_proj.nrows();
    if inv_sqrt.shape() != (p, p) {
        return Err(Error::InvalidInput(
            "whitening matrix has the wrong shape".into(),
        ));
    }
    let basis_x = orthonormalize(&(inv_sqrt * &est.basis_proj))?;
    Ok(SubspaceEstimate {
        basis_x: Some(basis_x),
        ..est.clone()
    })
}

/// Maximal eigenvalue ratio criterion: the smallest `j ≤ d_max` maximizing
/// `λⱼ / max(λⱼ₊₁, ε·λ₁)`.
pub fn merc(eigenvalues: &[f64], d_max: usize) -> Result<usize> {
    let p = eigenvalues.len();
    if d_max == 0 || d_max + 1 > p {
        return Err(Error::InvalidInput(format!(
            "d_max must satisfy 1 <= d_max < p = {p}, got {d_max}"
        )));
    }
    if eigenvalues.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::InvalidInput(
            "eigenvalues must be nonnegative".into(),
        ));
    }
    if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidInput(
            "eigenvalues must be nonincreasing".into(),
        ));
    }
    let lead = eigenvalues[0];
    if lead == 0.0 {
        return Err(Error::NullKernel);
    }
    let floor = MERC_FLOOR * lead;
    let mut best = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for j in 1..=d_max {
        let ratio = eigenvalues[j - 1] / eigenvalues[j].max(floor);
        if ratio > best_ratio {
            best_ratio = ratio;
            best = j;
        }
    }
    Ok(best)
}
