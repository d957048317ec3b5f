//! Contour projection: `x⃗ᵢ = Σ̂^{-1/2}(xᵢ − μ̂) / ‖xᵢ − μ̂‖_Σ̂`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scatter::ScatterEstimate;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSample {
    /// Unit-norm projected predictors, one row per sample.
    pub x_proj: DMatrix<f64>,
    /// Mahalanobis radii `Rᵢ = ‖xᵢ − μ̂‖_Σ̂`.
    pub radii: DVector<f64>,
    pub scatter: ScatterEstimate,
}

impl ProjectedSample {
    pub fn n(&self) -> usize {
        self.x_proj.nrows()
    }

    pub fn p(&self) -> usize {
        self.x_proj.ncols()
    }
}

pub fn project(x: &DMatrix<f64>, est: &ScatterEstimate) -> Result<ProjectedSample> {
    let (x_proj, radii) = contour_project(x, &est.mu_hat, &est.sigma_inv_sqrt)?;
    Ok(ProjectedSample {
        x_proj,
        radii,
        scatter: est.clone(),
    })
}

/// Whitens each row with `inv_sqrt` about `center` and scales it to unit
/// length. Returns the projected rows and the whitened lengths.
pub fn contour_project(
    x: &DMatrix<f64>,
    center: &DVector<f64>,
    inv_sqrt: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let p = center.len();
    if x.ncols() != p || inv_sqrt.shape() != (p, p) {
        return Err(Error::InvalidInput(format!(
            "expected {p} predictor columns, got {}",
            x.ncols()
        )));
    }
    let mut centered = x.clone();
    for (mut col, m) in centered.column_iter_mut().zip(center.iter()) {
        col.add_scalar_mut(-m);
    }
    let scale = centered.amax();
    for (row, r) in centered.row_iter().enumerate() {
        if r.norm() <= 1e-12 * scale {
            return Err(Error::CenterPoint { row });
        }
    }
    // inv_sqrt is symmetric, so rows of centered · inv_sqrt are (Σ^{-1/2} vᵢ)ᵀ
    let mut whitened = centered * inv_sqrt;
    let mut radii = DVector::zeros(x.nrows());
    for (i, mut row) in whitened.row_iter_mut().enumerate() {
        let r = row.norm();
        if r.is_nan() || r <= 0.0 || !r.is_finite() {
            return Err(Error::CenterPoint { row: i });
        }
        row /= r;
        radii[i] = r;
    }
    Ok((whitened, radii))
}

/// Projects one row by the literal formula, with the Mahalanobis norm taken
/// from a Cholesky solve against `Σ̂` instead of the whitened length.
pub fn project_row_direct(x: &DVector<f64>, est: &ScatterEstimate) -> Result<(DVector<f64>, f64)> {
    let v = x - &est.mu_hat;
    let radius = est.mahalanobis_norm(&v)?;
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::CenterPoint { row: 0 });
    }
    Ok((&est.sigma_inv_sqrt * v / radius, radius))
}
