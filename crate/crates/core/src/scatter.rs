//! Location and Tyler's distribution-free scatter estimate.
//!
//! The scatter is the fixed point of
//!
//! ```text
//! Σ ∝ n⁻¹ Σᵢ (xᵢ − μ)(xᵢ − μ)ᵀ / ‖xᵢ − μ‖²_Σ,      ‖v‖²_Σ = vᵀ Σ⁻¹ v
//! ```
//!
//! normalized to `tr(Σ) = p` after every step. The location is either held
//! at the coordinatewise median or updated by the weighted-mean step with
//! weights `1 / ‖xᵢ − μ‖_Σ`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{median_in_place, symmetric_inverse_sqrt, symmetrize};

/// Rows closer to the location than this fraction of the data's spread are
/// degenerate.
const DEGENERATE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationMode {
    /// Keep the coordinatewise median for every iteration.
    #[default]
    FixedMedian,
    /// Alternate the scatter step with the weighted location step.
    Iterate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TylerConfig {
    /// Relative Frobenius tolerance on the fixed-point residual.
    pub tol: f64,
    pub max_iter: usize,
    pub location_mode: LocationMode,
}

impl Default for TylerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            location_mode: LocationMode::FixedMedian,
        }
    }
}

impl TylerConfig {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iter == 0 {
            return Err(Error::InvalidInput(
                "tolerance must be positive and max_iter at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Location, trace-normalized scatter and its symmetric inverse square root.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterEstimate {
    pub mu_hat: DVector<f64>,
    pub sigma_hat: DMatrix<f64>,
    pub sigma_inv_sqrt: DMatrix<f64>,
    pub iterations_used: usize,
    pub final_residual: f64,
}

impl ScatterEstimate {
    pub fn p(&self) -> usize {
        self.mu_hat.len()
    }

    /// `‖v‖_Σ̂ = sqrt(vᵀ Σ̂⁻¹ v)`, evaluated through a Cholesky solve rather
    /// than the inverse square root.
    pub fn mahalanobis_norm(&self, v: &DVector<f64>) -> Result<f64> {
        let chol =
            Cholesky::new(self.sigma_hat.clone()).ok_or(Error::SingularScatter { ratio: 0.0 })?;
        Ok(v.dot(&chol.solve(v)).sqrt())
    }
}

/// Columnwise sample median; for even `n` the average of the two middle values.
pub fn coordinatewise_median(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    if x.nrows() == 0 {
        return Err(Error::NoSamples);
    }
    let mut buf = Vec::with_capacity(x.nrows());
    Ok(DVector::from_iterator(
        x.ncols(),
        x.column_iter().map(|col| {
            buf.clear();
            buf.extend(col.iter().copied());
            median_in_place(&mut buf).expect("non-empty column")
        }),
    ))
}

/// Tyler's scatter started from the identity.
pub fn tyler_scatter(
    x: &DMatrix<f64>,
    mu_hat: &DVector<f64>,
    cfg: &TylerConfig,
) -> Result<ScatterEstimate> {
    tyler_scatter_from(x, mu_hat, &DMatrix::identity(x.ncols(), x.ncols()), cfg)
}

/// Tyler's scatter from an arbitrary SPD starting matrix.
pub fn tyler_scatter_from(
    x: &DMatrix<f64>,
    mu_hat: &DVector<f64>,
    start: &DMatrix<f64>,
    cfg: &TylerConfig,
) -> Result<ScatterEstimate> {
    cfg.validate()?;
    let (n, p) = x.shape();
    if n == 0 {
        return Err(Error::NoSamples);
    }
    if mu_hat.len() != p || start.shape() != (p, p) {
        return Err(Error::InvalidInput(
            "location/scatter dimension mismatch".into(),
        ));
    }
    if n <= p {
        return Err(Error::InvalidInput(format!(
            "need n > p, got n = {n}, p = {p}"
        )));
    }

    let scale = data_scale(x, mu_hat);
    let mut mu = mu_hat.clone();
    let mut sigma = normalize_trace(symmetrize(start))?;
    let mut centered = center_checked(x, &mu, scale)?;

    for iteration in 1..=cfg.max_iter {
        let rhs = fixed_point_map(&centered, &sigma)?;
        let residual = (&sigma - &rhs).norm() / sigma.norm();

        let next_mu = match cfg.location_mode {
            LocationMode::FixedMedian => None,
            LocationMode::Iterate => Some(location_step(x, &centered, &rhs)?),
        };
        let mu_shift = next_mu
            .as_ref()
            .map_or(0.0, |m| (m - &mu).norm() / scale.max(f64::MIN_POSITIVE));

        if residual < cfg.tol && mu_shift < cfg.tol {
            let sigma_inv_sqrt = symmetric_inverse_sqrt(&sigma)?;
            return Ok(ScatterEstimate {
                mu_hat: mu,
                sigma_hat: sigma,
                sigma_inv_sqrt,
                iterations_used: iteration,
                final_residual: residual,
            });
        }

        sigma = rhs;
        if let Some(m) = next_mu {
            mu = m;
            centered = center_checked(x, &mu, scale)?;
        }
        if iteration == cfg.max_iter {
            return Err(Error::NotConverged {
                iterations: iteration,
                residual,
                last: Box::new(sigma),
            });
        }
    }
    unreachable!("max_iter >= 1")
}

/// Largest absolute deviation from the location over all entries.
fn data_scale(x: &DMatrix<f64>, mu: &DVector<f64>) -> f64 {
    let mut worst = 0.0f64;
    for (j, m) in mu.iter().enumerate() {
        for v in x.column(j).iter() {
            worst = worst.max((v - m).abs());
        }
    }
    worst
}

fn center_checked(x: &DMatrix<f64>, mu: &DVector<f64>, scale: f64) -> Result<DMatrix<f64>> {
    let mut centered = x.clone();
    for (mut col, m) in centered.column_iter_mut().zip(mu.iter()) {
        col.add_scalar_mut(-m);
    }
    for (row, r) in centered.row_iter().enumerate() {
        if r.norm() <= DEGENERATE_RATIO * scale {
            return Err(Error::DegenerateSample { row });
        }
    }
    Ok(centered)
}

fn normalize_trace(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows() as f64;
    let tr = m.trace();
    if tr.is_nan() || tr <= 0.0 || !tr.is_finite() {
        return Err(Error::SingularScatter { ratio: 0.0 });
    }
    Ok(m * (p / tr))
}

/// One application of the scatter map at `sigma`, normalized to trace `p`.
fn fixed_point_map(centered: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(sigma.clone()).ok_or(Error::SingularScatter { ratio: 0.0 })?;
    // columns of `whitened` are L⁻¹(xᵢ − μ), so their squared norms are ‖xᵢ − μ‖²_Σ
    let whitened = chol
        .l()
        .solve_lower_triangular(&centered.transpose())
        .ok_or(Error::SingularScatter { ratio: 0.0 })?;
    let norms = DVector::from_iterator(centered.nrows(), whitened.column_iter().map(|c| c.norm()));
    let mut weighted = centered.transpose();
    for (mut col, q) in weighted.column_iter_mut().zip(norms.iter()) {
        col /= q * q;
    }
    let rhs = symmetrize(&(weighted * centered)) / centered.nrows() as f64;
    normalize_trace(rhs)
}

/// Weighted location step with weights `1 / ‖xᵢ − μ‖_Σ` at the new scatter.
fn location_step(
    x: &DMatrix<f64>,
    centered: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let chol = Cholesky::new(sigma.clone()).ok_or(Error::SingularScatter { ratio: 0.0 })?;
    let whitened = chol
        .l()
        .solve_lower_triangular(&centered.transpose())
        .ok_or(Error::SingularScatter { ratio: 0.0 })?;
    let weights: Vec<f64> = whitened.column_iter().map(|c| c.norm().recip()).collect();
    let total: f64 = weights.iter().sum();
    let mut mu = DVector::zeros(x.ncols());
    for (row, w) in x.row_iter().zip(&weights) {
        mu += row.transpose() * *w;
    }
    Ok(mu / total)
}

/// `‖Σ − map(Σ)‖_F / ‖Σ‖_F` for an arbitrary scatter, with the map's output
/// normalized to trace `p`.
pub fn fixed_point_residual(
    x: &DMatrix<f64>,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
) -> Result<f64> {
    let centered = center_checked(x, mu, data_scale(x, mu))?;
    let rhs = fixed_point_map(&centered, sigma)?;
    Ok((sigma - rhs).norm() / sigma.norm())
}
