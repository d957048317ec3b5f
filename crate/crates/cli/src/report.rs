//! The fit report written by `cpsdr fit` and read back by `cpsdr project`.

use std::path::Path;

use contour_sdr::nalgebra::{DMatrix, DVector};
use contour_sdr::{Fit, Method, Whitening};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: &str = "cpsdr.fit/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterDiagnostics {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema: String,
    pub method: Method,
    pub response: String,
    pub predictors: Vec<String>,
    /// Slices actually used.
    pub k: usize,
    pub slice_counts: Vec<usize>,
    /// All kernel eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub d_selected: usize,
    /// `"fixed"` or `"merc"`.
    pub dim_rule: String,
    /// Orthonormal basis in raw predictor coordinates, one entry per column.
    pub basis_x: Vec<Vec<f64>>,
    /// Basis in whitened coordinates, one entry per column.
    pub basis_proj: Vec<Vec<f64>>,
    /// Predictors are divided by these before whitening (all 1 unless the fit
    /// was run with `--standardize`).
    pub column_scales: Vec<f64>,
    pub center: Vec<f64>,
    /// Rows of the whitening matrix.
    pub whitening: Vec<Vec<f64>>,
    /// Whitened rows are scaled to unit length.
    pub contour: bool,
    /// Per-sample reduced predictors, one row per observation.
    pub indices: Vec<Vec<f64>>,
    pub scatter: Option<ScatterDiagnostics>,
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_columns(cols: &[Vec<f64>], nrows: usize) -> Result<DMatrix<f64>, CliError> {
    if cols.is_empty() || cols.iter().any(|c| c.len() != nrows) {
        return Err(CliError::Input(
            "model file: basis has the wrong shape".into(),
        ));
    }
    Ok(DMatrix::from_fn(nrows, cols.len(), |i, j| cols[j][i]))
}

impl FitReport {
    /// Assembles the report for a fit on `x / column_scales`.
    pub fn new(
        fit: &Fit,
        response: String,
        predictors: Vec<String>,
        column_scales: Vec<f64>,
        indices: &DMatrix<f64>,
        dim_rule: &str,
    ) -> Self {
        // bᵀ(x / s) = (b / s)ᵀx: map the scaled-coordinate basis back to raw coordinates
        let scaled = fit.basis_x();
        let raw = DMatrix::from_fn(scaled.nrows(), scaled.ncols(), |i, j| {
            scaled[(i, j)] / column_scales[i]
        });
        let basis_x = contour_sdr::linalg::orthonormalize(&raw).unwrap_or(raw);
        Self {
            schema: SCHEMA.to_string(),
            method: fit.method,
            response,
            predictors,
            k: fit.slices.k(),
            slice_counts: fit.slices.counts.clone(),
            eigenvalues: fit.subspace.eigenvalues.clone(),
            d_selected: fit.d(),
            dim_rule: dim_rule.to_string(),
            basis_x: columns(&basis_x),
            basis_proj: columns(&fit.subspace.basis_proj),
            column_scales,
            center: fit.whitening.center.iter().copied().collect(),
            whitening: rows(&fit.whitening.inv_sqrt),
            contour: fit.whitening.contour,
            indices: rows(indices),
            scatter: fit.scatter.as_ref().map(|s| ScatterDiagnostics {
                iterations: s.iterations_used,
                residual: s.final_residual,
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are always serializable") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let report: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("model file is not a fit report: {e}")))?;
        if report.schema != SCHEMA {
            return Err(CliError::Input(format!(
                "unsupported model file schema '{}' (expected '{SCHEMA}')",
                report.schema
            )));
        }
        Ok(report)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn p(&self) -> usize {
        self.predictors.len()
    }

    /// Reduced predictors `η̂` for raw predictor rows `x`.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, CliError> {
        let p = self.p();
        if x.ncols() != p
            || self.column_scales.len() != p
            || self.center.len() != p
            || self.whitening.len() != p
            || self.whitening.iter().any(|r| r.len() != p)
        {
            return Err(CliError::Input(format!(
                "dimension mismatch: model has {p} predictors, data has {}",
                x.ncols()
            )));
        }
        let scaled = DMatrix::from_fn(x.nrows(), p, |i, j| x[(i, j)] / self.column_scales[j]);
        let whitening = Whitening {
            center: DVector::from_vec(self.center.clone()),
            inv_sqrt: DMatrix::from_fn(p, p, |i, j| self.whitening[i][j]),
            contour: self.contour,
        };
        let basis = from_columns(&self.basis_proj, p)?;
        Ok(whitening.apply(&scaled)? * basis)
    }
}
