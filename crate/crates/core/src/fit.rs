//! End-to-end estimation: scatter → projection → slicing → kernel → basis.

use nalgebra::{DMatrix, DVector};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::kernels::{kernel_classical, kernel_contour, slice_moments, KernelMatrix, Method};
use crate::projection::{contour_project, project, ProjectedSample};
use crate::scatter::{coordinatewise_median, tyler_scatter, ScatterEstimate, TylerConfig};
use crate::slicing::{slice_response, SliceAssignment};
use crate::subspace::{back_transform, merc, top_eigen, SubspaceEstimate, DEFAULT_D_MAX};

pub const DEFAULT_SLICES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimChoice {
    Fixed(usize),
    /// Pick the dimension by the eigenvalue-ratio criterion, capped at
    /// `d_max` (and at `p − 1`).
    Merc {
        d_max: usize,
    },
}

impl Default for DimChoice {
    fn default() -> Self {
        DimChoice::Merc {
            d_max: DEFAULT_D_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub slices: usize,
    pub dim: DimChoice,
    pub tyler: TylerConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            slices: DEFAULT_SLICES,
            dim: DimChoice::default(),
            tyler: TylerConfig::default(),
        }
    }
}

/// Affine map from raw predictors to the coordinates a kernel was built in.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    pub center: DVector<f64>,
    pub inv_sqrt: DMatrix<f64>,
    /// Rows are additionally scaled to unit length (contour projection).
    pub contour: bool,
}

impl Whitening {
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if self.contour {
            Ok(contour_project(x, &self.center, &self.inv_sqrt)?.0)
        } else {
            let p = self.center.len();
            if x.ncols() != p {
                return Err(Error::InvalidInput(format!(
                    "expected {p} predictor columns, got {}",
                    x.ncols()
                )));
            }
            let mut c = x.clone();
            for (mut col, m) in c.column_iter_mut().zip(self.center.iter()) {
                col.add_scalar_mut(-m);
            }
            Ok(c * &self.inv_sqrt)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub method: Method,
    pub slices: SliceAssignment,
    pub kernel: KernelMatrix,
    /// Basis with `basis_x` filled in.
    pub subspace: SubspaceEstimate,
    pub whitening: Whitening,
    /// Present for contour-projected methods.
    pub scatter: Option<ScatterEstimate>,
}

impl Fit {
    pub fn basis_x(&self) -> &DMatrix<f64> {
        self.subspace
            .basis_x
            .as_ref()
            .expect("fits always carry a back-transformed basis")
    }

    pub fn d(&self) -> usize {
        self.subspace.d
    }

    /// Reduced predictors `η̂ᵢⱼ = (column j of basis_proj)ᵀ x⃗ᵢ` for every row.
    pub fn indices(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.whitening.apply(x)? * &self.subspace.basis_proj)
    }
}

/// Robust scatter at the coordinatewise median followed by contour projection.
pub fn contour_stage(x: &DMatrix<f64>, tyler: &TylerConfig) -> Result<ProjectedSample> {
    let mu0 = coordinatewise_median(x)?;
    let est = tyler_scatter(x, &mu0, tyler)?;
    project(x, &est)
}

pub fn fit(data: &DataMatrix, method: Method, opts: &FitOptions) -> Result<Fit> {
    fit_many(data, &[method], opts)
        .pop()
        .expect("one method in, one fit out")
}

/// Fits several methods on the same data, sharing the slicing and the
/// contour projection.
pub fn fit_many(data: &DataMatrix, methods: &[Method], opts: &FitOptions) -> Vec<Result<Fit>> {
    let slices = match slice_response(data.y().as_slice(), opts.slices) {
        Ok(s) => s,
        Err(e) => return methods.iter().map(|_| Err(e.clone())).collect(),
    };
    let projected = if methods.iter().any(|m| m.is_contour_projected()) {
        Some(contour_stage(data.x(), &opts.tyler).and_then(|proj| {
            let moments = slice_moments(&proj, &slices)?;
            Ok((proj, moments))
        }))
    } else {
        None
    };

    methods
        .iter()
        .map(|&method| {
            let (kernel, whitening, scatter) = if method.is_contour_projected() {
                let (proj, moments) = match projected.as_ref().expect("computed above") {
                    Ok(v) => v,
                    Err(e) => return Err(e.clone()),
                };
                let whitening = Whitening {
                    center: proj.scatter.mu_hat.clone(),
                    inv_sqrt: proj.scatter.sigma_inv_sqrt.clone(),
                    contour: true,
                };
                (
                    kernel_contour(moments, method)?,
                    whitening,
                    Some(proj.scatter.clone()),
                )
            } else {
                let (kernel, std) = kernel_classical(data.x(), &slices, method)?;
                let whitening = Whitening {
                    center: std.mean,
                    inv_sqrt: std.inv_sqrt,
                    contour: false,
                };
                (kernel, whitening, None)
            };
            let subspace = select_subspace(&kernel, opts.dim)?;
            let subspace = back_transform(&subspace, &whitening.inv_sqrt)?;
            Ok(Fit {
                method,
                slices: slices.clone(),
                kernel,
                subspace,
                whitening,
                scatter,
            })
        })
        .collect()
}

/// Eigen-decomposes `kernel` and keeps the requested or selected dimension.
pub fn select_subspace(kernel: &KernelMatrix, dim: DimChoice) -> Result<SubspaceEstimate> {
    let p = kernel.m.nrows();
    match dim {
        DimChoice::Fixed(d) => top_eigen(kernel, d),
        DimChoice::Merc { d_max } => {
            let full = top_eigen(kernel, 1)?;
            let d = merc(&full.eigenvalues, d_max.min(p - 1))?;
            top_eigen(kernel, d)
        }
    }
}
