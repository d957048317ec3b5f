//! Robust sufficient dimension reduction for heavy-tailed predictors.
//!
//! Predictors are centred at the coordinatewise median, whitened by Tyler's
//! scatter matrix and projected onto the unit sphere before the usual slicing
//! kernels (SIR, SAVE, directional regression) are applied. The classical
//! moment-standardized kernels are available for comparison, together with a
//! Monte Carlo harness for the benchmark models in [`simulation`].
//!
//! ```
//! use contour_sdr::{fit, DataMatrix, FitOptions, Method};
//! use nalgebra::{DMatrix, DVector};
//!
//! let x = DMatrix::from_fn(60, 3, |i, j| ((i * 7 + j * 13) % 17) as f64 - 8.0 + 0.1 * j as f64);
//! let y = DVector::from_fn(60, |i, _| x[(i, 0)] + 0.5 * x[(i, 1)]);
//! let data = DataMatrix::new(x, y).unwrap();
//! let f = fit(&data, Method::CpSir, &FitOptions::default()).unwrap();
//! assert_eq!(f.basis_x().nrows(), 3);
//! ```

pub mod data;
pub mod error;
pub mod evaluation;
pub mod fit;
pub mod kernels;
pub mod linalg;
pub mod projection;
pub mod scatter;
pub mod simulation;
pub mod slicing;
pub mod subspace;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use evaluation::{delta, delta_distance, SubspacePair};
pub use fit::{fit, fit_many, DimChoice, Fit, FitOptions, Whitening};
pub use kernels::{KernelMatrix, Method, SliceMoments};
pub use projection::{project, ProjectedSample};
pub use scatter::{
    coordinatewise_median, tyler_scatter, LocationMode, ScatterEstimate, TylerConfig,
};
pub use slicing::{slice_response, SliceAssignment};
pub use subspace::{back_transform, merc, top_eigen, SubspaceEstimate};

pub use nalgebra;
