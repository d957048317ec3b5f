use nalgebra::DMatrix;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no samples")]
    NoSamples,

    #[error("degenerate sample at location estimate (row {row})")]
    DegenerateSample { row: usize },

    #[error("cannot project the center point (row {row})")]
    CenterPoint { row: usize },

    #[error("scatter numerically singular (eigenvalue ratio {ratio:.3e})")]
    SingularScatter { ratio: f64 },

    #[error("scatter iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        /// Last scatter iterate.
        last: Box<DMatrix<f64>>,
    },

    #[error("response has a single value")]
    ConstantResponse,

    #[error("slice too small (slice {slice} has {count} samples)")]
    SliceTooSmall { slice: usize, count: usize },

    #[error("basis not full rank")]
    RankDeficient,

    #[error("kernel matrix is null")]
    NullKernel,
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSample { .. }
                | Error::CenterPoint { .. }
                | Error::SingularScatter { .. }
                | Error::NotConverged { .. }
                | Error::SliceTooSmall { .. }
                | Error::RankDeficient
                | Error::NullKernel
        )
    }
}
