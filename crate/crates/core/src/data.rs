use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Predictors (`n × p`, one row per sample) with a scalar response.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl DataMatrix {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::InvalidInput(format!(
                "response has {} entries but there are {n} rows",
                y.len()
            )));
        }
        if p < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 predictors, got {p}"
            )));
        }
        if n < p + 1 {
            return Err(Error::InvalidInput(format!(
                "need at least p + 1 = {} samples, got {n}",
                p + 1
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "data contains non-finite entries".into(),
            ));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>) {
        (self.x, self.y)
    }
}
