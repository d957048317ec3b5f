//! Projection-matrix distance between subspaces.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::orthonormalize;

/// True and estimated bases, orthonormalized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePair {
    b_true: DMatrix<f64>,
    b_est: DMatrix<f64>,
}

impl SubspacePair {
    pub fn new(b_true: &DMatrix<f64>, b_est: &DMatrix<f64>) -> Result<Self> {
        if b_true.nrows() != b_est.nrows() {
            return Err(crate::Error::InvalidInput(format!(
                "bases live in different spaces ({} vs {} rows)",
                b_true.nrows(),
                b_est.nrows()
            )));
        }
        Ok(Self {
            b_true: orthonormalize(b_true)?,
            b_est: orthonormalize(b_est)?,
        })
    }

    pub fn b_true(&self) -> &DMatrix<f64> {
        &self.b_true
    }

    pub fn b_est(&self) -> &DMatrix<f64> {
        &self.b_est
    }
}

/// `P = B(BᵀB)⁻¹Bᵀ`; `b` must already be orthonormal.
fn projector(b: &DMatrix<f64>) -> DMatrix<f64> {
    b * b.transpose()
}

/// `Δ = tr((P₀ − P̂)²) / d₀`, in `[0, (d₀ + d)/d₀]`.
pub fn delta_distance(pair: &SubspacePair) -> f64 {
    let diff = projector(&pair.b_true) - projector(&pair.b_est);
    let d0 = pair.b_true.ncols() as f64;
    ((&diff * &diff).trace() / d0).max(0.0)
}

/// Convenience wrapper orthonormalizing raw bases.
pub fn delta(b_true: &DMatrix<f64>, b_est: &DMatrix<f64>) -> Result<f64> {
    Ok(delta_distance(&SubspacePair::new(b_true, b_est)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn analytic_cases() {
        let e1 = col(&[1.0, 0.0]);
        let e2 = col(&[0.0, 1.0]);
        assert!(delta(&e1, &e1).unwrap().abs() < 1e-15);
        assert!((delta(&e1, &e2).unwrap() - 2.0).abs() < 1e-15);
        assert!((delta(&e1, &col(&[1.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn raw_beta_needs_no_normalization() {
        let beta = col(&[1.0, 1.0, 1.0, 0.0]);
        let unit = col(&[1.0, 1.0, 1.0, 0.0]) / 3f64.sqrt();
        assert!(delta(&beta, &(unit * -2.0)).unwrap() < 1e-15);
    }

    #[test]
    fn mismatched_dimension_uses_true_dimension() {
        let b0 = col(&[1.0, 0.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        // P₀ − P̂ = −e₂e₂ᵀ
        assert!((delta(&b0, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_basis_is_rejected() {
        let b = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(
            delta(&col(&[1.0, 0.0, 0.0]), &b),
            Err(Error::RankDeficient)
        ));
    }

    proptest! {
        #[test]
        fn depends_only_on_spans(seed in any::<u64>(), p in 3usize..9, d in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b0 = DMatrix::<f64>::from_fn(p, d, |_, _| StandardNormal.sample(&mut rng));
            let b = DMatrix::<f64>::from_fn(p, d, |_, _| StandardNormal.sample(&mut rng));
            let o = crate::linalg::orthonormalize(
                &DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng)),
            ).unwrap();
            let base = delta(&b0, &b).unwrap();
            let rotated = delta(&b0, &(crate::linalg::orthonormalize(&b).unwrap() * o)).unwrap();
            prop_assert!((base - rotated).abs() < 1e-12);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&base));
            // same d: tr((P₀ − P̂)²) is symmetric
            prop_assert!((base - delta(&b, &b0).unwrap()).abs() < 1e-12);
        }
    }
}
