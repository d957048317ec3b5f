//! Slice moments and inverse-regression kernel matrices.
//!
//! The contour-projected kernels work on unit-norm rows `x⃗ᵢ` and use raw
//! (uncentered) slice second moments `Σ̂ₖ = nₖ⁻¹ Σ_{i∈k} x⃗ᵢx⃗ᵢᵀ` together
//! with `τ̂ₖ`, the median eigenvalue of `Σ̂ₖ`. The classical baselines work on
//! rows standardized by the sample mean and covariance.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{median_in_place, sym_eigen_desc, symmetric_inverse_sqrt, symmetrize};
use crate::projection::ProjectedSample;
use crate::slicing::SliceAssignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CpSir,
    CpSave,
    CpDr,
    Sir,
    Save,
    Dr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::CpDr,
        Method::Dr,
        Method::CpSir,
        Method::Sir,
        Method::CpSave,
        Method::Save,
    ];

    pub fn is_contour_projected(self) -> bool {
        matches!(self, Method::CpSir | Method::CpSave | Method::CpDr)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CpSir => "cp-sir",
            Method::CpSave => "cp-save",
            Method::CpDr => "cp-dr",
            Method::Sir => "sir",
            Method::Save => "save",
            Method::Dr => "dr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown method '{s}' (expected cp-sir, cp-save, cp-dr, sir, save or dr)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub m: DMatrix<f64>,
    pub method: Method,
}

/// Per-slice plug-in moments of the projected predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMoments {
    pub p_hat: Vec<f64>,
    pub m_hat: Vec<DVector<f64>>,
    pub s_hat: Vec<DMatrix<f64>>,
    pub tau_hat: Vec<f64>,
}

impl SliceMoments {
    pub fn k(&self) -> usize {
        self.p_hat.len()
    }

    pub fn p(&self) -> usize {
        self.m_hat.first().map_or(0, |m| m.len())
    }

    fn sir_part(&self) -> DMatrix<f64> {
        let p = self.p();
        self.p_hat
            .iter()
            .zip(&self.m_hat)
            .fold(DMatrix::zeros(p, p), |acc, (w, m)| {
                acc + m * m.transpose() * *w
            })
    }
}

/// Median eigenvalue of a symmetric matrix; the mean of the two middle
/// eigenvalues when the dimension is even.
pub fn median_eigenvalue(s: &DMatrix<f64>) -> f64 {
    let (mut values, _) = sym_eigen_desc(s);
    median_in_place(&mut values).expect("non-empty matrix")
}

pub fn slice_moments(proj: &ProjectedSample, slices: &SliceAssignment) -> Result<SliceMoments> {
    let (p_hat, m_hat, s_hat) = raw_slice_moments(&proj.x_proj, slices)?;
    let tau_hat = s_hat.iter().map(median_eigenvalue).collect();
    Ok(SliceMoments {
        p_hat,
        m_hat,
        s_hat,
        tau_hat,
    })
}

type RawMoments = (Vec<f64>, Vec<DVector<f64>>, Vec<DMatrix<f64>>);

/// Proportions, means and uncentered second moments of `rows` within slices.
fn raw_slice_moments(rows: &DMatrix<f64>, slices: &SliceAssignment) -> Result<RawMoments> {
    let (n, p) = rows.shape();
    if slices.n() != n {
        return Err(Error::InvalidInput(format!(
            "{} slice labels for {n} samples",
            slices.n()
        )));
    }
    if let Some((slice, &count)) = slices.counts.iter().enumerate().find(|(_, &c)| c < 2) {
        return Err(Error::SliceTooSmall { slice, count });
    }
    let k = slices.k();
    let mut sums = vec![DVector::zeros(p); k];
    let mut seconds = vec![DMatrix::zeros(p, p); k];
    for (row, &label) in rows.row_iter().zip(&slices.labels) {
        let v = row.transpose();
        seconds[label].syger(1.0, &v, &v, 1.0);
        sums[label] += v;
    }
    let p_hat = slices.proportions();
    let mut m_hat = Vec::with_capacity(k);
    let mut s_hat = Vec::with_capacity(k);
    for ((sum, second), &count) in sums.into_iter().zip(seconds).zip(&slices.counts) {
        let c = count as f64;
        m_hat.push(sum / c);
        // syger fills the lower triangle only
        s_hat.push(fill_upper(second) / c);
    }
    Ok((p_hat, m_hat, s_hat))
}

fn fill_upper(mut m: DMatrix<f64>) -> DMatrix<f64> {
    m.fill_upper_triangle_with_lower_triangle();
    m
}

/// `Σₖ p̂ₖ m̂ₖ m̂ₖᵀ`.
pub fn kernel_cp_sir(m: &SliceMoments) -> KernelMatrix {
    KernelMatrix {
        m: symmetrize(&m.sir_part()),
        method: Method::CpSir,
    }
}

/// `Σₖ p̂ₖ (τ̂ₖ I − Σ̂ₖ)²`.
pub fn kernel_cp_save(m: &SliceMoments) -> KernelMatrix {
    let p = m.p();
    let mut acc = DMatrix::zeros(p, p);
    for ((w, s), tau) in m.p_hat.iter().zip(&m.s_hat).zip(&m.tau_hat) {
        let d = shifted(s, *tau);
        acc += &d * &d * *w;
    }
    KernelMatrix {
        m: symmetrize(&acc),
        method: Method::CpSave,
    }
}

/// `τ I − S`.
fn shifted(s: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let mut d = -s;
    for i in 0..d.nrows() {
        d[(i, i)] += tau;
    }
    d
}

/// Contour-projected directional regression kernel in closed form.
///
/// With `Dₖ = τ̂ₖI − Σ̂ₖ`, `M_SIR = Σₖ p̂ₖm̂ₖm̂ₖᵀ`, `s = Σₖ p̂ₖ‖m̂ₖ‖²`,
/// `D̄ = Σₖ p̂ₖDₖ`, `m̄ = Σₖ p̂ₖm̂ₖ` and `Gₖ = m̂ₖm̄ᵀ + m̄m̂ₖᵀ`:
///
/// ```text
/// M = 2[Σₖp̂ₖDₖ² + M_SIR² + s·M_SIR] + 2D̄² + 2Σₖp̂ₖ(DₖGₖ + GₖDₖ)
/// ```
///
/// This is the exact expansion of the pairwise sum computed by
/// [`kernel_dr_pairwise`] and needs only `O(K)` matrix products. The last two
/// terms vanish when the projected sample satisfies `Σₖp̂ₖτ̂ₖ = 1/p`,
/// `n⁻¹Σᵢx⃗ᵢx⃗ᵢᵀ = I/p` and `n⁻¹Σᵢx⃗ᵢ = 0`, which leaves
/// [`kernel_cp_dr_simplified`].
pub fn kernel_cp_dr(m: &SliceMoments) -> KernelMatrix {
    let p = m.p();
    let mut d_bar = DMatrix::zeros(p, p);
    let mut m_bar = DVector::zeros(p);
    for ((w, s), (tau, mean)) in m
        .p_hat
        .iter()
        .zip(&m.s_hat)
        .zip(m.tau_hat.iter().zip(&m.m_hat))
    {
        d_bar += shifted(s, *tau) * *w;
        m_bar += mean * *w;
    }
    let mut centering = &d_bar * &d_bar;
    for ((w, s), (tau, mean)) in m
        .p_hat
        .iter()
        .zip(&m.s_hat)
        .zip(m.tau_hat.iter().zip(&m.m_hat))
    {
        let d = shifted(s, *tau);
        let g = mean * m_bar.transpose() + &m_bar * mean.transpose();
        centering += (&d * &g + &g * &d) * *w;
    }
    let simplified = kernel_cp_dr_simplified(m).m;
    KernelMatrix {
        m: symmetrize(&(simplified + centering * 2.0)),
        method: Method::CpDr,
    }
}

/// Direct plug-in of the population identity
///
/// ```text
/// M = 2[(Σₖp̂ₖτ̂ₖ²)I + Σₖp̂ₖΣ̂ₖ² + M_SIR² + (Σₖp̂ₖ‖m̂ₖ‖²)M_SIR − 2Σₖp̂ₖτ̂ₖΣ̂ₖ]
/// ```
///
/// which drops the sample centering terms kept by [`kernel_cp_dr`].
pub fn kernel_cp_dr_simplified(m: &SliceMoments) -> KernelMatrix {
    let p = m.p();
    let sir = m.sir_part();
    let mut tau_sq = 0.0;
    let mut mean_sq = 0.0;
    let mut acc = DMatrix::zeros(p, p);
    for ((w, s), (tau, mean)) in m
        .p_hat
        .iter()
        .zip(&m.s_hat)
        .zip(m.tau_hat.iter().zip(&m.m_hat))
    {
        tau_sq += w * tau * tau;
        mean_sq += w * mean.norm_squared();
        acc += (s * s - s * (2.0 * tau)) * *w;
    }
    acc += &sir * &sir + &sir * mean_sq;
    for i in 0..p {
        acc[(i, i)] += tau_sq;
    }
    KernelMatrix {
        m: symmetrize(&(acc * 2.0)),
        method: Method::CpDr,
    }
}

/// `Σₖ Σₗ p̂ₖp̂ₗ [(τ̂ₖ + τ̂ₗ)I − Âₖₗ]²` with
/// `Âₖₗ = Σ̂ₖ + Σ̂ₗ − m̂ₖm̂ₗᵀ − m̂ₗm̂ₖᵀ`.
pub fn kernel_dr_pairwise(m: &SliceMoments) -> KernelMatrix {
    KernelMatrix {
        m: pairwise_dr(&m.p_hat, &m.m_hat, &m.s_hat, &m.tau_hat),
        method: Method::CpDr,
    }
}

fn pairwise_dr(
    p_hat: &[f64],
    m_hat: &[DVector<f64>],
    s_hat: &[DMatrix<f64>],
    level: &[f64],
) -> DMatrix<f64> {
    let p = m_hat[0].len();
    let k = p_hat.len();
    let mut acc = DMatrix::zeros(p, p);
    for a in 0..k {
        for b in 0..k {
            let cross = &m_hat[a] * m_hat[b].transpose();
            let a_kl = &s_hat[a] + &s_hat[b] - &cross - cross.transpose();
            let e = shifted(&a_kl, level[a] + level[b]);
            acc += &e * &e * (p_hat[a] * p_hat[b]);
        }
    }
    symmetrize(&acc)
}

/// Sample mean, covariance (divisor `n`) and the covariance's symmetric
/// inverse square root.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
}

impl Standardization {
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::NoSamples);
        }
        let mean = x.row_mean().transpose();
        let centered = center(x, &mean);
        let cov = symmetrize(&(centered.transpose() * &centered)) / n as f64;
        let inv_sqrt = symmetric_inverse_sqrt(&cov)?;
        Ok(Self {
            mean,
            cov,
            inv_sqrt,
        })
    }

    /// Rows `zᵢ = S̄^{-1/2}(xᵢ − x̄)`.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        center(x, &self.mean) * &self.inv_sqrt
    }
}

fn center(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for (mut col, m) in c.column_iter_mut().zip(mean.iter()) {
        col.add_scalar_mut(-m);
    }
    c
}

/// Classical SIR, SAVE or DR on sample-standardized predictors.
pub fn kernel_classical(
    x: &DMatrix<f64>,
    slices: &SliceAssignment,
    method: Method,
) -> Result<(KernelMatrix, Standardization)> {
    if method.is_contour_projected() {
        return Err(Error::InvalidInput(format!(
            "{method} is not a classical method"
        )));
    }
    let std = Standardization::fit(x)?;
    let z = std.apply(x);
    let (p_hat, m_hat, s_hat) = raw_slice_moments(&z, slices)?;
    let p = x.ncols();
    let m = match method {
        Method::Sir => p_hat
            .iter()
            .zip(&m_hat)
            .fold(DMatrix::zeros(p, p), |acc, (w, m)| {
                acc + m * m.transpose() * *w
            }),
        Method::Save => {
            let mut acc = DMatrix::zeros(p, p);
            for ((w, mean), second) in p_hat.iter().zip(&m_hat).zip(&s_hat) {
                let cov = second - mean * mean.transpose();
                let d = shifted(&cov, 1.0);
                acc += &d * &d * *w;
            }
            acc
        }
        Method::Dr => pairwise_dr(&p_hat, &m_hat, &s_hat, &vec![1.0; p_hat.len()]),
        _ => unreachable!(),
    };
    Ok((
        KernelMatrix {
            m: symmetrize(&m),
            method,
        },
        std,
    ))
}

/// Contour-projected kernel of the requested method.
pub fn kernel_contour(m: &SliceMoments, method: Method) -> Result<KernelMatrix> {
    match method {
        Method::CpSir => Ok(kernel_cp_sir(m)),
        Method::CpSave => Ok(kernel_cp_save(m)),
        Method::CpDr => Ok(kernel_cp_dr(m)),
        other => Err(Error::InvalidInput(format!(
            "{other} is not a contour-projected method"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_inverse_sqrt;
    use crate::projection::project;
    use crate::scatter::{coordinatewise_median, tyler_scatter, ScatterEstimate, TylerConfig};
    use crate::slicing::slice_response;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    fn identity_scatter(p: usize) -> ScatterEstimate {
        ScatterEstimate {
            mu_hat: DVector::zeros(p),
            sigma_hat: DMatrix::identity(p, p),
            sigma_inv_sqrt: DMatrix::identity(p, p),
            iterations_used: 0,
            final_residual: 0.0,
        }
    }

    fn one_slice(n: usize) -> SliceAssignment {
        SliceAssignment {
            labels: vec![0; n],
            counts: vec![n],
            boundaries: vec![],
        }
    }

    fn four_points() -> ProjectedSample {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        project(&x, &identity_scatter(2)).unwrap()
    }

    /// Random projected sample with random labels in `0..k` (all slices ≥ 2).
    fn random_moments(
        rng: &mut ChaCha8Rng,
        n: usize,
        p: usize,
        k: usize,
    ) -> (ProjectedSample, SliceAssignment) {
        let x = DMatrix::from_fn(n, p, |_, _| {
            let w: f64 = StandardNormal.sample(rng);
            w + 0.3
        });
        let proj = project(&x, &identity_scatter(p)).unwrap();
        let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        for i in (1..n).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let mut counts = vec![0; k];
        for &l in &labels {
            counts[l] += 1;
        }
        (
            proj,
            SliceAssignment {
                labels,
                counts,
                boundaries: vec![],
            },
        )
    }

    /// Entry-by-entry matrix product, used by the oracles below.
    fn naive_mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
            (0..a.ncols()).map(|t| a[(i, t)] * b[(t, j)]).sum()
        })
    }

    fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn symmetric_four_point_moments() {
        let proj = four_points();
        let m = slice_moments(&proj, &one_slice(4)).unwrap();
        assert!(m.m_hat[0].amax() < 1e-15);
        assert!((&m.s_hat[0] - diag(&[0.5, 0.5])).amax() < 1e-15);
        assert!((m.tau_hat[0] - 0.5).abs() < 1e-15);
        assert!(kernel_cp_sir(&m).m.amax() < 1e-15);
        assert!(kernel_dr_pairwise(&m).m.amax() < 1e-15);
    }

    #[test]
    fn median_eigenvalue_conventions() {
        assert!((median_eigenvalue(&diag(&[0.1, 0.2, 0.7])) - 0.2).abs() < 1e-15);
        assert!((median_eigenvalue(&diag(&[0.1, 0.2, 0.3, 0.4])) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn moments_match_per_slice_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let (proj, slices) = random_moments(&mut rng, 30, 4, 3);
        let m = slice_moments(&proj, &slices).unwrap();
        for k in 0..3 {
            let members: Vec<usize> = (0..30).filter(|&i| slices.labels[i] == k).collect();
            let nk = members.len() as f64;
            assert!((m.p_hat[k] - nk / 30.0).abs() < 1e-15);
            for a in 0..4 {
                let mean: f64 = members.iter().map(|&i| proj.x_proj[(i, a)]).sum::<f64>() / nk;
                assert!((m.m_hat[k][a] - mean).abs() < 1e-12);
                for b in 0..4 {
                    let s: f64 = members
                        .iter()
                        .map(|&i| proj.x_proj[(i, a)] * proj.x_proj[(i, b)])
                        .sum::<f64>()
                        / nk;
                    assert!((m.s_hat[k][(a, b)] - s).abs() < 1e-12);
                }
            }
            assert!((m.s_hat[k].trace() - 1.0).abs() < 1e-10);
            assert!(m.tau_hat[k] > 0.0 && m.tau_hat[k] < 1.0);
        }
    }

    #[test]
    fn slice_with_one_sample_is_rejected() {
        let proj = four_points();
        let slices = SliceAssignment {
            labels: vec![0, 0, 0, 1],
            counts: vec![3, 1],
            boundaries: vec![],
        };
        assert!(matches!(
            slice_moments(&proj, &slices),
            Err(Error::SliceTooSmall { slice: 1, count: 1 })
        ));
    }

    #[test]
    fn cp_sir_rank_one_case() {
        let m = SliceMoments {
            p_hat: vec![0.5, 0.5],
            m_hat: vec![
                DVector::from_vec(vec![1.0, 0.0]),
                DVector::from_vec(vec![-1.0, 0.0]),
            ],
            s_hat: vec![diag(&[1.0, 0.0]), diag(&[1.0, 0.0])],
            tau_hat: vec![0.5, 0.5],
        };
        assert!((kernel_cp_sir(&m).m - diag(&[1.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn cp_sir_matches_gamma_gamma_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (proj, slices) = random_moments(&mut rng, 24, 5, 4);
        let m = slice_moments(&proj, &slices).unwrap();
        let gamma = DMatrix::from_fn(5, 4, |i, k| m.m_hat[k][i] * m.p_hat[k].sqrt());
        let oracle = naive_mul(&gamma, &gamma.transpose());
        assert!((kernel_cp_sir(&m).m - oracle).amax() < 1e-12);
    }

    #[test]
    fn cp_save_analytic_cases() {
        let iso = SliceMoments {
            p_hat: vec![0.4, 0.6],
            m_hat: vec![DVector::zeros(3), DVector::zeros(3)],
            s_hat: vec![DMatrix::identity(3, 3) * 0.2, DMatrix::identity(3, 3) * 0.3],
            tau_hat: vec![0.2, 0.3],
        };
        assert!(kernel_cp_save(&iso).m.amax() < 1e-15);

        let single = SliceMoments {
            p_hat: vec![1.0],
            m_hat: vec![DVector::zeros(3)],
            s_hat: vec![diag(&[0.5, 0.3, 0.2])],
            tau_hat: vec![0.3],
        };
        assert!((kernel_cp_save(&single).m - diag(&[0.04, 0.0, 0.01])).amax() < 1e-15);
    }

    #[test]
    fn cp_save_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (proj, slices) = random_moments(&mut rng, 30, 4, 3);
        let m = slice_moments(&proj, &slices).unwrap();
        let mut oracle = DMatrix::zeros(4, 4);
        for k in 0..3 {
            let d = DMatrix::from_fn(4, 4, |i, j| {
                (if i == j { m.tau_hat[k] } else { 0.0 }) - m.s_hat[k][(i, j)]
            });
            oracle += naive_mul(&d, &d) * m.p_hat[k];
        }
        let got = kernel_cp_save(&m).m;
        assert!((&got - oracle).amax() < 1e-12);
        assert!(sym_eigen_desc(&got).0[3] > -1e-10);
    }

    #[test]
    fn simplified_cp_dr_single_slice_arithmetic() {
        let m = SliceMoments {
            p_hat: vec![1.0],
            m_hat: vec![DVector::from_vec(vec![0.1, 0.0])],
            s_hat: vec![diag(&[0.6, 0.4])],
            tau_hat: vec![0.5],
        };
        let got = kernel_cp_dr_simplified(&m).m;
        assert!((got - diag(&[0.0204, 0.02])).amax() < 1e-15);
    }

    #[test]
    fn pairwise_single_slice_collapse() {
        let m = SliceMoments {
            p_hat: vec![1.0],
            m_hat: vec![DVector::from_vec(vec![0.1, 0.0])],
            s_hat: vec![diag(&[0.6, 0.4])],
            tau_hat: vec![0.5],
        };
        // [2τI − (2Σ − 2mmᵀ)]² = 4 diag(−0.09, 0.1)²
        let want = diag(&[4.0 * 0.0081, 4.0 * 0.01]);
        assert!((kernel_dr_pairwise(&m).m - &want).amax() < 1e-15);
        assert!((kernel_cp_dr(&m).m - &want).amax() < 1e-15);
    }

    #[test]
    fn closed_form_cp_dr_matches_pairwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let p = rng.random_range(2..=6);
            let k = rng.random_range(1..=4);
            let n = rng.random_range((2 * k).max(p + 1)..=40);
            let (proj, slices) = random_moments(&mut rng, n, p, k);
            let m = slice_moments(&proj, &slices).unwrap();
            let closed = kernel_cp_dr(&m).m;
            let pair = kernel_dr_pairwise(&m).m;
            assert!(rel_frobenius(&closed, &pair) < 1e-10);
        }
    }

    #[test]
    fn cp_dr_vanishes_for_pure_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let (proj, slices) = random_moments(&mut rng, 20_000, 5, 5);
        let m = slice_moments(&proj, &slices).unwrap();
        let norm = sym_eigen_desc(&kernel_cp_dr(&m).m).0[0];
        assert!(norm < 0.01, "{norm}");
    }

    fn linear_normal_data(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::<f64>::from_fn(n, 6, |_, _| StandardNormal.sample(&mut rng));
        let y = (0..n)
            .map(|i| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x[(i, 0)] + x[(i, 1)] + x[(i, 2)] + 0.5 * e
            })
            .collect();
        (x, y)
    }

    #[test]
    fn classical_sir_recovers_linear_direction() {
        let (x, y) = linear_normal_data(2000, 35);
        let slices = slice_response(&y, 5).unwrap();
        let (k, std) = kernel_classical(&x, &slices, Method::Sir).unwrap();
        let (_, vecs) = sym_eigen_desc(&k.m);
        // back to x coordinates
        let dir = &std.inv_sqrt * vecs.column(0);
        let beta = DVector::from_vec(vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let cos = dir.dot(&beta).abs() / (dir.norm() * beta.norm());
        assert!(cos > 10f64.to_radians().cos(), "cos = {cos}");
    }

    #[test]
    fn standardization_whitens_exactly() {
        let (x, _) = linear_normal_data(300, 36);
        let std = Standardization::fit(&x).unwrap();
        let z = std.apply(&x);
        assert!(z.row_mean().amax() < 1e-10);
        let cov = z.transpose() * &z / 300.0;
        assert!((cov - DMatrix::<f64>::identity(6, 6)).amax() < 1e-10);
    }

    #[test]
    fn classical_and_contour_kernels_differ_on_cauchy_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let n = 400;
        let x = DMatrix::from_fn(n, 4, |_, _| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            a / b.abs()
        });
        let y: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        let slices = slice_response(&y, 5).unwrap();
        let (classical, _) = kernel_classical(&x, &slices, Method::Sir).unwrap();
        let est = tyler_scatter(
            &x,
            &coordinatewise_median(&x).unwrap(),
            &TylerConfig::default(),
        )
        .unwrap();
        let m = slice_moments(&project(&x, &est).unwrap(), &slices).unwrap();
        assert!((classical.m - kernel_cp_sir(&m).m).norm() > 1e-3);
    }

    #[test]
    fn classical_rejects_singular_covariance() {
        let x = DMatrix::from_fn(20, 3, |i, j| {
            if j == 2 {
                2.0 * i as f64
            } else {
                (i * (j + 1)) as f64 % 7.0
            }
        });
        let mut x = x;
        for i in 0..20 {
            x[(i, 2)] = x[(i, 0)] + x[(i, 1)];
        }
        let y: Vec<f64> = (0..20).map(f64::from).collect();
        let slices = slice_response(&y, 4).unwrap();
        assert!(kernel_classical(&x, &slices, Method::Dr).is_err());
        assert!(kernel_classical(&x, &slices, Method::CpDr).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("phd".parse::<Method>().is_err());
    }

    #[test]
    fn inverse_sqrt_used_by_standardization_is_symmetric() {
        let (x, _) = linear_normal_data(100, 38);
        let std = Standardization::fit(&x).unwrap();
        let t = symmetric_inverse_sqrt(&std.cov).unwrap();
        assert!((t - &std.inv_sqrt).amax() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kernels_are_symmetric_psd(seed in any::<u64>(), p in 2usize..7, k in 1usize..5, extra in 0usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = (2 * k).max(p + 1) + extra;
            let (proj, slices) = random_moments(&mut rng, n, p, k);
            let m = slice_moments(&proj, &slices).unwrap();
            for s in &m.s_hat {
                prop_assert!((s.trace() - 1.0).abs() < 1e-10);
            }
            let kernels = [kernel_cp_sir(&m), kernel_cp_save(&m), kernel_cp_dr(&m), kernel_dr_pairwise(&m)];
            for km in &kernels {
                prop_assert!((&km.m - km.m.transpose()).amax() < 1e-10);
                let min = *sym_eigen_desc(&km.m).0.last().unwrap();
                prop_assert!(min > -1e-10, "{} min eigenvalue {}", km.method, min);
            }
            prop_assert!(rel_frobenius(&kernels[2].m, &kernels[3].m) < 1e-10);
        }
    }
}
