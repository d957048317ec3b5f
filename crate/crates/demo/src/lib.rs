//! Browser bindings for the demo page in `www/`.
//!
//! Every exported function returns a JSON string; the page draws it on a canvas.

use contour_sdr::linalg::sym_eigen_desc;
use contour_sdr::nalgebra::{DMatrix, DVector};
use contour_sdr::scatter::TylerConfig;
use contour_sdr::simulation::{gen_data, gen_predictors, true_basis, Df, Family, Model, ModelSpec};
use contour_sdr::{delta, fit, DataMatrix, DimChoice, FitOptions, Method};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct FitView {
    pub method: String,
    pub d0: usize,
    pub d_selected: usize,
    /// Subspace error of the `d₀`-dimensional estimate against the truth.
    pub delta: f64,
    pub y: Vec<f64>,
    /// First reduced predictor, signed to correlate positively with the true index.
    pub eta1: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// `λⱼ / λⱼ₊₁` for `j = 1..=d_max`.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ContourView {
    /// Raw points as `[x, y]` pairs.
    pub raw: Vec<[f64; 2]>,
    /// Contour-projected points on the unit circle.
    pub projected: Vec<[f64; 2]>,
    pub center: [f64; 2],
    /// Robust scatter, trace 2.
    pub scatter: [[f64; 2]; 2],
    /// Sample covariance rescaled to trace 2, for comparison.
    pub sample_cov: [[f64; 2]; 2],
    /// Scatter used to generate the points, trace 2.
    pub truth: [[f64; 2]; 2],
    pub iterations: usize,
}

fn parse<T: std::str::FromStr<Err = contour_sdr::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: contour_sdr::Error| e.to_string())
}

/// Simulates one data set and fits `method` with the dimension chosen by the
/// eigenvalue-ratio rule.
pub fn fit_view(
    model: &str,
    df: &str,
    family: &str,
    n: usize,
    p: usize,
    method: &str,
    seed: u64,
) -> Result<FitView, String> {
    let spec = ModelSpec::new(
        parse(model)?,
        p,
        n,
        parse::<Df>(df)?,
        parse::<Family>(family)?,
    )
    .map_err(|e| e.to_string())?;
    let method: Method = parse(method)?;
    let data = gen_data(&spec, seed).map_err(|e| e.to_string())?;
    let d_max = 5.min(p - 1);
    let auto = FitOptions {
        dim: DimChoice::Merc { d_max },
        ..FitOptions::default()
    };
    let f = fit(&data, method, &auto).map_err(|e| e.to_string())?;
    let fixed = FitOptions {
        dim: DimChoice::Fixed(spec.d0()),
        ..FitOptions::default()
    };
    let f0 = fit(&data, method, &fixed).map_err(|e| e.to_string())?;
    let truth = true_basis(&spec);
    let err = delta(&truth, f0.basis_x()).map_err(|e| e.to_string())?;

    let eta = f.indices(data.x()).map_err(|e| e.to_string())?;
    let mut eta1: Vec<f64> = eta.column(0).iter().copied().collect();
    let true_index = data.x() * truth.column(0);
    if eta1
        .iter()
        .zip(true_index.iter())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        < 0.0
    {
        eta1.iter_mut().for_each(|v| *v = -*v);
    }
    let lam = &f.subspace.eigenvalues;
    let floor = lam[0] * contour_sdr::subspace::MERC_FLOOR;
    let ratios = (0..d_max).map(|j| lam[j] / lam[j + 1].max(floor)).collect();
    Ok(FitView {
        method: method.to_string(),
        d0: spec.d0(),
        d_selected: f.d(),
        delta: err,
        y: data.y().iter().copied().collect(),
        eta1,
        eigenvalues: lam.clone(),
        ratios,
    })
}

fn trace_two(m: &DMatrix<f64>) -> [[f64; 2]; 2] {
    let m = m * (2.0 / m.trace());
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Bivariate t sample with correlation `rho` and axis ratio `ratio`, its
/// robust scatter and the contour projection of every point.
pub fn contour_view(
    df: &str,
    n: usize,
    rho: f64,
    ratio: f64,
    seed: u64,
) -> Result<ContourView, String> {
    if rho.is_nan() || rho.abs() >= 1.0 || ratio.is_nan() || ratio <= 0.0 {
        return Err("need |rho| < 1 and ratio > 0".into());
    }
    // the generator needs p >= 2 for every model; only its predictors are used
    let spec = ModelSpec::new(Model::V, 2, n, parse::<Df>(df)?, Family::EllipticalT)
        .map_err(|e| e.to_string())?;
    let (z, _) = gen_predictors(&spec, seed);
    let s = ratio.sqrt();
    let truth = DMatrix::from_row_slice(2, 2, &[s * s, rho * s, rho * s, 1.0]);
    let chol = truth
        .clone()
        .cholesky()
        .ok_or("scatter is not positive definite")?;
    let x = z * chol.l().transpose();

    let data = DataMatrix::new(x.clone(), DVector::from_fn(n, |i, _| i as f64))
        .map_err(|e| e.to_string())?;
    let proj = contour_sdr::fit::contour_stage(data.x(), &TylerConfig::default())
        .map_err(|e| e.to_string())?;
    let mean = x.row_mean();
    let mut centered = x.clone();
    for (mut col, m) in centered.column_iter_mut().zip(mean.iter()) {
        col.add_scalar_mut(-m);
    }
    let cov = centered.transpose() * &centered / n as f64;
    let pairs = |m: &DMatrix<f64>| m.row_iter().map(|r| [r[0], r[1]]).collect();
    Ok(ContourView {
        raw: pairs(&x),
        projected: pairs(&proj.x_proj),
        center: [proj.scatter.mu_hat[0], proj.scatter.mu_hat[1]],
        scatter: trace_two(&proj.scatter.sigma_hat),
        sample_cov: trace_two(&cov),
        truth: trace_two(&truth),
        iterations: proj.scatter.iterations_used,
    })
}

/// Eigen-decomposition of a 2×2 scatter as `(axis lengths, angle)` for
/// drawing ellipses.
pub fn ellipse(m: &[[f64; 2]; 2]) -> ([f64; 2], f64) {
    let (vals, vecs) = sym_eigen_desc(&DMatrix::from_row_slice(
        2,
        2,
        &[m[0][0], m[0][1], m[1][0], m[1][1]],
    ));
    (
        [vals[0].max(0.0).sqrt(), vals[1].max(0.0).sqrt()],
        vecs[(1, 0)].atan2(vecs[(0, 0)]),
    )
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

/// JSON [`FitView`] for the scatter plot and eigenvalue spectrum.
#[wasm_bindgen(js_name = fitView)]
pub fn fit_view_js(
    model: &str,
    df: &str,
    family: &str,
    n: u32,
    p: u32,
    method: &str,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(fit_view(
        model,
        df,
        family,
        n as usize,
        p as usize,
        method,
        u64::from(seed),
    ))
}

/// JSON [`ContourView`] with ellipse parameters for each scatter matrix.
#[wasm_bindgen(js_name = contourView)]
pub fn contour_view_js(
    df: &str,
    n: u32,
    rho: f64,
    ratio: f64,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(contour_view(df, n as usize, rho, ratio, u64::from(seed)).map(|v| {
        let e = |m: &[[f64; 2]; 2]| {
            let (axes, angle) = ellipse(m);
            serde_json::json!({ "axes": axes, "angle": angle })
        };
        serde_json::json!({
            "ellipses": { "scatter": e(&v.scatter), "sample_cov": e(&v.sample_cov), "truth": e(&v.truth) },
            "view": v,
        })
    }))
}
