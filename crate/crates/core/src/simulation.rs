//! Benchmark models, data generators and the replication harness.
//!
//! Predictors and noise come from `X̃ = (Xᵀ, ε)ᵀ = W / sqrt(V/df)` with
//! `W ∈ ℝ^{p+1}` standard normal (elliptical family) or centred `Exp(1)`
//! (asymmetric family) and `V ~ χ²_df` shared by the whole row, so `X` and `ε`
//! are dependent unless `df = ∞`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::evaluation::delta;
use crate::fit::{fit_many, DimChoice, FitOptions};
use crate::kernels::Method;
use crate::scatter::{LocationMode, TylerConfig};
use crate::subspace::{merc, DEFAULT_D_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    I,
    II,
    III,
    IV,
    V,
}

impl Model {
    pub const ALL: [Model; 5] = [Model::I, Model::II, Model::III, Model::IV, Model::V];

    pub fn d0(self) -> usize {
        match self {
            Model::II | Model::III => 2,
            Model::I | Model::IV | Model::V => 1,
        }
    }

    /// Smallest predictor dimension the model's coefficient vectors fit in.
    pub fn min_p(self) -> usize {
        match self {
            Model::I => 3,
            Model::III => 10,
            Model::II | Model::IV | Model::V => 2,
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::I => "I",
            Model::II => "II",
            Model::III => "III",
            Model::IV => "IV",
            Model::V => "V",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Model::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s) || (m.index() + 1).to_string() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model '{s}' (expected I..V)")))
    }
}

/// Degrees of freedom of the chi-squared mixing variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Df {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Df {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Df::Finite(k) => write!(f, "{k}"),
            Df::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Df {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if ["inf", "infinity", "∞"]
            .iter()
            .any(|t| t.eq_ignore_ascii_case(s))
        {
            return Ok(Df::Infinite);
        }
        match s.parse::<u32>() {
            Ok(k) if k >= 1 => Ok(Df::Finite(k)),
            _ => Err(Error::InvalidInput(format!(
                "invalid degrees of freedom '{s}' (expected a positive integer or inf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// Standard normal `W`: multivariate t predictors.
    EllipticalT,
    /// `W` with independent `Exp(1) − 1` entries.
    AsymmetricExp,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::EllipticalT => "t",
            Family::AsymmetricExp => "exp",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "t" | "elliptical" | "elliptical-t" | "elliptical_t" => Ok(Family::EllipticalT),
            "exp" | "asymmetric" | "asymmetric-exp" | "asymmetric_exp" => Ok(Family::AsymmetricExp),
            other => Err(Error::InvalidInput(format!(
                "unknown family '{other}' (expected t or exp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelSpec {
    model: Model,
    p: usize,
    n: usize,
    df: Df,
    family: Family,
}

impl ModelSpec {
    pub fn new(model: Model, p: usize, n: usize, df: Df, family: Family) -> Result<Self> {
        if p < model.min_p() {
            return Err(Error::InvalidInput(format!(
                "model {model} needs p >= {}, got {p}",
                model.min_p()
            )));
        }
        if n < p + 1 {
            return Err(Error::InvalidInput(format!(
                "need n >= p + 1, got n = {n}, p = {p}"
            )));
        }
        Ok(Self {
            model,
            p,
            n,
            df,
            family,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn df(&self) -> Df {
        self.df
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn d0(&self) -> usize {
        self.model.d0()
    }

    /// Stable identifier of the data-generating cell; independent of the
    /// estimation method so every method sees the same data.
    fn cell_id(&self) -> u64 {
        let df = match self.df {
            Df::Finite(k) => u64::from(k),
            Df::Infinite => u64::MAX,
        };
        [
            self.model.index(),
            self.family as u64,
            df,
            self.n as u64,
            self.p as u64,
        ]
        .iter()
        .fold(0x243f_6a88_85a3_08d3, |acc, &v| splitmix64(acc ^ v))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replication `rep` of `spec` under `base_seed`.
pub fn stream_seed(base_seed: u64, spec: &ModelSpec, rep: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ spec.cell_id()) ^ splitmix64(rep as u64))
}

/// Draws `(X, ε)`: an `n × p` predictor matrix and the matching noise.
pub fn gen_predictors(spec: &ModelSpec, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, p) = (spec.n, spec.p);
    let mut x = DMatrix::zeros(n, p);
    let mut eps = DVector::zeros(n);
    let mut w = vec![0.0; p + 1];
    for i in 0..n {
        for wj in w.iter_mut() {
            *wj = match spec.family {
                Family::EllipticalT => StandardNormal.sample(&mut rng),
                Family::AsymmetricExp => {
                    let e: f64 = Exp1.sample(&mut rng);
                    e - 1.0
                }
            };
        }
        let scale = match spec.df {
            Df::Infinite => 1.0,
            Df::Finite(k) => {
                // χ²_k as a sum of k squared standard normals
                let v: f64 = (0..k)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        z * z
                    })
                    .sum();
                (f64::from(k) / v).sqrt()
            }
        };
        for j in 0..p {
            x[(i, j)] = w[j] * scale;
        }
        eps[i] = w[p] * scale;
    }
    (x, eps)
}

/// Coefficient vectors of the model as columns, unnormalized.
pub fn true_basis(spec: &ModelSpec) -> DMatrix<f64> {
    let p = spec.p;
    let ones = |range: std::ops::Range<usize>| {
        DVector::from_fn(p, |i, _| if range.contains(&i) { 1.0 } else { 0.0 })
    };
    let cols = match spec.model {
        Model::I => vec![ones(0..3)],
        Model::II => vec![ones(0..1), ones(1..2)],
        Model::III => vec![ones(0..4), ones(6..10)],
        Model::IV => vec![ones(0..1)],
        Model::V => vec![ones(0..2)],
    };
    DMatrix::from_columns(&cols)
}

pub fn gen_response(spec: &ModelSpec, x: &DMatrix<f64>, eps: &DVector<f64>) -> DVector<f64> {
    let b = true_basis(spec);
    let index = x * &b;
    DVector::from_fn(x.nrows(), |i, _| {
        let e = eps[i];
        let u = index[(i, 0)];
        match spec.model {
            Model::I => u + 0.5 * e,
            Model::II => u * u + index[(i, 1)] + 0.2 * e,
            Model::III => {
                let first = if u + 0.2 * e > 0.0 { 1.0 } else { 0.0 };
                let second = if index[(i, 1)] + 0.2 * e > 0.0 {
                    2.0
                } else {
                    0.0
                };
                first + second
            }
            Model::IV => 0.5 * (u - 0.5).powi(2) * e,
            Model::V => u * u / x.row(i).norm_squared() + 0.2 * e,
        }
    })
}

/// One simulated data set.
pub fn gen_data(spec: &ModelSpec, seed: u64) -> Result<DataMatrix> {
    let (x, eps) = gen_predictors(spec, seed);
    let y = gen_response(spec, &x, &eps);
    DataMatrix::new(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DimMode {
    /// Estimate a basis of the true dimension.
    FixedD0,
    /// Estimate a basis of the dimension chosen by the eigenvalue-ratio rule.
    Merc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub seed: u64,
    pub method: Method,
    pub delta: f64,
    /// Dimension chosen by the eigenvalue-ratio rule (`d_max = 5`).
    pub d_selected: usize,
    pub elapsed: std::time::Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessConfig {
    pub slices: usize,
    pub d_max: usize,
    pub tyler: TylerConfig,
}

/// Five slices, `d_max = 5`, and Tyler's estimator with the location
/// re-estimated alongside the scatter. With elliptical predictors the
/// location mode makes no practical difference; with skewed predictors the
/// iterated location is markedly more accurate than the coordinatewise median.
impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            slices: 5,
            d_max: DEFAULT_D_MAX,
            tyler: TylerConfig {
                location_mode: LocationMode::Iterate,
                ..TylerConfig::default()
            },
        }
    }
}

struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn elapsed(&self) -> std::time::Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed();
        #[cfg(target_arch = "wasm32")]
        return std::time::Duration::ZERO;
    }
}

/// Runs several methods on one simulated data set. The reported `delta` uses
/// the basis dimension given by `d_mode`; `d_selected` is always the
/// eigenvalue-ratio choice.
pub fn run_methods(
    spec: &ModelSpec,
    methods: &[Method],
    d_mode: DimMode,
    seed: u64,
    cfg: &HarnessConfig,
) -> Vec<Result<ReplicationResult>> {
    let clock = Stopwatch::start();
    let data = match gen_data(spec, seed) {
        Ok(d) => d,
        Err(e) => return methods.iter().map(|_| Err(e.clone())).collect(),
    };
    let d_max = cfg.d_max.min(spec.p - 1);
    let dim = match d_mode {
        DimMode::FixedD0 => DimChoice::Fixed(spec.d0()),
        DimMode::Merc => DimChoice::Merc { d_max },
    };
    let opts = FitOptions {
        slices: cfg.slices,
        dim,
        tyler: cfg.tyler,
    };
    let truth = true_basis(spec);
    let shared = clock.elapsed();
    fit_many(&data, methods, &opts)
        .into_iter()
        .map(|fit| {
            let method_clock = Stopwatch::start();
            let fit = fit?;
            let delta = delta(&truth, fit.basis_x())?;
            let d_selected = match d_mode {
                DimMode::Merc => fit.d(),
                DimMode::FixedD0 => merc(&fit.subspace.eigenvalues, d_max)?,
            };
            Ok(ReplicationResult {
                seed,
                method: fit.method,
                delta,
                d_selected,
                elapsed: shared + method_clock.elapsed(),
            })
        })
        .collect()
}

pub fn run_replication(
    spec: &ModelSpec,
    method: Method,
    d_mode: DimMode,
    seed: u64,
) -> Result<ReplicationResult> {
    run_methods(spec, &[method], d_mode, seed, &HarnessConfig::default())
        .pop()
        .expect("one method in, one result out")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkGrid {
    pub specs: Vec<ModelSpec>,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub config: HarnessConfig,
}

/// Mean Δ for one (cell, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub spec: ModelSpec,
    pub method: Method,
    /// Successful replications.
    pub reps: usize,
    pub failures: usize,
    pub mean_delta: f64,
    pub se_delta: f64,
}

/// Fraction of replications where the selected dimension equals `d₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimRow {
    pub spec: ModelSpec,
    pub method: Method,
    pub reps: usize,
    pub dhat_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkTable {
    pub delta_rows: Vec<DeltaRow>,
    pub dim_rows: Vec<DimRow>,
    /// Every replication outcome, in (cell, replication, method) order.
    pub replications: Vec<(
        ModelSpec,
        usize,
        Method,
        std::result::Result<ReplicationResult, String>,
    )>,
}

/// Runs every (spec, replication) pair with all methods on shared data.
///
/// Replication `i` of a cell is seeded from `(base_seed, cell, i)` alone, so
/// the table is a pure function of the grid and the seed regardless of
/// scheduling.
pub fn run_benchmark(grid: &BenchmarkGrid, base_seed: u64) -> Result<BenchmarkTable> {
    if grid.reps == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    if grid.methods.is_empty() {
        return Err(Error::InvalidInput("need at least one method".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.specs.len())
        .flat_map(|c| (0..grid.reps).map(move |r| (c, r)))
        .collect();
    let run = |&(c, r): &(usize, usize)| {
        let spec = &grid.specs[c];
        let seed = stream_seed(base_seed, spec, r);
        run_methods(spec, &grid.methods, DimMode::FixedD0, seed, &grid.config)
    };
    #[cfg(feature = "parallel")]
    let outcomes: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<_> = jobs.iter().map(run).collect();

    let mut table = BenchmarkTable::default();
    for (c, spec) in grid.specs.iter().enumerate() {
        for (m, &method) in grid.methods.iter().enumerate() {
            let results: Vec<&Result<ReplicationResult>> = (0..grid.reps)
                .map(|r| &outcomes[c * grid.reps + r][m])
                .collect();
            let ok: Vec<&ReplicationResult> =
                results.iter().filter_map(|r| r.as_ref().ok()).collect();
            let deltas: Vec<f64> = ok.iter().map(|r| r.delta).collect();
            let (mean, se) = mean_and_se(&deltas);
            table.delta_rows.push(DeltaRow {
                spec: *spec,
                method,
                reps: ok.len(),
                failures: results.len() - ok.len(),
                mean_delta: mean,
                se_delta: se,
            });
            let hits = ok.iter().filter(|r| r.d_selected == spec.d0()).count();
            table.dim_rows.push(DimRow {
                spec: *spec,
                method,
                reps: ok.len(),
                dhat_accuracy: if ok.is_empty() {
                    f64::NAN
                } else {
                    hits as f64 / ok.len() as f64
                },
            });
        }
        for r in 0..grid.reps {
            for (m, &method) in grid.methods.iter().enumerate() {
                let outcome = outcomes[c * grid.reps + r][m]
                    .clone()
                    .map_err(|e| e.to_string());
                table.replications.push((*spec, r, method, outcome));
            }
        }
    }
    Ok(table)
}

/// Mean and standard error (sample standard deviation over `√k`); the
/// standard error of a single value is 0.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

impl BenchmarkTable {
    pub fn delta_row(&self, spec: &ModelSpec, method: Method) -> Option<&DeltaRow> {
        self.delta_rows
            .iter()
            .find(|r| &r.spec == spec && r.method == method)
    }

    pub fn dim_row(&self, spec: &ModelSpec, method: Method) -> Option<&DimRow> {
        self.dim_rows
            .iter()
            .find(|r| &r.spec == spec && r.method == method)
    }

    /// `model,family,df,n,method,reps,mean_delta,se_delta`
    pub fn delta_csv(&self) -> String {
        let mut out = String::from("model,family,df,n,method,reps,mean_delta,se_delta\n");
        for r in &self.delta_rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.spec.model,
                r.spec.family,
                r.spec.df,
                r.spec.n,
                r.method,
                r.reps,
                r.mean_delta,
                r.se_delta
            ));
        }
        out
    }

    /// `model,n,method,dhat_accuracy`, with family and df alongside so rows
    /// from different predictor settings stay distinguishable.
    pub fn dim_csv(&self) -> String {
        let mut out = String::from("model,family,df,n,method,reps,dhat_accuracy\n");
        for r in &self.dim_rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.spec.model, r.spec.family, r.spec.df, r.spec.n, r.method, r.reps, r.dhat_accuracy
            ));
        }
        out
    }

    /// Fixed-width text summary: one line per (cell, method).
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<5} {:<6} {:>4} {:>6} {:<8} {:>5} {:>10} {:>9} {:>8}\n",
            "model", "family", "df", "n", "method", "reps", "mean_delta", "se_delta", "dhat=d0"
        );
        for (r, d) in self.delta_rows.iter().zip(&self.dim_rows) {
            out.push_str(&format!(
                "{:<5} {:<6} {:>4} {:>6} {:<8} {:>5} {:>10.3} {:>9.4} {:>8.3}",
                r.spec.model.to_string(),
                r.spec.family.to_string(),
                r.spec.df.to_string(),
                r.spec.n,
                r.method.as_str(),
                r.reps,
                r.mean_delta,
                r.se_delta,
                d.dhat_accuracy
            ));
            if r.failures > 0 {
                out.push_str(&format!("  ({} failed)", r.failures));
            }
            out.push('\n');
        }
        out
    }
}
