//! `cpsdr`: fit, simulate, project and generate from the command line.

mod report;
mod table;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use contour_sdr::nalgebra::DMatrix;
use contour_sdr::scatter::{LocationMode, TylerConfig};
use contour_sdr::simulation::{
    gen_data, run_benchmark, BenchmarkGrid, Df, Family, HarnessConfig, Model, ModelSpec,
};
use contour_sdr::{fit, DataMatrix, DimChoice, FitOptions, Method};

use report::FitReport;
use table::{write_csv, write_text, Table};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input: exit 2.
    Input(String),
    /// The estimator failed on otherwise valid input: exit 3.
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<contour_sdr::Error> for CliError {
    fn from(e: contour_sdr::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cpsdr",
    version,
    about = "Contour-projected sufficient dimension reduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a reduction basis from a CSV file and write a JSON report.
    Fit(FitArgs),
    /// Run the Monte Carlo benchmark and write mean subspace errors as CSV.
    Simulate(SimulateArgs),
    /// Compute reduced predictors for a CSV file from a saved report.
    Project(ProjectArgs),
    /// Write one simulated data set as CSV.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Location {
    /// Keep the coordinatewise median.
    FixedMedian,
    /// Re-estimate the location with the scatter.
    Iterate,
}

impl From<Location> for LocationMode {
    fn from(l: Location) -> Self {
        match l {
            Location::FixedMedian => LocationMode::FixedMedian,
            Location::Iterate => LocationMode::Iterate,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Dim {
    Auto,
    Fixed(usize),
}

fn parse_dim(s: &str) -> Result<Dim, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Dim::Auto);
    }
    match s.parse::<usize>() {
        Ok(d) if d >= 1 => Ok(Dim::Fixed(d)),
        _ => Err(format!("expected 'auto' or a positive integer, got '{s}'")),
    }
}

fn parse_with<T: std::str::FromStr<Err = contour_sdr::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: contour_sdr::Error| e.to_string())
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Predictor columns (default: every column except the response).
    #[arg(long, value_delimiter = ',')]
    predictors: Option<Vec<String>>,
    #[arg(long, value_parser = parse_with::<Method>)]
    method: Method,
    #[arg(long, default_value_t = 5)]
    slices: usize,
    /// Basis dimension, or `auto` for the eigenvalue-ratio rule.
    #[arg(long, default_value = "auto", value_parser = parse_dim)]
    dim: Dim,
    /// Largest dimension considered by `--dim auto`.
    #[arg(long, default_value_t = 5)]
    dmax: usize,
    /// Divide each predictor by its standard deviation before fitting.
    #[arg(long)]
    standardize: bool,
    #[arg(long, value_enum, default_value = "fixed-median")]
    location: Location,
    /// Accepted for symmetry with `simulate`; fitting is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_with::<Model>, default_value = "I,II,III,IV,V")]
    models: Vec<Model>,
    /// Degrees of freedom: positive integers or `inf`.
    #[arg(long, value_delimiter = ',', value_parser = parse_with::<Df>, default_value = "3")]
    dfs: Vec<Df>,
    /// Predictor families: `t` (elliptical) or `exp` (skewed).
    #[arg(long, value_delimiter = ',', value_parser = parse_with::<Family>, default_value = "t")]
    families: Vec<Family>,
    #[arg(long, value_delimiter = ',', default_value = "400")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = parse_with::<Method>,
        default_value = "cp-dr,dr,cp-sir,sir,cp-save,save"
    )]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    slices: usize,
    #[arg(long, default_value_t = 5)]
    dmax: usize,
    #[arg(long, value_enum, default_value = "iterate")]
    location: Location,
    /// Mean subspace error per cell and method.
    #[arg(long)]
    out: PathBuf,
    /// Dimension-selection accuracy per cell and method.
    #[arg(long)]
    dhat_out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    data: PathBuf,
    /// Report written by `cpsdr fit`.
    #[arg(long)]
    model_file: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_with::<Model>)]
    model: Model,
    #[arg(long, value_parser = parse_with::<Df>, default_value = "3")]
    df: Df,
    #[arg(long, value_parser = parse_with::<Family>, default_value = "t")]
    family: Family,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses the command line; on a usage error prints the message followed by
/// the usage line of the subcommand involved and exits with status 2.
fn parse_args() -> Cli {
    Cli::try_parse().unwrap_or_else(|e| {
        if !e.use_stderr() {
            e.exit();
        }
        let mut cmd = Cli::command();
        cmd.build();
        let usage = std::env::args()
            .nth(1)
            .and_then(|name| cmd.find_subcommand_mut(&name).map(|sub| sub.render_usage()))
            .unwrap_or_else(|| Cli::command().render_usage());
        eprint!("{e}");
        eprintln!("\n{usage}");
        std::process::exit(2)
    })
}

fn main() -> ExitCode {
    let cli = parse_args();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Project(a) => cmd_project(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Input(_) => 2,
                CliError::Numerical(_) => 3,
            })
        }
    }
}

fn column_scales(x: &DMatrix<f64>) -> Result<Vec<f64>, CliError> {
    let n = x.nrows() as f64;
    x.column_iter()
        .map(|c| {
            let mean = c.sum() / n;
            let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                Ok(sd)
            } else {
                Err(CliError::Input(
                    "cannot standardize a constant predictor".into(),
                ))
            }
        })
        .collect()
}

fn cmd_fit(a: FitArgs) -> Result<(), CliError> {
    let table = Table::read(&a.data)?;
    let y_col = table.column_index(&a.response)?;
    let names: Vec<String> = match &a.predictors {
        Some(names) => names.clone(),
        None => table
            .header
            .iter()
            .filter(|h| **h != a.response)
            .cloned()
            .collect(),
    };
    let cols = names
        .iter()
        .map(|n| table.column_index(n))
        .collect::<Result<Vec<_>, _>>()?;
    if cols.contains(&y_col) {
        return Err(CliError::Input(
            "the response cannot also be a predictor".into(),
        ));
    }
    let x = table.matrix(&cols);
    let scales = if a.standardize {
        column_scales(&x)?
    } else {
        vec![1.0; x.ncols()]
    };
    let x_fit = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] / scales[j]);
    let data = DataMatrix::new(x_fit, table.column(y_col))?;

    let (dim, rule) = match a.dim {
        Dim::Auto => (DimChoice::Merc { d_max: a.dmax }, "merc"),
        Dim::Fixed(d) => (DimChoice::Fixed(d), "fixed"),
    };
    let opts = FitOptions {
        slices: a.slices,
        dim,
        tyler: TylerConfig {
            location_mode: a.location.into(),
            ..TylerConfig::default()
        },
    };
    let f = fit(&data, a.method, &opts)?;
    let eta = f.indices(data.x())?;
    let report = FitReport::new(&f, a.response, names, scales, &eta, rule);
    write_text(&a.out, &report.to_json())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut specs = Vec::new();
    for &model in &a.models {
        for &family in &a.families {
            for &df in &a.dfs {
                for &n in &a.n {
                    specs.push(ModelSpec::new(model, a.p, n, df, family)?);
                }
            }
        }
    }
    let grid = BenchmarkGrid {
        specs,
        methods: a.methods,
        reps: a.reps,
        config: HarnessConfig {
            slices: a.slices,
            d_max: a.dmax,
            tyler: TylerConfig {
                location_mode: a.location.into(),
                ..TylerConfig::default()
            },
        },
    };
    let table = run_benchmark(&grid, a.seed)?;
    write_text(&a.out, &table.delta_csv())?;
    if let Some(path) = &a.dhat_out {
        write_text(path, &table.dim_csv())?;
    }
    print!("{}", table.summary());
    Ok(())
}

fn cmd_project(a: ProjectArgs) -> Result<(), CliError> {
    let report = FitReport::read(&a.model_file)?;
    let table = Table::read(&a.data)?;
    let cols = report
        .predictors
        .iter()
        .map(|n| {
            table.column_index(n).map_err(|_| {
                CliError::Input(format!(
                    "dimension mismatch: predictor '{n}' from the model file is not in the data"
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let eta = report.project(&table.matrix(&cols))?;
    let y = table
        .column_index(&report.response)
        .ok()
        .map(|j| table.column(j));

    let mut header: Vec<String> = y.iter().map(|_| report.response.clone()).collect();
    header.extend((1..=eta.ncols()).map(|j| format!("eta{j}")));
    let rows: Vec<Vec<f64>> = (0..eta.nrows())
        .map(|i| {
            y.iter()
                .map(|y| y[i])
                .chain(eta.row(i).iter().copied())
                .collect()
        })
        .collect();
    write_csv(&a.out, &header, &rows)
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    let spec = ModelSpec::new(a.model, a.p, a.n, a.df, a.family)?;
    let (x, y) = gen_data(&spec, a.seed)?.into_parts();
    let mut header: Vec<String> = (1..=a.p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let rows: Vec<Vec<f64>> = (0..a.n)
        .map(|i| {
            x.row(i)
                .iter()
                .copied()
                .chain(std::iter::once(y[i]))
                .collect()
        })
        .collect();
    write_csv(&a.out, &header, &rows)
}
