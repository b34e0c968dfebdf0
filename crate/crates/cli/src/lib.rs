//! Argument parsing and execution for the `irls-svm` binary.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use irls_svm::engine::{DEFAULT_MAX_ITERATIONS, DEFAULT_RISK_TOLERANCE};
use irls_svm::io::{
    load_dataset_csv, read_model, write_dataset_csv, write_hyperplanes, write_model, write_predictions_csv,
    write_sweep_summary, write_trajectory_csv, SweepSummary,
};
use irls_svm::spec::DEFAULT_EPSILON;
use irls_svm::synth::{default_simulation, DEFAULT_N};
use irls_svm::verify::verify_descent;
use irls_svm::{fit, Error, FitOptions, Init, Label, LossKind, ModelParams, PenaltyKind, RiskSpec};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_SOLVER: u8 = 4;
pub const EXIT_INVARIANT: u8 = 5;

/// Upper bound on the number of points a grid may expand to.
const MAX_GRID_POINTS: usize = 10_000;

#[derive(Parser, Debug)]
#[command(
    name = "irls-svm",
    version,
    about = "Linear SVMs fitted by iteratively-reweighted least squares"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Fit one model; writes the model file and `<out>.trajectory.csv`.
    #[command(allow_negative_numbers = true)]
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        /// Training CSV with a `y` (or `label`) column of -1/1.
        #[arg(long)]
        data: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Append a `prediction` column to a CSV using a fitted model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a two-class Gaussian dataset with means (-1,-1) and (1,1).
    Simulate {
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit over a grid of penalty constants, in parallel.
    ///
    /// Writes `trajectory_NNN.csv` per grid point, `summary.csv` and
    /// `hyperplanes.csv` into the `--out` directory.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        data: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Lambda values as start:step:end, both ends included (e.g. 0:0.1:0.4).
        #[arg(long, value_parser = parse_grid, conflicts_with = "mu_grid", required_unless_present = "mu_grid")]
        lambda_grid: Option<Grid>,
        /// Mu values as start:step:end, both ends included.
        #[arg(long, value_parser = parse_grid)]
        mu_grid: Option<Grid>,
    },
    /// Replay the iterations and verify the descent guarantees; exits 5 on a violation.
    #[command(allow_negative_numbers = true)]
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LossArg {
    Hinge,
    LeastSquares,
    SquaredHinge,
    Logistic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PenaltyArg {
    L2,
    L1,
    Elastic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum InitArg {
    Zero,
    /// Ridge least-squares solution.
    Warm,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum)]
    loss: LossArg,
    #[arg(long, value_enum)]
    penalty: PenaltyArg,
    /// 2-norm penalty constant (l2 and elastic).
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// 1-norm penalty constant (l1 and elastic).
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Smoothing constant for the hinge and the 1-norm.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    iterations: usize,
    /// Stop early once the relative risk change is at most this; 0 disables.
    #[arg(long, default_value_t = DEFAULT_RISK_TOLERANCE)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Warm)]
    init: InitArg,
}

/// Expanded `start:step:end` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn decimals(token: &str) -> i32 {
    token.split_once('.').map_or(0, |(_, frac)| frac.len() as i32)
}

/// Values are rounded to the number of decimals written, so `0:0.1:0.4`
/// yields exactly `0.3` rather than `0.30000000000000004`.
pub fn parse_grid(text: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [start, step, end] = parts[..] else {
        return Err("expected start:step:end".into());
    };
    let number = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("'{s}' is not a number"))
    };
    let (a, h, b) = (number(start)?, number(step)?, number(end)?);
    if h <= 0.0 {
        return Err("step must be > 0".into());
    }
    if b < a {
        return Err("end must be ≥ start".into());
    }
    let count = ((b - a) / h + 1e-9).floor() as usize + 1;
    if count > MAX_GRID_POINTS {
        return Err(format!("grid has more than {MAX_GRID_POINTS} points"));
    }
    let scale = 10f64.powi(decimals(start).max(decimals(step)).max(decimals(end)).min(15));
    Ok(Grid(
        (0..count)
            .map(|i| ((a + i as f64 * h) * scale).round() / scale)
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAxis {
    Lambda,
    Mu,
}

impl GridAxis {
    fn name(self) -> &'static str {
        match self {
            GridAxis::Lambda => "lambda",
            GridAxis::Mu => "mu",
        }
    }
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Fit {
        spec: RiskSpec,
        options: FitOptions,
        data: PathBuf,
        out: PathBuf,
    },
    Predict {
        model: PathBuf,
        data: PathBuf,
        out: PathBuf,
    },
    Simulate {
        n: usize,
        seed: u64,
        out: PathBuf,
    },
    Sweep {
        axis: GridAxis,
        /// `(grid value, spec)` in grid order.
        points: Vec<(f64, RiskSpec)>,
        options: FitOptions,
        data: PathBuf,
        out: PathBuf,
    },
    Check {
        spec: RiskSpec,
        options: FitOptions,
        data: PathBuf,
    },
}

#[derive(Debug)]
pub enum UsageError {
    Clap(clap::Error),
    Invalid(String),
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UsageError::Clap(e) => write!(f, "{e}"),
            UsageError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(UsageError),
    Library(Error),
    /// `check` found at least one violated guarantee.
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::Library(e) => match e {
                Error::InvalidParameter(_) => EXIT_USAGE,
                Error::Solve(_) | Error::Fit { .. } => EXIT_SOLVER,
                Error::InvalidDataset(_)
                | Error::NonFiniteFeature { .. }
                | Error::DimensionMismatch { .. }
                | Error::Csv { .. }
                | Error::Format { .. }
                | Error::Io { .. } => EXIT_DATA,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Library(e) => write!(f, "{e}"),
            CliError::Invariant(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Library(Error::Io {
            path: "<stdout>".into(),
            source: e,
        })
    }
}

fn invalid(msg: impl Into<String>) -> UsageError {
    UsageError::Invalid(msg.into())
}

fn non_negative(name: &str, value: f64) -> Result<(), UsageError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be ≥ 0 (--{name} {value})")))
    }
}

impl ModelArgs {
    fn kinds(&self) -> (LossKind, PenaltyKind) {
        let loss = match self.loss {
            LossArg::Hinge => LossKind::Hinge,
            LossArg::LeastSquares => LossKind::LeastSquares,
            LossArg::SquaredHinge => LossKind::SquaredHinge,
            LossArg::Logistic => LossKind::Logistic,
        };
        let penalty = match self.penalty {
            PenaltyArg::L2 => PenaltyKind::L2,
            PenaltyArg::L1 => PenaltyKind::L1,
            PenaltyArg::Elastic => PenaltyKind::ElasticNet,
        };
        (loss, penalty)
    }

    fn spec_with(&self, lambda: f64, mu: f64) -> Result<RiskSpec, UsageError> {
        non_negative("lambda", lambda)?;
        non_negative("mu", mu)?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be > 0 (--epsilon {})", self.epsilon)));
        }
        let (loss, penalty) = self.kinds();
        RiskSpec::with_epsilon(loss, penalty, lambda, mu, self.epsilon).map_err(|e| invalid(e.to_string()))
    }

    fn spec(&self) -> Result<RiskSpec, UsageError> {
        self.spec_with(self.lambda, self.mu)
    }

    fn options(&self) -> Result<FitOptions, UsageError> {
        if self.iterations == 0 {
            return Err(invalid("iterations must be ≥ 1 (--iterations 0)"));
        }
        non_negative("tolerance", self.tolerance)?;
        Ok(FitOptions {
            max_iterations: self.iterations,
            risk_tolerance: self.tolerance,
            init: match self.init {
                InitArg::Zero => Init::Zero,
                InitArg::Warm => Init::WarmStartLsL2,
            },
            ..FitOptions::default()
        })
    }
}

pub fn parse_args<I, T>(argv: I) -> Result<Command, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(UsageError::Clap)?;
    Ok(match cli.verb {
        Verb::Fit { model, data, out } => Command::Fit {
            spec: model.spec()?,
            options: model.options()?,
            data,
            out,
        },
        Verb::Predict { model, data, out } => Command::Predict { model, data, out },
        Verb::Simulate { n, seed, out } => {
            if n == 0 || n % 2 != 0 {
                return Err(invalid(format!("n must be a positive even number (--n {n})")));
            }
            Command::Simulate { n, seed, out }
        }
        Verb::Sweep {
            model,
            data,
            out,
            lambda_grid,
            mu_grid,
        } => {
            let (axis, grid) = match (lambda_grid, mu_grid) {
                (Some(g), None) => (GridAxis::Lambda, g),
                (None, Some(g)) => (GridAxis::Mu, g),
                _ => return Err(invalid("give exactly one of --lambda-grid and --mu-grid")),
            };
            let (_, penalty) = model.kinds();
            let used = match axis {
                GridAxis::Lambda => penalty.has_l2(),
                GridAxis::Mu => penalty.has_l1(),
            };
            if !used {
                return Err(invalid(format!(
                    "--{}-grid has no effect with --penalty {}",
                    axis.name(),
                    penalty.name()
                )));
            }
            let points = grid
                .0
                .into_iter()
                .map(|g| {
                    let spec = match axis {
                        GridAxis::Lambda => model.spec_with(g, model.mu),
                        GridAxis::Mu => model.spec_with(model.lambda, g),
                    };
                    spec.map(|s| (g, s))
                })
                .collect::<Result<_, _>>()?;
            Command::Sweep {
                axis,
                points,
                options: model.options()?,
                data,
                out,
            }
        }
        Verb::Check { model, data } => Command::Check {
            spec: model.spec()?,
            options: model.options()?,
            data,
        },
    })
}

/// `m.model` -> `m.model.trajectory.csv`.
pub fn trajectory_path(model_path: &Path) -> PathBuf {
    let mut name = model_path.as_os_str().to_owned();
    name.push(".trajectory.csv");
    PathBuf::from(name)
}

pub fn sweep_trajectory_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("trajectory_{index:03}.csv"))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Library(Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Runs a validated command, writing human-readable progress to `log`.
pub fn execute(command: &Command, log: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Fit {
            spec,
            options,
            data,
            out,
        } => {
            let dataset = load_dataset_csv(data)?;
            let result = fit(spec, &dataset, options)?;
            write_model(&result, spec, out)?;
            let trajectory = trajectory_path(out);
            write_trajectory_csv(&result, &trajectory)?;
            writeln!(
                log,
                "{spec}: {} iterations ({:?}), risk {:.10}, smoothed {:.10}, accuracy {:.4}",
                result.iterations_run,
                result.termination_reason,
                result.final_exact_risk(),
                result.final_smoothed_risk(),
                dataset.accuracy(&result.theta)?
            )?;
            writeln!(log, "wrote {} and {}", out.display(), trajectory.display())?;
        }
        Command::Predict { model, data, out } => {
            let model = read_model(model)?;
            let labels = write_predictions_csv(&model.theta, data, out)?;
            let positive = labels.iter().filter(|&&l| l == Label::Positive).count();
            writeln!(
                log,
                "predicted {} rows ({positive} positive, {} negative) into {}",
                labels.len(),
                labels.len() - positive,
                out.display()
            )?;
        }
        Command::Simulate { n, seed, out } => {
            write_dataset_csv(&default_simulation(*n, *seed)?, out)?;
            writeln!(log, "wrote {n} samples (seed {seed}) to {}", out.display())?;
        }
        Command::Sweep {
            axis,
            points,
            options,
            data,
            out,
        } => {
            let dataset = load_dataset_csv(data)?;
            std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
            let fits: Vec<(SweepSummary, ModelParams)> = points
                .par_iter()
                .enumerate()
                .map(|(i, (g, spec))| {
                    let result = fit(spec, &dataset, options)?;
                    write_trajectory_csv(&result, sweep_trajectory_path(out, i))?;
                    let summary = SweepSummary {
                        grid_value: *g,
                        exact_risk: result.final_exact_risk(),
                        smoothed_risk: result.final_smoothed_risk(),
                        accuracy: dataset.accuracy(&result.theta)?,
                    };
                    Ok((summary, result.theta))
                })
                .collect::<Result<_, Error>>()?;
            for (i, (s, _)) in fits.iter().enumerate() {
                writeln!(
                    log,
                    "[{i:03}] {}={}: risk {:.10}, smoothed {:.10}, accuracy {:.4}",
                    axis.name(),
                    s.grid_value,
                    s.exact_risk,
                    s.smoothed_risk,
                    s.accuracy
                )?;
            }
            let summaries: Vec<SweepSummary> = fits.iter().map(|(s, _)| s.clone()).collect();
            let planes: Vec<(f64, ModelParams)> = fits.into_iter().map(|(s, t)| (s.grid_value, t)).collect();
            write_sweep_summary(&summaries, out.join("summary.csv"))?;
            write_hyperplanes(&planes, out.join("hyperplanes.csv"))?;
            writeln!(log, "wrote {} fits to {}", planes.len(), out.display())?;
        }
        Command::Check { spec, options, data } => {
            let dataset = load_dataset_csv(data)?;
            let report = verify_descent(spec, &dataset, options)?;
            let first = report.trajectory.first().copied().unwrap_or(f64::NAN);
            let last = report.trajectory.last().copied().unwrap_or(f64::NAN);
            writeln!(
                log,
                "{spec}: {} iterations checked, {:?} risk {first:.10} -> {last:.10}",
                report.iterations, report.monitor
            )?;
            if !report.passed() {
                for v in &report.violations {
                    writeln!(log, "violation: {v}")?;
                }
                return Err(CliError::Invariant(format!(
                    "{} descent violations",
                    report.violations.len()
                )));
            }
            writeln!(log, "all descent checks passed")?;
        }
    }
    Ok(())
}

/// Parses, executes, and maps the outcome to a process exit code.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let command = match parse_args(argv) {
        Ok(c) => c,
        Err(UsageError::Clap(e)) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match execute(&command, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
