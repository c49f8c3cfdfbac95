//! Runner for the `qbm` command-line tool.
//!
//! Every subcommand reads a JSON model configuration, evaluates the engines
//! on the configured time grid and writes CSV or JSON files into the output
//! directory. Rows are written in grid order as they are computed.

// NaN-aware comparisons and index loops over matrix entries are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qbm_core::config::{Config, Tolerances};
use qbm_core::linalg::eigendecompose;
use qbm_core::model::build_hamiltonian;
use qbm_core::{Model, Populations, Spectrum};

pub mod commands;
pub mod output;
pub mod validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Level count above which per-entry outputs default to the system level.
pub const FULL_OUTPUT_MAX_DIM: usize = 16;
pub const DEFAULT_COVARIANCE_POINTS: usize = 41;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0} validation check(s) failed")]
    Validation(usize),
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => EXIT_CONFIG,
            Self::Numerical(_) => EXIT_NUMERICAL,
            Self::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl From<qbm_core::Error> for RunError {
    fn from(e: qbm_core::Error) -> Self {
        use qbm_core::Error as E;
        match e {
            E::NoConvergence { .. }
            | E::Singular { .. }
            | E::SingularTransition { .. }
            | E::LogUnderflow { .. } => Self::Numerical(e.to_string()),
            E::Config(msg) => Self::Config(msg),
            other => Self::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qbm",
    version,
    about = "Exact dynamics of a harmonic oscillator coupled to a harmonic bath"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write amplitudes.csv and survival.csv.
    Amplitudes(CommonArgs),
    /// Write populations.csv, w_coeffs.csv, master_residual.csv and singular_points.txt.
    Master(CommonArgs),
    /// Write langevin.csv, noise_cov.csv, langevin_residual.csv and langevin_singular_points.txt.
    Langevin(CommonArgs),
    /// Write golden_report.json.
    Golden(CommonArgs),
    /// Run the invariant suite and print a pass/fail table.
    Validate(CommonArgs),
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Self::Amplitudes(a)
            | Self::Master(a)
            | Self::Langevin(a)
            | Self::Golden(a)
            | Self::Validate(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Model configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override `time.t_max`.
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    /// Override `time.dt`.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Exponential-fit window `t1,t2`.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected t1,t2, got {s:?}"))?;
    let t1: f64 = a.trim().parse().map_err(|e| format!("t1: {e}"))?;
    let t2: f64 = b.trim().parse().map_err(|e| format!("t2: {e}"))?;
    if !(t1.is_finite() && t2.is_finite() && t1 < t2) {
        return Err(format!("window [{t1}, {t2}] is empty"));
    }
    Ok((t1, t2))
}

/// Fully resolved inputs of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub config: Config,
    pub model: Model,
    pub initial: Populations,
    pub t_max: f64,
    pub dt: f64,
    pub window: Option<(f64, f64)>,
    pub out_dir: PathBuf,
    pub tolerances: SuiteTolerances,
}

/// Thresholds of the validation suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteTolerances {
    pub unitarity: f64,
    pub stochasticity: f64,
    pub conservation: f64,
    pub master_residual: f64,
    pub langevin_residual: f64,
}

impl Default for SuiteTolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-10,
            stochasticity: 1e-10,
            conservation: 1e-10,
            master_residual: 1e-8,
            langevin_residual: 1e-6,
        }
    }
}

impl SuiteTolerances {
    fn with_overrides(t: &Tolerances) -> Self {
        let d = Self::default();
        Self {
            unitarity: t.unitarity.unwrap_or(d.unitarity),
            stochasticity: t.stochasticity.unwrap_or(d.stochasticity),
            conservation: t.conservation.unwrap_or(d.conservation),
            master_residual: t.master_residual.unwrap_or(d.master_residual),
            langevin_residual: t.langevin_residual.unwrap_or(d.langevin_residual),
        }
    }
}

impl RunConfig {
    pub fn load(args: &CommonArgs) -> Result<Self, RunError> {
        let mut config = Config::from_path(&args.config)?;
        if let Some(t) = args.t_max {
            config.time.t_max = t;
        }
        if let Some(dt) = args.dt {
            config.time.dt = dt;
        }
        if let Some((t1, t2)) = args.window {
            config.analysis.window = Some([t1, t2]);
        }
        Self::from_config(config, args.out.clone())
    }

    pub fn from_config(config: Config, out_dir: PathBuf) -> Result<Self, RunError> {
        // re-run the checks so command-line overrides are validated too
        let config = Config::from_json_str(&config.to_json_string())?;
        let model = config.model()?;
        let initial = config.initial_populations(&model)?;
        Ok(Self {
            t_max: config.time.t_max,
            dt: config.time.dt,
            window: config.analysis.window.map(|[a, b]| (a, b)),
            tolerances: SuiteTolerances::with_overrides(&config.analysis.tolerances),
            model,
            initial,
            out_dir,
            config,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        qbm_core::amplitude::time_grid(self.t_max, self.dt)
    }

    pub fn spectrum(&self) -> Result<Spectrum, RunError> {
        Ok(eigendecompose(&build_hamiltonian(&self.model)?)?)
    }

    /// Source levels written to `amplitudes.csv` and `w_coeffs.csv`.
    pub fn levels(&self) -> Vec<usize> {
        match &self.config.analysis.levels {
            Some(l) => l.clone(),
            None if self.model.dim() <= FULL_OUTPUT_MAX_DIM => (0..self.model.dim()).collect(),
            None => vec![0],
        }
    }

    pub fn condition_cap(&self) -> f64 {
        self.config
            .analysis
            .condition_cap
            .unwrap_or(qbm_core::master::DEFAULT_MASTER_CONDITION_CAP)
    }

    pub fn langevin_options(&self) -> qbm_core::langevin::LangevinOptions {
        let mut o = qbm_core::langevin::LangevinOptions::default();
        if let Some(tol) = self.config.analysis.wronskian_tol {
            o.wronskian_tol = tol;
        }
        o
    }

    pub fn ensure_out_dir(&self) -> Result<(), RunError> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| RunError::io(&self.out_dir, e))
    }
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<(), RunError> {
    let rc = RunConfig::load(cli.command.args())?;
    match &cli.command {
        Command::Amplitudes(_) => commands::amplitudes(&rc).map(drop),
        Command::Master(_) => commands::master(&rc).map(drop),
        Command::Langevin(_) => commands::langevin(&rc).map(drop),
        Command::Golden(_) => commands::golden(&rc).map(drop),
        Command::Validate(_) => {
            let report = validate::run_suite(&rc)?;
            print!("{}", report.table());
            match report.failures() {
                0 => Ok(()),
                n => Err(RunError::Validation(n)),
            }
        }
    }
}

/// `run` with errors mapped to exit codes and reported on stderr.
pub fn main_with(cli: &Cli) -> i32 {
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("qbm: {e}");
            e.exit_code()
        }
    }
}
