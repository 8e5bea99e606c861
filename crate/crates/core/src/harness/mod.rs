//! Experiment runner: configuration, runs, sweeps, rate fits, CSV records and
//! plot scripts.

mod config;
mod fit;
mod plot;
mod record;
mod run;
mod sweep;

use std::path::PathBuf;

use thiserror::Error;

use crate::optimizer::OptimError;
use crate::problems::ProblemError;
use crate::schedule::ScheduleError;

pub use config::{ExperimentConfig, OptimizerKind, ProblemKind, CONFIG_KEYS};
pub use fit::{fit_rate, FitError};
pub use plot::{emit_plot_script, render_plot_script, PlotLayout, PlotSeries};
pub use record::{
    export_csv, format_number, parse_csv, validate_csv, write_csv, SchemaError, TrajectoryRecord,
    TrajectoryRow, CSV_HEADER,
};
pub use run::{build_oracle, build_schedule, run_experiment, RunOutput, RunSummary};
pub use sweep::{sweep, SweepCell, SweepOutput};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "GADAM_OUTPUT_DIR";

/// `$GADAM_OUTPUT_DIR` when set and non-empty, otherwise the current directory.
pub fn default_output_dir() -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from("."),
    }
}

/// Relative paths are placed under [`default_output_dir`].
pub fn resolve_output(path: &std::path::Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        default_output_dir().join(path)
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}` given twice (line {line})")]
    DuplicateKey { key: String, line: usize },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("schedule: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("problem: {0}")]
    Problem(#[from] ProblemError),
    #[error("step {step}: {source}")]
    Step { step: u64, source: OptimError },
    #[error("step {step}: oracle failed: {source}")]
    Oracle { step: u64, source: ProblemError },
    #[error("lemma invariant violated at step {step}, component {component}: margin {margin:e}")]
    Invariant {
        step: u64,
        component: usize,
        margin: f64,
    },
    #[error("schema: {0}")]
    Schema(#[from] SchemaError),
    #[error("fit: {0}")]
    Fit(#[from] FitError),
    #[error("nothing to export")]
    NothingToExport,
    #[error("sweep grids must be non-empty")]
    EmptyGrid,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}
