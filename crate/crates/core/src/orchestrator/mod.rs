//! Task files, configuration, the turn loop and run reports.

mod config;
mod runner;
mod suite;
mod task;
mod telemetry;

use thiserror::Error;

pub use config::{CassetteConfig, Config, Defaults, Endpoints, Runtime};
pub use runner::{execute, run_scan, run_task, run_task_in, Backends, RunLabels, RunSettings};
pub use suite::{run_suite, run_task_file, suite_files, SuiteResult};
pub use task::{Backend, Components, Mode, TaskKind, TaskSpec};
pub use telemetry::{reports_to_csv, TaskReport, Termination, TimingAverages, TurnRecord, TurnTimings, CSV_HEADER};

/// Failure before the first turn of a task.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SetupError {
    #[error("task field `{field}`: {message}")]
    Task { field: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("scene: {0}")]
    Scene(String),
    #[error("suite: {0}")]
    Suite(String),
}
