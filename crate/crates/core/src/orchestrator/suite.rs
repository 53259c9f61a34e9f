use std::path::{Path, PathBuf};

use super::runner::{run_task_in, RunLabels};
use super::telemetry::{reports_to_csv, TaskReport};
use super::{Runtime, SetupError, TaskSpec};

/// Task files of a suite directory, sorted by file name.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>, SetupError> {
    let entries = std::fs::read_dir(dir).map_err(|e| SetupError::Suite(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs one task file. An unreadable or invalid file yields an error report.
pub fn run_task_file(path: &Path, runtime: &Runtime) -> TaskReport {
    let attempt = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => return TaskReport::setup_failure(attempt, "unknown", None, format!("{}: {e}", path.display())),
    };
    match TaskSpec::from_json(&bytes) {
        Ok(spec) => {
            let labels = RunLabels {
                attempt,
                environment: String::new(),
            };
            run_task_in(&spec, runtime, path.parent(), &labels)
        }
        Err(e) => {
            let env = serde_json::from_slice::<serde_json::Value>(&bytes)
                .ok()
                .and_then(|v| v.get("scene").and_then(|s| s.as_str()).map(str::to_string))
                .unwrap_or_else(|| "unknown".into());
            TaskReport::setup_failure(attempt, env, None, e.to_string())
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub reports: Vec<TaskReport>,
}

impl SuiteResult {
    pub fn to_csv(&self) -> String {
        reports_to_csv(&self.reports)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.reports).expect("reports serialize")
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        std::fs::write(dir.join("report.json"), self.to_json())
    }

    pub fn successes(&self) -> usize {
        self.reports.iter().filter(|r| r.success).count()
    }
}

/// Runs every task file of `dir` in name order.
pub fn run_suite(dir: &Path, runtime: &Runtime) -> Result<SuiteResult, SetupError> {
    let reports = suite_files(dir)?
        .iter()
        .map(|p| {
            let r = run_task_file(p, runtime);
            tracing::info!(attempt = %r.attempt, success = r.success, turns = r.turns, "task finished");
            r
        })
        .collect();
    Ok(SuiteResult { reports })
}
