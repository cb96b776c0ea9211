//! Scenario files in, metrics files out.

mod cli;
mod config;
mod report;
mod run;
mod sweep;

pub use cli::{main_with_args, Cli, Command, OUT_DIR_ENV};
pub use config::{
    parse_document, parse_scenario, EndToEndSection, MarsRttSection, RandomAccessSection, RelaySection,
    ScenarioBody, ScenarioConfig, ScenarioKind, SchemaError,
};
pub use report::{columns, Cell, FlowMetrics, MetricsReport, RunMeta, Table, COMMON_COLUMNS};
pub use run::{run_scenario, scenario_hash};
pub use sweep::{parse_grid, set_parameter, sweep, SweepPoint, SweepResult};

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}", list(.0))]
    Schema(Vec<SchemaError>),
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("{kind} scenario failed: {message}")]
    Run { kind: ScenarioKind, message: String },
    #[error("bundle accounting does not balance: {0}")]
    Conservation(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

fn list(errs: &[SchemaError]) -> String {
    errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

impl From<Vec<SchemaError>> for HarnessError {
    fn from(errs: Vec<SchemaError>) -> Self {
        HarnessError::Schema(errs)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io { path: path.to_path_buf(), message: e.to_string() }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_scenario(&text)?)
}

/// Writes `files` into `dir`. Every file is first written to a temporary
/// sibling; renames happen only once all of them were written.
pub fn write_files_atomically(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let mut tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(dir)
            .map_err(io_err(dir))?;
        tmp.write_all(contents.as_bytes()).map_err(io_err(tmp.path()))?;
        tmp.as_file().sync_all().map_err(io_err(tmp.path()))?;
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| HarnessError::Io {
            path: target.clone(),
            message: e.error.to_string(),
        })?;
        written.push(target);
    }
    Ok(written)
}

pub fn write_report(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    write_files_atomically(dir, &report.files())
}
