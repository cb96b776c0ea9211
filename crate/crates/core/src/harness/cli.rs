//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use super::config::{parse_document, SchemaError};
use super::sweep::{parse_grid, set_parameter, sweep};
use super::{run_scenario, write_files_atomically, write_report, HarnessError};

/// Sets the default output root when neither `--out` nor the scenario names
/// a directory. Never affects results.
pub const OUT_DIR_ENV: &str = "GOSPACE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "gospace", version, about = "Age-aware space networking simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write metrics.csv and summary.txt.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override horizon_ms.
        #[arg(long, value_name = "MS")]
        horizon: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        scenario: PathBuf,
        /// Dotted path into the scenario document, e.g. sampling.policy.beta.
        #[arg(long)]
        param: String,
        /// Comma separated values.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Check a scenario without running it.
    Validate { scenario: PathBuf },
    /// Print the version.
    Version,
}

const EXIT_RUNTIME: i32 = 1;
const EXIT_INVALID: i32 = 2;

fn read_document(path: &Path) -> Result<Value, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if text.trim().is_empty() {
        return Ok(Value::Object(Map::new()));
    }
    serde_json::from_str(&text).map_err(|e| HarnessError::Schema(vec![SchemaError::new("", format!("not valid JSON: {e}"))]))
}

fn output_dir(flag: Option<PathBuf>, from_doc: Option<PathBuf>, scenario: &Path, suffix: &str) -> PathBuf {
    if let Some(dir) = flag.or(from_doc) {
        return dir;
    }
    let stem = scenario.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
    let root = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from);
    root.join(format!("{stem}{suffix}"))
}

fn exit_code(e: &HarnessError) -> i32 {
    match e {
        HarnessError::Schema(_) | HarnessError::UnknownParameter(_) => EXIT_INVALID,
        _ => EXIT_RUNTIME,
    }
}

fn report_error(err: &mut dyn Write, e: &HarnessError) {
    match e {
        HarnessError::Schema(errs) => {
            let _ = writeln!(err, "error: scenario is invalid ({} problem{})", errs.len(), if errs.len() == 1 { "" } else { "s" });
            for s in errs {
                let _ = writeln!(err, "  {s}");
            }
        }
        other => {
            let _ = writeln!(err, "error: {other}");
        }
    }
}

/// Runs the CLI and returns the process exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return e.exit_code();
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            report_error(err, &e);
            exit_code(&e)
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), HarnessError> {
    match command {
        Command::Version => {
            let _ = writeln!(out, "gospace {}", env!("CARGO_PKG_VERSION"));
        }
        Command::Validate { scenario } => {
            let cfg = parse_document(read_document(&scenario)?)?;
            let _ = writeln!(out, "{}: ok ({} scenario)", scenario.display(), cfg.kind);
        }
        Command::Run { scenario, seed, horizon, out: dir } => {
            let mut doc = read_document(&scenario)?;
            if let Some(h) = horizon {
                set_parameter(&mut doc, "horizon_ms", Value::from(h))?;
            }
            let cfg = parse_document(doc)?;
            let report = run_scenario(&cfg, seed)?;
            let dir = output_dir(dir, cfg.output_dir.clone(), &scenario, "");
            let written = write_report(&report, &dir)?;
            let _ = write!(out, "{}", report.summary_text());
            for p in written {
                let _ = writeln!(out, "wrote {}", p.display());
            }
        }
        Command::Sweep { scenario, param, grid, seed, out: dir } => {
            let doc = read_document(&scenario)?;
            let base = parse_document(doc.clone())?;
            let values = parse_grid(&grid);
            if values.is_empty() {
                return Err(HarnessError::Schema(vec![SchemaError::new("grid", "no values given")]));
            }
            let result = sweep(&doc, &param, &values, seed)?;
            let dir = output_dir(dir, base.output_dir, &scenario, "_sweep");
            let written = write_files_atomically(&dir, &result.files())?;
            let _ = write!(out, "{}", result.summary_text());
            for p in written {
                let _ = writeln!(out, "wrote {}", p.display());
            }
        }
    }
    Ok(())
}
