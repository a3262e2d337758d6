//! Experiment runner for the `dblab` operator laboratory: configuration,
//! parallel corpus execution and report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod pool;
pub mod report;

pub use commands::{run, Failure, Outcome};
pub use config::{ExperimentConfig, Format, Subcommand};
pub use error::{exit, CliError, CliResult};
pub use report::{Cell, Report};

use std::io::Write;
use std::path::PathBuf;

/// Writes every report (and `failures.json` when there are failures) to the
/// output directory, or prints the reports to `out` when none is configured.
pub fn emit(cfg: &ExperimentConfig, outcome: &Outcome, out: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    match &cfg.output {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for r in &outcome.reports {
                written.push(r.write(dir, cfg.format)?);
            }
            let path = dir.join("failures.json");
            if outcome.failures.is_empty() {
                if path.exists() {
                    std::fs::remove_file(&path)?;
                }
            } else {
                std::fs::write(&path, serde_json::to_string_pretty(&outcome.failures)? + "\n")?;
                written.push(path);
            }
        }
        None => {
            for r in &outcome.reports {
                write!(out, "{}", r.render(cfg.format)?)?;
            }
            if !outcome.failures.is_empty() {
                writeln!(out, "{}", serde_json::to_string_pretty(&outcome.failures)?)?;
            }
        }
    }
    Ok(written)
}
