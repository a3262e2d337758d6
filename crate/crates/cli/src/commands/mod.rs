//! Subcommand drivers. Each returns an [`Outcome`]; nothing is written here.

pub mod convergence;
pub mod norms;
pub mod rellich;
pub mod solve;
pub mod verify;

use crate::config::{ExperimentConfig, Subcommand};
use crate::error::{core_exit_code, exit, CliResult};
use crate::report::Report;
use serde::Serialize;
use std::path::PathBuf;

/// One failing case, serialized to `failures.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub item: String,
    pub stage: String,
    pub message: String,
    pub exit_code: i32,
}

impl Failure {
    pub fn from_error(item: &str, stage: &str, e: &dblab::Error) -> Self {
        Failure { item: item.into(), stage: stage.into(), message: e.to_string(), exit_code: core_exit_code(e) }
    }

    pub fn verification(item: &str, stage: &str, message: String) -> Self {
        Failure { item: item.into(), stage: stage.into(), message, exit_code: exit::VERIFICATION }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub reports: Vec<Report>,
    pub failures: Vec<Failure>,
    /// Files written during the run (field dumps).
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    /// Worst failure: numerical (3) over configuration (2) over verification (1).
    pub fn exit_code(&self) -> i32 {
        let codes: Vec<i32> = self.failures.iter().map(|f| f.exit_code).collect();
        [exit::NUMERICAL, exit::CONFIG, exit::VERIFICATION].into_iter().find(|c| codes.contains(c)).unwrap_or(exit::OK)
    }

    pub fn sort(&mut self) {
        for r in &mut self.reports {
            r.sort();
        }
        self.failures.sort_by(|a, b| (&a.stage, &a.item, &a.message).cmp(&(&b.stage, &b.item, &b.message)));
    }
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let pool = crate::pool::Pool::new(cfg.workers)?;
    let mut out = match cfg.subcommand {
        Subcommand::Verify => verify::run(cfg, &pool)?,
        Subcommand::Solve => solve::run(cfg, &pool)?,
        Subcommand::Rellich => rellich::run(cfg, &pool)?,
        Subcommand::Convergence => convergence::run(cfg, &pool)?,
        Subcommand::Norms => norms::run(cfg, &pool)?,
    };
    out.sort();
    Ok(out)
}

/// Relative change `b / a - 1`, `NaN` when undefined.
pub fn drift(a: f64, b: f64) -> f64 {
    if a.is_finite() && b.is_finite() && a != 0.0 {
        b / a - 1.0
    } else {
        f64::NAN
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
