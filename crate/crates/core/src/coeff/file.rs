//! JSON coefficient files.
//!
//! ```json
//! { "entries": [["2 + 0.3*sin(x1)", "0"],
//!               [{"dump": "c.json"}, "1"]] }
//! ```
//! Each entry is an expression string or a reference to a scalar field dump,
//! resolved relative to the file's directory.

use super::expr::parse_coefficient_expr;
use super::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::{dump, GridSpec};
use crate::linalg::c64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntrySource {
    Expr(String),
    Dump { dump: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub entries: Vec<Vec<EntrySource>>,
}

impl CoefficientFile {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Evaluates every entry on `grid`; dump paths resolve against `base_dir`.
    pub fn build(&self, grid: GridSpec, base_dir: &Path) -> Result<CoefficientField> {
        let s = 1 + grid.dim;
        if self.entries.len() != s || self.entries.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidParameter(format!("coefficient file must list a {s} x {s} matrix")));
        }
        let mut cols: Vec<Vec<c64>> = Vec::with_capacity(s * s);
        for src in self.entries.iter().flatten() {
            let f = match src {
                EntrySource::Expr(e) => parse_coefficient_expr(e, &grid)?,
                EntrySource::Dump { dump: p } => {
                    let f = dump::read_field(&base_dir.join(p))?.to_physical();
                    if f.grid != grid || f.components != 1 {
                        return Err(Error::InvalidParameter(format!("dump {p} is not a scalar field on the requested grid")));
                    }
                    f
                }
            };
            cols.push(f.values);
        }
        let samples = (0..grid.total()).flat_map(|p| cols.iter().map(move |c| c[p])).collect();
        CoefficientField::new(grid, samples)
    }
}
