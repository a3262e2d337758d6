//! Variational oracle against the spectral `Γ_ND` under simultaneous refinement.

use super::{Failure, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::pool::Pool;
use crate::report::{Cell, Report};
use dblab::boundary;
use dblab::linalg;
use dblab::oracle::StripFactor;
use dblab::solvers::DbSystem;
use dblab::{CoefficientField, StripMesh};
use std::collections::BTreeMap;

pub const COLUMNS: [&str; 7] = ["coefficient", "points", "cells", "block_class", "relative_error", "order", "error"];

/// `‖Γ_oracle - Γ_spectral‖ / ‖Γ_spectral‖` in the `s = -1/2` weighted norm.
pub fn gamma_nd_error(a: &CoefficientField, cells: usize, height: f64) -> dblab::Result<f64> {
    let g = a.grid;
    let sys = DbSystem::new(a)?;
    let spectral = boundary::gamma_nd(sys.sgn_blocks()?, -0.5)?;
    let mesh = StripMesh::new(g, cells, height * g.period)?;
    let oracle = StripFactor::new(a, &mesh)?.gamma_nd();
    let diff = linalg::sub(oracle.as_ref(), spectral.matrix.as_ref());
    Ok(boundary::weighted_norm(&g, &diff, -0.5) / spectral.norm(-0.5))
}

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> CliResult<Outcome> {
    let mut jobs: Vec<(usize, String, CoefficientField)> = Vec::new();
    for &n in &cfg.refinements {
        for item in cfg.coefficient_items(cfg.grid.with_points(n)?)? {
            jobs.push((n, item.id, item.field));
        }
    }
    let cpp = cfg.oracle.cells_per_point;
    let results = pool.map(&jobs, |_, (n, _, a)| gamma_nd_error(a, cpp * n, cfg.oracle.height));
    let mut previous: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    let mut report = Report::new("convergence", &COLUMNS, 2);
    let mut out = Outcome::default();
    for ((n, id, a), r) in jobs.iter().zip(results) {
        let mut row: Vec<Cell> = vec![id.clone().into(), (*n).into(), (cpp * n).into(), a.block_class.name().into()];
        match r {
            Ok(e) => {
                let order = previous.get(id.as_str()).map(|&(pn, pe)| (pe / e).log2() / (*n as f64 / pn as f64).log2());
                row.extend([e.into(), order.into(), Cell::Empty]);
                previous.insert(id.as_str(), (*n, e));
            }
            Err(err) => {
                log::error!("convergence {id} at N = {n}: {err}");
                out.failures.push(Failure::from_error(&format!("{id}@{n}"), "convergence", &err));
                row.extend([Cell::Empty, Cell::Empty, err.to_string().into()]);
                previous.remove(id.as_str());
            }
        }
        report.push(row);
    }
    out.reports.push(report);
    Ok(out)
}
