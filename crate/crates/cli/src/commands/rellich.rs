//! Rellich constants over a corpus and a refinement sweep.

use super::{drift, Failure, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::pool::Pool;
use crate::report::{Cell, Report};
use dblab::boundary::{self, RellichConstants};
use dblab::CoefficientField;
use std::collections::BTreeMap;

pub const COLUMNS: [&str; 10] = [
    "coefficient",
    "points",
    "block_class",
    "forward",
    "inverse",
    "graph_residual",
    "factorization_mismatch",
    "forward_drift",
    "inverse_drift",
    "error",
];

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> CliResult<Outcome> {
    let mut jobs: Vec<(usize, String, CoefficientField)> = Vec::new();
    for &n in &cfg.refinements {
        for item in cfg.coefficient_items(cfg.grid.with_points(n)?)? {
            jobs.push((n, item.id, item.field));
        }
    }
    let results = pool.map(&jobs, |_, (_, _, a)| boundary::rellich_constant(a));
    let mut previous: BTreeMap<&str, RellichConstants> = BTreeMap::new();
    let mut report = Report::new("rellich", &COLUMNS, 2);
    let mut out = Outcome::default();
    // Jobs are ordered by refinement, so `previous` holds the next coarser grid.
    for ((n, id, a), r) in jobs.iter().zip(results) {
        let head: Vec<Cell> = vec![id.clone().into(), (*n).into(), a.block_class.name().into()];
        match r {
            Ok(c) => {
                let (fd, id_) = match previous.get(id.as_str()) {
                    Some(p) => (drift(p.forward, c.forward), drift(p.inverse, c.inverse)),
                    None => (f64::NAN, f64::NAN),
                };
                let mut row = head;
                row.extend([
                    c.forward.into(),
                    c.inverse.into(),
                    c.graph_residual.into(),
                    c.factorization_mismatch.into(),
                    optional(fd),
                    optional(id_),
                    Cell::Empty,
                ]);
                report.push(row);
                previous.insert(id.as_str(), c);
            }
            Err(e) => {
                log::error!("rellich {id} at N = {n}: {e}");
                out.failures.push(Failure::from_error(&format!("{id}@{n}"), "rellich", &e));
                let mut row = head;
                row.extend(std::iter::repeat(Cell::Empty).take(6));
                row.push(e.to_string().into());
                report.push(row);
                previous.remove(id.as_str());
            }
        }
    }
    out.reports.push(report);
    Ok(out)
}

fn optional(x: f64) -> Cell {
    if x.is_nan() { Cell::Empty } else { x.into() }
}
