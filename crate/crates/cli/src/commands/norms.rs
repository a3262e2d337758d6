//! Norm-equivalence ratios of solutions over a corpus and a refinement sweep.

use super::{drift, median, Failure, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::pool::Pool;
use crate::report::{Cell, Report};
use dblab::corpus;
use dblab::linalg;
use dblab::norms::{self, FieldQuantity};
use dblab::solvers::{self, DbSystem, EnergyDatum};
use dblab::{BlockClass, BoundaryField, CoefficientField, SolutionHandle, WhitneyParams};
use std::collections::BTreeMap;

pub const COLUMNS: [&str; 12] = [
    "coefficient",
    "sample",
    "points",
    "block_class",
    "l2_solution",
    "nontangential_ratio",
    "square_ratio",
    "energy_ratio",
    "nontangential_drift",
    "square_drift",
    "energy_drift",
    "error",
];

pub const QUANTITIES: [&str; 3] = ["nontangential_ratio", "square_ratio", "energy_ratio"];

/// Ratios for one coefficient and datum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ratios {
    /// `‖H₀‖₂ / ‖Ñ(∇u)‖₂` for the L² solution of the proven class.
    pub nontangential: Option<f64>,
    /// `‖H̃₀‖₂ / (∬ t|∇u|²)^{1/2}` for the L² Dirichlet solution.
    pub square: Option<f64>,
    /// `(∬ |∇u|²)^{1/2} / ‖H₀‖_{S,-1/2}` for the energy Neumann solution.
    pub energy: f64,
}

impl Ratios {
    pub fn values(&self) -> [Option<f64>; 3] {
        [self.nontangential, self.square, Some(self.energy)]
    }
}

/// The L² problem solved for the nontangential ratio.
pub fn l2_problem(class: BlockClass) -> Option<&'static str> {
    if class.is_lower() {
        Some("neumann")
    } else if class.is_upper() {
        Some("regularity")
    } else {
        None
    }
}

fn evaluate(h: &SolutionHandle) -> dblab::Result<dblab::StripField> {
    solvers::evaluate(h, &norms::default_t_grid(&h.grid))
}

pub fn ratios(a: &CoefficientField, f: &BoundaryField, whitney: &WhitneyParams) -> dblab::Result<Ratios> {
    let sys = DbSystem::new(a)?;
    let g = a.grid;
    let l2 = match l2_problem(a.block_class) {
        Some("neumann") => Some(solvers::solve_neumann_l2(&sys, f, false)?),
        Some(_) => Some(solvers::solve_regularity_l2(&sys, &dblab::grid::gradient(f)?, false)?),
        None => None,
    };
    let nontangential = match l2 {
        Some(h) => Some(linalg::norm2(&h.trace) / norms::nontangential_norm(&evaluate(&h)?, whitney, FieldQuantity::Gradient)?),
        None => None,
    };
    let square = if a.block_class.is_lower() {
        let h = solvers::solve_dirichlet_l2(&sys, f, false)?;
        Some(linalg::norm2(&h.trace) / norms::square_function_norm(&evaluate(&h)?)?)
    } else {
        None
    };
    let h = solvers::solve_energy(&sys, &EnergyDatum::Neumann(f.clone()))?;
    let energy = norms::energy_norm(&evaluate(&h)?)? / solvers::vcoord_sobolev_norm(&g, &h.trace, -0.5);
    Ok(Ratios { nontangential, square, energy })
}

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> CliResult<Outcome> {
    let mut jobs: Vec<(usize, String, usize, CoefficientField, BoundaryField)> = Vec::new();
    for &n in &cfg.refinements {
        let g = cfg.grid.with_points(n)?;
        for (i, item) in cfg.coefficient_items(g)?.into_iter().enumerate() {
            for j in 0..cfg.data.samples {
                let f = corpus::random_real_scalar(g, cfg.data.bandwidth, cfg.data_seed(i, j));
                jobs.push((n, item.id.clone(), j, item.field.clone(), f));
            }
        }
    }
    let results = pool.map(&jobs, |_, (_, _, _, a, f)| ratios(a, f, &cfg.whitney));
    let mut previous: BTreeMap<(&str, usize), Ratios> = BTreeMap::new();
    let mut per_n: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut drifts: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let mut report = Report::new("norms", &COLUMNS, 3);
    let mut out = Outcome::default();
    for ((n, id, j, a, _), r) in jobs.iter().zip(results) {
        let mut row: Vec<Cell> = vec![
            id.clone().into(),
            format!("r{j:02}").into(),
            (*n).into(),
            a.block_class.name().into(),
            l2_problem(a.block_class).unwrap_or("none").into(),
        ];
        match r {
            Ok(ratios) => {
                let prev = previous.get(&(id.as_str(), *j)).copied();
                let vals = ratios.values();
                row.extend(vals.iter().map(|v| Cell::from(*v)));
                for (q, v) in vals.iter().enumerate() {
                    let Some(v) = v else {
                        row.push(Cell::Empty);
                        continue;
                    };
                    per_n.entry((q, *n)).or_default().push(*v);
                    match prev.and_then(|p| p.values()[q]) {
                        Some(p) => {
                            let d = drift(p, *v);
                            drifts.entry((q, *n)).or_default().push(d.abs());
                            row.push(d.into());
                        }
                        None => row.push(Cell::Empty),
                    }
                }
                row.push(Cell::Empty);
                previous.insert((id.as_str(), *j), ratios);
            }
            Err(e) => {
                log::error!("norms {id}/{j} at N = {n}: {e}");
                out.failures.push(Failure::from_error(&format!("{id}/r{j:02}@{n}"), "norms", &e));
                row.extend(std::iter::repeat(Cell::Empty).take(6));
                row.push(e.to_string().into());
                previous.remove(&(id.as_str(), *j));
            }
        }
        report.push(row);
    }
    let mut summary = Report::new("norms_summary", &["quantity", "points", "count", "min", "median", "max", "max_abs_drift"], 2);
    for ((q, n), mut v) in per_n {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let count = v.len();
        let med = median(&mut v);
        let d = drifts.get(&(q, n)).map(|d| d.iter().cloned().fold(0.0, f64::max));
        summary.push(vec![QUANTITIES[q].into(), n.into(), count.into(), lo.into(), med.into(), hi.into(), d.into()]);
    }
    out.reports.push(report);
    out.reports.push(summary);
    Ok(out)
}
