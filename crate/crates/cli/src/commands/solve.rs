//! Boundary value problems for each coefficient and datum, with optional oracle comparison.

use super::{Failure, Outcome};
use crate::config::{CoefficientItem, ExperimentConfig, Problem};
use crate::error::{CliError, CliResult};
use crate::pool::Pool;
use crate::report::{Cell, Report};
use dblab::coeff::expr::parse_coefficient_expr;
use dblab::corpus;
use dblab::grid::{self, dump};
use dblab::linalg::{self, c64};
use dblab::norms::{self, FieldQuantity};
use dblab::oracle::{self, Lifting, StripFactor};
use dblab::solvers::{self, DbSystem, EnergyDatum};
use dblab::{BoundaryField, GridSpec, SolutionHandle, StripField, StripMesh};
use std::path::{Path, PathBuf};

pub const COLUMNS: [&str; 16] = [
    "coefficient",
    "sample",
    "problem",
    "block_class",
    "exploratory",
    "trace_ratio",
    "subspace_defect",
    "condition",
    "factorization_mismatch",
    "datum_residual",
    "square_function",
    "energy",
    "nontangential",
    "u_oscillation",
    "oracle_delta",
    "error",
];

/// Boundary data of one sample.
#[derive(Clone, Debug)]
pub struct Datum {
    pub name: String,
    /// Scalar datum (Neumann data, Dirichlet data, or the regularity potential).
    pub scalar: Option<BoundaryField>,
    /// Tangential regularity datum when given directly.
    pub tangential: Option<BoundaryField>,
}

fn data(cfg: &ExperimentConfig, g: GridSpec, item: usize) -> CliResult<Vec<Datum>> {
    let d = &cfg.data;
    if let Some(comps) = &d.tangential {
        if d.problem != Problem::Regularity {
            return Err(CliError::Config("tangential data only apply to the regularity problem".into()));
        }
        if comps.len() != g.dim {
            return Err(CliError::Config(format!("tangential datum needs {} expressions", g.dim)));
        }
        let mut values = Vec::with_capacity(g.dim * g.total());
        for e in comps {
            values.extend(parse_coefficient_expr(e, &g)?.values);
        }
        let t = BoundaryField::new(g, g.dim, values, dblab::Representation::Physical)?;
        return Ok(vec![Datum { name: "expr".into(), scalar: None, tangential: Some(t) }]);
    }
    if let Some(e) = &d.expr {
        return Ok(vec![Datum { name: "expr".into(), scalar: Some(parse_coefficient_expr(e, &g)?), tangential: None }]);
    }
    Ok((0..d.samples)
        .map(|j| Datum {
            name: format!("r{j:02}"),
            scalar: Some(corpus::random_real_scalar(g, d.bandwidth, cfg.data_seed(item, j))),
            tangential: None,
        })
        .collect())
}

/// Solves one problem; `force` admits coefficients outside the proven class.
pub fn solve_one(sys: &DbSystem, problem: Problem, datum: &Datum, force: bool) -> dblab::Result<SolutionHandle> {
    let scalar = || datum.scalar.as_ref().ok_or_else(|| dblab::Error::InvalidParameter("problem needs a scalar datum".into()));
    match problem {
        Problem::Neumann => solvers::solve_neumann_l2(sys, scalar()?, force),
        Problem::Regularity => {
            let g = match &datum.tangential {
                Some(t) => t.clone(),
                None => grid::gradient(scalar()?)?,
            };
            solvers::solve_regularity_l2(sys, &g, force)
        }
        Problem::Dirichlet => solvers::solve_dirichlet_l2(sys, scalar()?, force),
        Problem::EnergyNeumann => solvers::solve_energy(sys, &EnergyDatum::Neumann(scalar()?.clone())),
        Problem::EnergyDirichlet => solvers::solve_energy(sys, &EnergyDatum::Dirichlet(scalar()?.clone())),
    }
}

/// Relative mismatch between the solution's boundary behaviour and its datum.
pub fn datum_residual(h: &SolutionHandle, problem: Problem, datum: &Datum) -> dblab::Result<f64> {
    let g = h.grid;
    let m = g.num_modes();
    let rel = |a: &[c64], b: &[c64]| {
        let n = linalg::norm2(b);
        let d = linalg::norm2(&linalg::vsub(a, b));
        if n > 0.0 { d / n } else { d }
    };
    match problem {
        Problem::Neumann | Problem::EnergyNeumann => {
            let f = grid::modes_of(datum.scalar.as_ref().expect("scalar datum"), 0);
            Ok(rel(&h.trace[..m], &f))
        }
        Problem::Regularity => {
            let t = match &datum.tangential {
                Some(t) => t.clone(),
                None => grid::gradient(datum.scalar.as_ref().expect("scalar datum"))?,
            };
            Ok(rel(&h.trace[m..], &solvers::tangential_vcoord(&t)?))
        }
        Problem::Dirichlet | Problem::EnergyDirichlet => {
            let want = datum.scalar.as_ref().expect("scalar datum").to_physical();
            let got = h.boundary_values().to_physical();
            let n = want.l2_norm();
            let d = got.sub(&want)?.l2_norm();
            Ok(if n > 0.0 { d / n } else { d })
        }
    }
}

/// `max_k max_x |u(t_k, x) - mean u(t_k)|`.
pub fn u_oscillation(field: &StripField) -> f64 {
    (0..field.levels())
        .map(|k| {
            let u = field.u_field(k).to_physical();
            let mean = u.mean(0);
            u.values.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Relative strip-L² gradient error against the variational oracle.
pub fn oracle_delta(cfg: &ExperimentConfig, a: &dblab::CoefficientField, h: &SolutionHandle, problem: Problem, datum: &Datum) -> dblab::Result<f64> {
    let g = a.grid;
    let mesh = StripMesh::new(g, cfg.oracle.cells_per_point * g.points, cfg.oracle.height * g.period)?;
    let factor = StripFactor::new(a, &mesh)?;
    let f = datum
        .scalar
        .as_ref()
        .ok_or_else(|| dblab::Error::InvalidParameter("oracle comparison needs a scalar datum".into()))?;
    let sol = match problem {
        // The oracle's load is the outward conormal derivative.
        Problem::Neumann | Problem::EnergyNeumann => factor.solve_neumann(&f.map_values(|z| -z))?,
        Problem::Regularity | Problem::Dirichlet | Problem::EnergyDirichlet => factor.solve_regularity(f, Lifting::Hat)?,
    };
    oracle::gradient_discrepancy(h, &sol)
}

struct Row {
    cells: Vec<Cell>,
    failure: Option<Failure>,
    artifacts: Vec<PathBuf>,
}

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> CliResult<Outcome> {
    let g = cfg.grid.spec()?;
    let items = cfg.coefficient_items(g)?;
    let mut jobs = Vec::new();
    for (i, item) in items.iter().enumerate() {
        for d in data(cfg, g, i)? {
            jobs.push((item, d));
        }
    }
    let dump_dir = cfg.output.as_ref().map(|o| o.join("fields"));
    if let Some(d) = &dump_dir {
        std::fs::create_dir_all(d)?;
    }
    let rows = pool.map(&jobs, |_, (item, datum)| solve_row(cfg, item, datum, dump_dir.as_deref()));
    let mut report = Report::new("solve", &COLUMNS, 2);
    let mut out = Outcome::default();
    for r in rows {
        report.push(r.cells);
        out.failures.extend(r.failure);
        out.artifacts.extend(r.artifacts);
    }
    out.artifacts.sort();
    out.reports.push(report);
    Ok(out)
}

fn solve_row(cfg: &ExperimentConfig, item: &CoefficientItem, datum: &Datum, dump_dir: Option<&Path>) -> Row {
    let problem = cfg.data.problem;
    let head: Vec<Cell> = vec![
        item.id.clone().into(),
        datum.name.clone().into(),
        problem.name().into(),
        item.field.block_class.name().into(),
    ];
    let mut artifacts = Vec::new();
    let body = (|| -> dblab::Result<Vec<Cell>> {
        let sys = DbSystem::new(&item.field)?;
        let h = solve_one(&sys, problem, datum, cfg.force)?;
        // Norms always use the default log grid; `t_grid` only shapes the dumps.
        let field = solvers::evaluate(&h, &norms::default_t_grid(&h.grid))?;
        let sq = norms::square_function_norm(&field)?;
        let en = norms::energy_norm(&field)?;
        let nt = norms::nontangential_norm(&field, &cfg.whitney, FieldQuantity::Gradient)?;
        let delta = if cfg.data.oracle { Some(oracle_delta(cfg, &item.field, &h, problem, datum)?) } else { None };
        if let Some(dir) = dump_dir {
            let stem = format!("{}_{}", item.id, datum.name);
            let field = match &cfg.data.t_grid {
                Some(ts) => solvers::evaluate(&h, ts)?,
                None => field.clone(),
            };
            artifacts.push(field.write_dump(dir, &format!("strip_{stem}"))?);
            artifacts.push(field.write_u_dump(dir, &format!("u_{stem}"))?);
            artifacts.push(dump::write_field(dir, &format!("trace_{stem}"), &h.trace_field(), "conormal_trace")?);
        }
        Ok(vec![
            h.exploratory.into(),
            h.trace_ratio.into(),
            h.subspace_defect.into(),
            h.condition.into(),
            h.factorization_mismatch.into(),
            datum_residual(&h, problem, datum)?.into(),
            sq.into(),
            en.into(),
            nt.into(),
            u_oscillation(&field).into(),
            delta.into(),
            Cell::Empty,
        ])
    })();
    match body {
        Ok(rest) => Row { cells: head.into_iter().chain(rest).collect(), failure: None, artifacts },
        Err(e) => {
            log::error!("solve {} / {}: {e}", item.id, datum.name);
            let mut cells = head;
            cells.extend(std::iter::repeat(Cell::Empty).take(COLUMNS.len() - 5));
            cells.push(e.to_string().into());
            Row { cells, failure: Some(Failure::from_error(&format!("{}/{}", item.id, datum.name), "solve", &e)), artifacts }
        }
    }
}
