//! Identity suites over a coefficient corpus.

use super::{Failure, Outcome};
use crate::config::{CoefficientItem, ExperimentConfig, GridConfig, Tolerances};
use crate::error::CliResult;
use crate::pool::Pool;
use crate::report::{Cell, Report};
use dblab::boundary::{self, SgnBlocks};
use dblab::corpus::{self, item_seed};
use dblab::linalg::{self, c64, CMat};
use dblab::operator::{self, Semigroup};
use dblab::solvers::{self, DbSystem};
use dblab::sobolev::{self, PsiSpec, QuadratureConfig};
use dblab::{coeff, grid, BlockClass, CoefficientField, FamilyKind, GridSpec, OperatorMatrix, SignMethod};

const HAT_SALT: u64 = 0x4a7f_11c3;
const PROBE_SALT: u64 = 0x9b0e_5d21;
const SMOKE_SALT: u64 = 0x2d2d_0008;
const ALL_KINDS: [FamilyKind; 6] = [
    FamilyKind::Constant,
    FamilyKind::SmoothTrig,
    FamilyKind::PiecewiseRandom,
    FamilyKind::LowerTriangularRandom,
    FamilyKind::UpperTriangularRandom,
    FamilyKind::BlockDiagonalRandom,
];

pub const COLUMNS: [&str; 7] = ["suite", "item", "check", "value", "relation", "limit", "passed"];

/// One measured constant against its acceptance limit.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub item: String,
    pub check: &'static str,
    pub value: f64,
    /// `value ≤ limit` when true, `value ≥ limit` otherwise.
    pub upper: bool,
    pub limit: f64,
}

impl Check {
    fn at_most(suite: &'static str, item: &str, check: &'static str, value: f64, limit: f64) -> Self {
        Check { suite, item: item.into(), check, value, upper: true, limit }
    }

    fn at_least(suite: &'static str, item: &str, check: &'static str, value: f64, limit: f64) -> Self {
        Check { suite, item: item.into(), check, value, upper: false, limit }
    }

    pub fn passed(&self) -> bool {
        if self.upper {
            self.value <= self.limit
        } else {
            self.value >= self.limit
        }
    }

    fn row(&self) -> Vec<Cell> {
        vec![
            self.suite.into(),
            self.item.clone().into(),
            self.check.into(),
            self.value.into(),
            (if self.upper { "<=" } else { ">=" }).into(),
            self.limit.into(),
            self.passed().into(),
        ]
    }
}

type ItemResult = Result<Vec<Check>, (String, &'static str, dblab::Error)>;

pub fn run(cfg: &ExperimentConfig, pool: &Pool) -> CliResult<Outcome> {
    let g = cfg.grid.spec()?;
    let tol = cfg.tolerances.for_points(g.points);
    let items = cfg.coefficient_items(g)?;
    let mut results: Vec<ItemResult> = Vec::new();

    results.push(Ok(hat_suite(cfg, pool)?));
    results.extend(pool.map(&items, |i, item| member_checks(cfg, &tol, item, i as u64, "")));
    results.push(laplace_suite(g, &tol).map_err(|e| ("identity".to_string(), "laplace", e)));
    if cfg.verify.quadrature {
        results.push(quadrature_suite(g, &tol).map_err(|e| ("all".to_string(), "quadrature", e)));
    }
    if cfg.verify.smoke_2d > 0 {
        let g2 = GridConfig { dim: 2, points: 8, ..cfg.grid }.spec()?;
        let smoke_cfg = ExperimentConfig { master_seed: cfg.master_seed ^ SMOKE_SALT, ..cfg.clone() };
        let mut smoke = smoke_cfg.coefficient_items(g2)?;
        smoke.truncate(cfg.verify.smoke_2d);
        let tol2 = cfg.tolerances.for_points(8);
        results.extend(pool.map(&smoke, |i, item| member_checks(cfg, &tol2, item, i as u64, "n2/")));
    }
    Ok(collect(results))
}

fn collect(results: Vec<ItemResult>) -> Outcome {
    let mut report = Report::new("verify", &COLUMNS, 3);
    let mut out = Outcome::default();
    for r in results {
        match r {
            Ok(checks) => {
                for c in checks {
                    if !c.passed() {
                        let rel = if c.upper { "<=" } else { ">=" };
                        let msg = format!("{} = {:e}, required {rel} {:e}", c.check, c.value, c.limit);
                        out.failures.push(Failure::verification(&c.item, c.suite, msg));
                    }
                    report.push(c.row());
                }
            }
            Err((item, suite, e)) => {
                log::error!("{suite} / {item}: {e}");
                out.failures.push(Failure::from_error(&item, suite, &e));
                report.push(vec![suite.into(), item.into(), "error".into(), f64::NAN.into(), "<=".into(), 0.0.into(), false.into()]);
            }
        }
    }
    out.reports.push(report);
    out
}

/// `hat(hat(A)) = A` and block-class preservation over a large seeded corpus,
/// reported as the worst case.
fn hat_suite(cfg: &ExperimentConfig, pool: &Pool) -> CliResult<Vec<Check>> {
    let v = &cfg.verify;
    let g = cfg.grid.with_points(v.hat_points)?;
    let idx: Vec<usize> = (0..v.hat_members).collect();
    let per: Vec<Result<(f64, bool), dblab::Error>> = pool.map(&idx, |_, &i| {
        let kind = ALL_KINDS[i % ALL_KINDS.len()];
        let a = coeff::make_family(kind, &v.hat_params, g, item_seed(cfg.master_seed ^ HAT_SALT, i as u64))?;
        let b = coeff::hat_transform(&a)?;
        let bb = coeff::hat_transform(&b)?;
        Ok((bb.sup_distance(&a), b.block_class == a.block_class && bb.block_class == a.block_class))
    });
    let mut worst = 0.0f64;
    let mut mismatches = 0usize;
    for r in per {
        let (d, same) = r?;
        worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        mismatches += usize::from(!same);
    }
    let item = format!("{}x{}", v.hat_members, v.hat_points);
    Ok(vec![
        Check::at_most("hat", &item, "involution_sup", worst, cfg.tolerances.hat_involution),
        Check::at_most("hat", &item, "class_mismatches", mismatches as f64, 0.0),
    ])
}

fn member_checks(cfg: &ExperimentConfig, tol: &Tolerances, item: &CoefficientItem, index: u64, prefix: &str) -> ItemResult {
    let id = format!("{prefix}{}", item.id);
    let seed = item_seed(cfg.master_seed ^ PROBE_SALT, index);
    let wrap = |stage: &'static str| {
        let id = id.clone();
        move |e: dblab::Error| (id, stage, e)
    };
    let sys = DbSystem::new(&item.field).map_err(wrap("calculus"))?;
    let (mut checks, sign) = calculus(&sys, tol, &id).map_err(wrap("calculus"))?;
    checks.extend(boundary_checks(&sign, tol, cfg, &id, seed).map_err(wrap("boundary"))?);
    if item.field.block_class == BlockClass::BlockDiagonal {
        checks.extend(kato(&item.field, tol, &id, seed, cfg.verify.kato_probes).map_err(wrap("kato"))?);
    }
    Ok(checks)
}

fn dist(a: &CMat, b: &CMat) -> f64 {
    linalg::op_norm(linalg::sub(a.as_ref(), b.as_ref()).as_ref())
}

/// Sign, projectors and intertwining identities, as operator-norm defects.
fn calculus(sys: &DbSystem, tol: &Tolerances, id: &str) -> dblab::Result<(Vec<Check>, OperatorMatrix)> {
    let g = sys.grid();
    let s = operator::assemble_s(g);
    let sign = operator::matrix_sign(&sys.ut, SignMethod::Eigen)?;
    let newton = operator::newton_sign(&sys.ut.matrix, 1e-12, 100)?;
    let (p, q) = operator::spectral_projectors(&sign)?;
    let n = sign.dim();
    let id_m = linalg::identity(n);
    let one = c64::new(1.0, 0.0);
    let t = tol.calculus;
    let checks = vec![
        Check::at_most("calculus", id, "sgn_squared", sign.compose(&sign).distance_to_identity(), t),
        Check::at_most("calculus", id, "projector_sum", dist(&linalg::combine(one, p.matrix.as_ref(), one, q.matrix.as_ref()), &id_m), t),
        Check::at_most("calculus", id, "projector_plus_idempotent", dist(&(&p.matrix * &p.matrix), &p.matrix), t),
        Check::at_most("calculus", id, "projector_minus_idempotent", dist(&(&q.matrix * &q.matrix), &q.matrix), t),
        Check::at_most("calculus", id, "intertwining_s", dist(&(&sys.ut.matrix * &s.matrix), &(&s.matrix * &sys.t.matrix)), t),
        Check::at_most("calculus", id, "intertwining_b", dist(&(&sys.calb.matrix * &sys.ut.matrix), &(&sys.t.matrix * &sys.calb.matrix)), t),
        Check::at_most(
            "calculus",
            id,
            "newton_vs_eigen",
            if newton.converged { dist(&newton.matrix, &sign.matrix) } else { f64::INFINITY },
            tol.newton_vs_eigen,
        ),
    ];
    Ok((checks, sign))
}

fn minus_residual(sign: &OperatorMatrix, v: &[c64]) -> f64 {
    let sv = sign.apply(v);
    let m: Vec<c64> = v.iter().zip(&sv).map(|(a, b)| (a - b) * 0.5).collect();
    linalg::norm2(&m)
}

/// Boundary maps at `s = -1/2`: factorizations, inverse relation, graph property
/// and the key-lemma singular-value floors.
fn boundary_checks(sign: &OperatorMatrix, tol: &Tolerances, cfg: &ExperimentConfig, id: &str, seed: u64) -> dblab::Result<Vec<Check>> {
    let g = sign.grid;
    let b: SgnBlocks = boundary::sgn_blocks(sign);
    let nd = boundary::gamma_nd(&b, -0.5)?;
    let dn = boundary::gamma_dn(&b, -0.5)?;
    let m = g.num_modes();
    let id_m = linalg::identity(m);
    let inverse = boundary::weighted_norm(&g, &linalg::sub((&dn.matrix * &nd.matrix).as_ref(), id_m.as_ref()), -0.5);
    let mut graph = 0.0f64;
    for j in 0..cfg.verify.graph_probes {
        let f = corpus::random_dense_vcoords(g, item_seed(seed, j as u64))[..m].to_vec();
        let r = minus_residual(sign, &boundary::graph_vector(&nd, &f)) / linalg::norm2(&f);
        graph = graph.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    let key = boundary::key_lemma_check(sign, -0.5, tol.key_lemma_floor, cfg.verify.key_lemma_probes, seed);
    let nan_inf = |x: f64| if x.is_nan() { f64::INFINITY } else { x };
    Ok(vec![
        Check::at_most("boundary", id, "factorization_nd", nan_inf(nd.factorization_mismatch), tol.factorization),
        Check::at_most("boundary", id, "factorization_dn", nan_inf(dn.factorization_mismatch), tol.factorization),
        Check::at_most("boundary", id, "inverse_relation", inverse, tol.inverse_relation),
        Check::at_most("boundary", id, "graph_residual", graph, tol.graph),
        Check::at_least("boundary", id, "key_lemma_min_sigma", key.min_sigma(), tol.key_lemma_floor),
    ])
}

fn kato(a: &CoefficientField, tol: &Tolerances, id: &str, seed: u64, probes: usize) -> dblab::Result<Vec<Check>> {
    let g = a.grid;
    let bw = (g.points as i64 / 4).max(1);
    let inputs: Vec<Vec<c64>> =
        (0..probes).map(|j| grid::modes_of(&corpus::random_smooth_scalar(g, bw, item_seed(seed ^ 0x6a70, j as u64)), 0)).collect();
    let st = operator::kato_check(a, &inputs)?;
    Ok(vec![
        Check::at_least("kato", id, "min_ratio", st.min_ratio, tol.kato_floor),
        Check::at_most("kato", id, "max_ratio", st.max_ratio, 1.0 / tol.kato_floor),
    ])
}

/// `A = I`: `Γ_ND` is the identity in V-coordinates (the Riesz multiplier
/// physically) and the semigroup acts by `e^{-t|ξ|}` per mode.
fn laplace_suite(g: GridSpec, tol: &Tolerances) -> dblab::Result<Vec<Check>> {
    let a = CoefficientField::identity(g);
    let sys = DbSystem::new(&a)?;
    let b = sys.sgn_blocks()?;
    let nd = boundary::gamma_nd(b, 0.0)?;
    let m = g.num_modes();
    let map_err = dist(&nd.matrix, &linalg::identity(m));
    let sg: std::sync::Arc<Semigroup> = sys.ut_semigroup()?;
    let f = grid::modes_of(&corpus::random_smooth_scalar(g, (g.points as i64 / 4).max(1), 7), 0);
    let h = solvers::solve_neumann_l2(&sys, &grid::scalar_from_modes(g, &f), false)?;
    let abs = g.mode_table().abs;
    let mut semigroup = 0.0f64;
    for t in [0.0, 0.01, 0.1, 0.5, 1.0, 3.0] {
        let got = sg.apply(t, &h.trace)?;
        let want: Vec<c64> = (0..2 * m).map(|i| h.trace[i] * (-t * abs[i % m]).exp()).collect();
        semigroup = semigroup.max(linalg::norm2(&linalg::vsub(&got, &want)) / linalg::norm2(&h.trace));
    }
    Ok(vec![
        Check::at_most("laplace", "identity", "gamma_nd_vs_riesz", map_err, tol.laplace_map),
        Check::at_most("laplace", "identity", "factorization_nd", nd.factorization_mismatch, tol.laplace_map),
        Check::at_most("laplace", "identity", "semigroup_per_mode", semigroup, tol.laplace_semigroup),
    ])
}

/// Quadrature of `‖F‖_{S,s}` against `c_{ψ,s} ‖|S|^s F‖₂` on a random vector.
fn quadrature_suite(g: GridSpec, tol: &Tolerances) -> dblab::Result<Vec<Check>> {
    let f = corpus::random_vcoords(g, (g.points as i64 / 4).max(1), 11);
    let s_op = operator::assemble_s(g);
    let mut worst = 0.0f64;
    for s in [-0.5, 0.0, 0.5] {
        for k in [1, 2] {
            let psi = PsiSpec::new(k);
            let q = sobolev::quad_norm_adapted(&s_op, &f, s, psi, &QuadratureConfig::fine())?.value;
            let want = sobolev::c_psi(psi, s)? * solvers::vcoord_sobolev_norm(&g, &f, s);
            worst = worst.max((q / want - 1.0).abs());
        }
    }
    Ok(vec![Check::at_most("quadrature", "all", "s_norm_identity", worst, tol.quadrature)])
}
