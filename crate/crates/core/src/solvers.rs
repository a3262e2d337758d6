//! Semigroup solvers on the upper half-space `ℝ₊ × 𝕋ⁿ`.
//!
//! Every solution is carried by a trace in V-coordinates: the conormal gradient
//! `∇_A u(t) = e^{-t uT} H₀` for Neumann, regularity and energy solutions, and
//! `u(t) = -(e^{-tT} H̃₀)_⊥ + c` for the Dirichlet problem.

use crate::boundary::{self, BoundaryMap, SgnBlocks};
use crate::coeff::{self, CoefficientField};
use crate::error::{Error, Result};
use crate::grid::{self, dump, BoundaryField, GridSpec, Representation};
use crate::linalg::{self, c64, CMat};
use crate::operator::{self, OperatorMatrix, Semigroup};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// Largest accepted `‖P₋H‖ / ‖H‖` for a trace.
pub const SUBSPACE_TOL: f64 = 1e-6;
/// Largest accepted condition number of the Dirichlet system.
pub const DIRICHLET_COND_LIMIT: f64 = 1e8;

/// Operators of the first-order system for one coefficient field.
pub struct DbSystem {
    pub a: CoefficientField,
    pub b: CoefficientField,
    pub calb: OperatorMatrix,
    pub ut: OperatorMatrix,
    pub t: OperatorMatrix,
    ut_semigroup: OnceLock<Arc<Semigroup>>,
    t_semigroup: OnceLock<Arc<Semigroup>>,
    blocks: OnceLock<SgnBlocks>,
}

impl DbSystem {
    pub fn new(a: &CoefficientField) -> Result<Self> {
        let b = coeff::hat_transform(a)?;
        let calb = operator::assemble_calb(&b)?;
        let ut = operator::compose_ut(&calb);
        let t = operator::compose_t(&calb);
        Ok(DbSystem {
            a: a.clone(),
            b,
            calb,
            ut,
            t,
            ut_semigroup: OnceLock::new(),
            t_semigroup: OnceLock::new(),
            blocks: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.a.grid
    }

    pub fn ut_semigroup(&self) -> Result<Arc<Semigroup>> {
        lazy(&self.ut_semigroup, || Semigroup::new(&self.ut).map(Arc::new))
    }

    pub fn t_semigroup(&self) -> Result<Arc<Semigroup>> {
        lazy(&self.t_semigroup, || Semigroup::new(&self.t).map(Arc::new))
    }

    /// Blocks of `sgn(uT)`.
    pub fn sgn_blocks(&self) -> Result<&SgnBlocks> {
        if let Some(b) = self.blocks.get() {
            return Ok(b);
        }
        let sg = self.ut_semigroup()?;
        let sign = OperatorMatrix::new(self.grid(), sg.sign_matrix())?;
        let _ = self.blocks.set(boundary::sgn_blocks(&sign));
        Ok(self.blocks.get().expect("initialized"))
    }
}

fn lazy<T: Clone>(cell: &OnceLock<T>, init: impl FnOnce() -> Result<T>) -> Result<T> {
    if let Some(v) = cell.get() {
        return Ok(v.clone());
    }
    let v = init()?;
    let _ = cell.set(v);
    Ok(cell.get().expect("initialized").clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    L2Neumann,
    L2Regularity,
    L2Dirichlet,
    Energy,
}

impl SolutionKind {
    pub fn name(self) -> &'static str {
        match self {
            SolutionKind::L2Neumann => "l2_neumann",
            SolutionKind::L2Regularity => "l2_regularity",
            SolutionKind::L2Dirichlet => "l2_dirichlet",
            SolutionKind::Energy => "energy",
        }
    }
}

/// Boundary datum of an energy solve.
#[derive(Clone, Debug)]
pub enum EnergyDatum {
    /// Conormal derivative `f ∈ Ḣ^{-1/2}`.
    Neumann(BoundaryField),
    /// Boundary values `f ∈ Ḣ^{1/2}`.
    Dirichlet(BoundaryField),
}

/// A solution represented by its trace.
#[derive(Clone)]
pub struct SolutionHandle {
    pub kind: SolutionKind,
    pub grid: GridSpec,
    /// `H₀` (conormal gradient at `t = 0`) or, for Dirichlet, `H̃₀`.
    pub trace: Vec<c64>,
    /// Additive constant of `u`: the mean of `u(0)` for Dirichlet solutions, the limit as `t → ∞` otherwise.
    pub gauge: c64,
    /// `‖trace‖₂ / ‖datum‖₂`.
    pub trace_ratio: f64,
    /// `‖P₋ trace‖ / ‖trace‖`.
    pub subspace_defect: f64,
    /// Computed outside the proven block class.
    pub exploratory: bool,
    /// Conditioning diagnostic: `σ_min` of the inverted block, or the condition
    /// number of the Dirichlet system.
    pub condition: Option<f64>,
    /// Relative mismatch of the two boundary-map factorizations.
    pub factorization_mismatch: Option<f64>,
    semigroup: Arc<Semigroup>,
    b: Arc<CoefficientField>,
}

impl std::fmt::Debug for SolutionHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionHandle")
            .field("kind", &self.kind)
            .field("grid", &self.grid)
            .field("gauge", &self.gauge)
            .field("trace_ratio", &self.trace_ratio)
            .field("subspace_defect", &self.subspace_defect)
            .field("exploratory", &self.exploratory)
            .field("condition", &self.condition)
            .finish_non_exhaustive()
    }
}

impl SolutionHandle {
    /// The trace as an ℋ⁰ field.
    pub fn trace_field(&self) -> BoundaryField {
        grid::from_vcoords(self.grid, &self.trace)
    }

    /// `u(0, ·)`.
    pub fn boundary_values(&self) -> BoundaryField {
        self.evaluate_one(0.0).u_field(0)
    }

    fn evaluate_one(&self, t: f64) -> StripField {
        evaluate(self, &[t]).expect("valid single time")
    }
}

fn require_class(a: &CoefficientField, lower: bool, force: bool) -> Result<bool> {
    let ok = if lower { a.block_class.is_lower() } else { a.block_class.is_upper() };
    if ok {
        return Ok(false);
    }
    if !force {
        let expected = if lower { "lower_triangular" } else { "upper_triangular" };
        return Err(Error::BlockClass { expected, found: a.block_class.name() });
    }
    log::warn!("solving outside the proven block class ({}); output is exploratory", a.block_class.name());
    Ok(true)
}

fn scalar_modes(f: &BoundaryField, what: &str) -> Result<Vec<c64>> {
    if f.components != 1 {
        return Err(Error::InvalidParameter(format!("{what} must be a scalar field")));
    }
    let scale = f.l2_norm().max(1.0);
    if f.mean(0).norm() * f.grid.unitary_scale() > 1e-10 * scale {
        return Err(Error::InvalidParameter(format!("{what} must have zero mean")));
    }
    Ok(grid::modes_of(f, 0))
}

fn handle(
    kind: SolutionKind,
    sys: &DbSystem,
    semigroup: Arc<Semigroup>,
    trace: Vec<c64>,
    datum_norm: f64,
    gauge: c64,
    exploratory: bool,
    condition: Option<f64>,
    factorization_mismatch: Option<f64>,
) -> Result<SolutionHandle> {
    let norm = linalg::norm2(&trace);
    let subspace_defect = semigroup.minus_ratio(&trace);
    if norm > 0.0 && subspace_defect > SUBSPACE_TOL {
        return Err(Error::WrongSubspace { ratio: subspace_defect });
    }
    Ok(SolutionHandle {
        kind,
        grid: sys.grid(),
        trace,
        gauge,
        trace_ratio: if datum_norm > 0.0 { norm / datum_norm } else { 0.0 },
        subspace_defect,
        exploratory,
        condition,
        factorization_mismatch,
        semigroup,
        b: Arc::new(sys.b.clone()),
    })
}

fn map_diag(sys: &DbSystem, map: &BoundaryMap, block: &CMat, s: f64) -> (Option<f64>, Option<f64>) {
    let sigma = boundary::weighted_min_singular(&sys.grid(), block, s);
    let mm = map.factorization_mismatch;
    (Some(sigma), if mm.is_nan() { None } else { Some(mm) })
}

/// L² Neumann problem `∂_{ν_A} u = f`; `A` must be lower triangular unless forced.
pub fn solve_neumann_l2(sys: &DbSystem, f: &BoundaryField, force: bool) -> Result<SolutionHandle> {
    let exploratory = require_class(&sys.a, true, force)?;
    let fm = scalar_modes(f, "Neumann datum")?;
    let blocks = sys.sgn_blocks()?;
    let map = boundary::gamma_nd(blocks, 0.0)?;
    let (condition, mm) = map_diag(sys, &map, &blocks.s12, 0.0);
    let trace = boundary::graph_vector(&map, &fm);
    handle(SolutionKind::L2Neumann, sys, sys.ut_semigroup()?, trace, linalg::norm2(&fm), ZERO, exploratory, condition, mm)
}

/// V-coordinate `p∥` of a curl-free tangential field `g = ∇_x f`.
pub fn tangential_vcoord(g: &BoundaryField) -> Result<Vec<c64>> {
    let grid = g.grid;
    if g.components != grid.dim {
        return Err(Error::InvalidParameter(format!("tangential field must have {} components", grid.dim)));
    }
    let t = grid.total();
    let gp = g.to_frequency();
    let mut values = vec![ZERO; (1 + grid.dim) * t];
    values[t..].copy_from_slice(&gp.values);
    let full = BoundaryField::new(grid, 1 + grid.dim, values, Representation::Frequency)?;
    full.check_h0(1e-8).map_err(|e| match e {
        Error::NotInH0(m) => Error::NotInH0(format!("tangential datum: {m}")),
        other => other,
    })?;
    let v = grid::project_vcoords(&full)?;
    Ok(v[grid.mode_table().len()..].to_vec())
}

/// L² regularity problem `∇_x u = g`; `A` must be upper triangular unless forced.
pub fn solve_regularity_l2(sys: &DbSystem, g: &BoundaryField, force: bool) -> Result<SolutionHandle> {
    let exploratory = require_class(&sys.a, false, force)?;
    let par = tangential_vcoord(g)?;
    let blocks = sys.sgn_blocks()?;
    let map = boundary::gamma_dn(blocks, 0.0)?;
    let (condition, mm) = map_diag(sys, &map, &blocks.s21, 0.0);
    let trace = boundary::cograph_vector(&map, &par);
    handle(SolutionKind::L2Regularity, sys, sys.ut_semigroup()?, trace, linalg::norm2(&par), ZERO, exploratory, condition, mm)
}

/// L² Dirichlet problem `u(0) = u0`; the gauge is the mean of `u0`.
pub fn solve_dirichlet_l2(sys: &DbSystem, u0: &BoundaryField, force: bool) -> Result<SolutionHandle> {
    let exploratory = require_class(&sys.a, true, force)?;
    if u0.components != 1 {
        return Err(Error::InvalidParameter("Dirichlet datum must be a scalar field".into()));
    }
    let c = u0.mean(0);
    let h = grid::modes_of(u0, 0);
    let m = h.len();
    let sg = sys.t_semigroup()?;
    if linalg::norm2(&h) == 0.0 {
        let trace = vec![ZERO; 2 * m];
        return handle(SolutionKind::L2Dirichlet, sys, sg, trace, 0.0, c, exploratory, Some(1.0), None);
    }
    let sign = sg.sign_matrix();
    let n = 2 * m;
    // P₋ = (I - sgn)/2, split by columns.
    let pm = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (c64::new(id, 0.0) - sign[(i, j)]) * 0.5
    });
    let lhs = linalg::block(pm.as_ref(), 0, m, n, m);
    let perp = linalg::block(pm.as_ref(), 0, 0, n, m);
    let rhs = linalg::matvec(perp.as_ref(), &h);
    let (x, cond) = least_squares(&lhs, &rhs)?;
    if !(cond <= DIRICHLET_COND_LIMIT) {
        return Err(Error::IllPosed { cond });
    }
    let mut trace: Vec<c64> = h.iter().map(|z| -z).collect();
    trace.extend(x);
    handle(SolutionKind::L2Dirichlet, sys, sg, trace, linalg::norm2(&h), c, exploratory, Some(cond), None)
}

/// Minimum-norm least-squares solution via the SVD, with the 2-norm condition number.
fn least_squares(a: &CMat, rhs: &[c64]) -> Result<(Vec<c64>, f64)> {
    let svd = a.thin_svd().map_err(|e| Error::Linalg(format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    let smax = (0..k).map(|i| s[i].re).fold(0.0, f64::max);
    let smin = (0..k).map(|i| s[i].re).fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let mut coef = vec![ZERO; k];
    for i in 0..k {
        if s[i].re > 1e-14 * smax {
            let proj: c64 = (0..u.nrows()).map(|r| u[(r, i)].conj() * rhs[r]).sum();
            coef[i] = proj / s[i].re;
        }
    }
    let x = (0..v.nrows()).map(|r| (0..k).map(|i| v[(r, i)] * coef[i]).sum()).collect();
    Ok((x, cond))
}

/// Energy solution for any accretive `A`, using the `Ḣ^{-1/2}`-topology boundary maps.
pub fn solve_energy(sys: &DbSystem, datum: &EnergyDatum) -> Result<SolutionHandle> {
    let s = -0.5;
    let blocks = sys.sgn_blocks()?;
    let (trace, datum_norm, cond, mm) = match datum {
        EnergyDatum::Neumann(f) => {
            let fm = scalar_modes(f, "Neumann datum")?;
            let map = boundary::gamma_nd(blocks, s).map_err(artifact)?;
            let (c, mm) = map_diag(sys, &map, &blocks.s12, s);
            let table = sys.grid().mode_table();
            let n = weighted_norm(&fm, &table.abs, s);
            (boundary::graph_vector(&map, &fm), n, c, mm)
        }
        EnergyDatum::Dirichlet(f) => {
            let fm = scalar_modes(f, "Dirichlet datum")?;
            let table = sys.grid().mode_table();
            let par: Vec<c64> = fm.iter().zip(&table.abs).map(|(z, k)| -z * *k).collect();
            let map = boundary::gamma_dn(blocks, s).map_err(artifact)?;
            let (c, mm) = map_diag(sys, &map, &blocks.s21, s);
            let n = weighted_norm(&par, &table.abs, s);
            (boundary::cograph_vector(&map, &par), n, c, mm)
        }
    };
    handle(SolutionKind::Energy, sys, sys.ut_semigroup()?, trace, datum_norm, ZERO, false, cond, mm)
}

fn artifact(e: Error) -> Error {
    match e {
        Error::SingularBlock { block, s, sigma } => {
            log::error!("{block} singular at s = {s} (σ_min = {sigma:.3e}); treated as a discretization artifact");
            Error::SingularBlock { block, s, sigma }
        }
        other => other,
    }
}

fn weighted_norm(v: &[c64], abs: &[f64], s: f64) -> f64 {
    v.iter().zip(abs).map(|(z, k)| k.powf(2.0 * s) * z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖H‖_{S,s}`-type weighted norm of a V-coordinate vector: `‖|ξ|^s H‖₂`.
pub fn vcoord_sobolev_norm(grid: &GridSpec, v: &[c64], s: f64) -> f64 {
    let w = grid.mode_table().v_weights(s);
    v.iter().zip(&w).map(|(z, k)| k * k * z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solution values on `[t_k] × 𝕋ⁿ`.
#[derive(Clone, Debug)]
pub struct StripField {
    pub kind: SolutionKind,
    pub t_grid: Vec<f64>,
    pub grid: GridSpec,
    /// `∇_A u(t_k)` in V-coordinates.
    pub conormal: Vec<Vec<c64>>,
    /// Nonzero modes of `u(t_k)`.
    pub u_modes: Vec<Vec<c64>>,
    /// Mean of `u(t_k)`.
    pub u_mean: Vec<c64>,
    pub gauge: c64,
    /// `Â`, needed to rebuild `∇_{t,x} u`.
    pub b: Arc<CoefficientField>,
}

/// Evaluates a solution on a sorted grid of heights `t ≥ 0`.
pub fn evaluate(h: &SolutionHandle, t_grid: &[f64]) -> Result<StripField> {
    check_t_grid(t_grid)?;
    let grid = h.grid;
    let table = grid.mode_table();
    let m = table.len();
    let traj = h.semigroup.trajectory(t_grid, &h.trace);
    let u_mean = mean_track(h, &traj)?;
    let conormal: Vec<Vec<c64>> = match h.kind {
        SolutionKind::L2Dirichlet => traj
            .iter()
            .map(|g| {
                let mut f = vec![ZERO; 2 * m];
                for i in 0..m {
                    f[i] = g[m + i] * table.abs[i];
                    f[m + i] = g[i] * table.abs[i];
                }
                f
            })
            .collect(),
        _ => traj,
    };
    let u_modes = conormal.iter().map(|f| (0..m).map(|i| -f[m + i] / table.abs[i]).collect()).collect();
    Ok(StripField { kind: h.kind, t_grid: t_grid.to_vec(), grid, conormal, u_modes, u_mean, gauge: h.gauge, b: h.b.clone() })
}

/// Mean of `u(t)`. Its rate is `mean((BF)_⊥)`, and `∫_t^∞ F = uT⁻¹ F(t)` on the
/// positive subspace (`uT⁻¹ S = S T⁻¹` for the Dirichlet trajectory). The
/// Dirichlet mean is pinned at `t = 0`, every other kind at `t = ∞`.
fn mean_track(h: &SolutionHandle, traj: &[Vec<c64>]) -> Result<Vec<c64>> {
    let grid = h.grid;
    if linalg::norm2(&h.trace) == 0.0 || h.b.is_constant() {
        return Ok(vec![h.gauge; traj.len()]);
    }
    let n = h.trace.len();
    let mut rhs = Mat::from_fn(n, traj.len() + 1, |i, k| if k == 0 { h.trace[i] } else { traj[k - 1][i] });
    let x = linalg::solve(h.semigroup.operator().matrix.as_ref(), rhs.as_ref())?;
    if h.kind == SolutionKind::L2Dirichlet {
        let s = operator::assemble_s(grid);
        rhs = &s.matrix * &x;
    } else {
        rhs = x;
    }
    let rate = |k: usize| {
        let f = grid::from_vcoords(grid, &linalg::vec_of_col(rhs.as_ref(), k)).to_physical();
        apply_pointwise(&h.b, &f).mean(0)
    };
    let offset = if h.kind == SolutionKind::L2Dirichlet { rate(0) } else { ZERO };
    Ok((1..=traj.len()).map(|k| h.gauge - rate(k) + offset).collect())
}

fn check_t_grid(t: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::InvalidParameter("empty t grid".into()));
    }
    if t.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameter("t grid must be finite and nonnegative".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("t grid must be strictly increasing".into()));
    }
    Ok(())
}

impl StripField {
    pub fn levels(&self) -> usize {
        self.t_grid.len()
    }

    /// `∇_A u(t_k)` as an ℋ⁰ field.
    pub fn conormal_field(&self, k: usize) -> BoundaryField {
        grid::from_vcoords(self.grid, &self.conormal[k])
    }

    /// `u(t_k)` including the gauge constant, in frequency representation.
    pub fn u_field(&self, k: usize) -> BoundaryField {
        let mut f = grid::scalar_from_modes(self.grid, &self.u_modes[k]);
        f.values[0] = self.u_mean[k] * self.grid.unitary_scale();
        f
    }

    /// `∇_{t,x} u(t_k) = [(BF)_⊥; F_∥]`, physical representation.
    pub fn gradient_field(&self, k: usize) -> BoundaryField {
        let f = self.conormal_field(k).to_physical();
        let bf = apply_pointwise(&self.b, &f);
        let t = self.grid.total();
        let mut values = bf.values[..t].to_vec();
        values.extend_from_slice(&f.values[t..]);
        BoundaryField::new(self.grid, f.components, values, Representation::Physical).expect("finite gradient")
    }

    /// `‖∇_A u(t_k)‖₂` for every level.
    pub fn conormal_norms(&self) -> Vec<f64> {
        self.conormal.iter().map(|v| linalg::norm2(v)).collect()
    }

    /// `‖∇_{t,x} u(t_k)‖₂` for every level.
    pub fn gradient_norms(&self) -> Vec<f64> {
        (0..self.levels()).map(|k| self.gradient_field(k).l2_norm()).collect()
    }

    /// Writes the conormal gradients (frequency representation, levels slowest)
    /// in the field-dump format; returns the header path.
    pub fn write_dump(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let t = self.grid.total();
        let comps = 1 + self.grid.dim;
        let mut data = Vec::with_capacity(self.levels() * comps * t);
        for k in 0..self.levels() {
            data.extend_from_slice(&self.conormal_field(k).values);
        }
        let header = dump::DumpHeader {
            format: dump::FORMAT.into(),
            version: 1,
            grid: self.grid,
            components: comps,
            representation: Representation::Frequency,
            shape: vec![self.levels(), comps, t],
            t_grid: Some(self.t_grid.clone()),
            content: "conormal_gradient".into(),
            data_file: String::new(),
        };
        dump::write(dir, name, &header, &data)
    }

    /// Writes `u` (physical, levels slowest); returns the header path.
    pub fn write_u_dump(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let t = self.grid.total();
        let mut data = Vec::with_capacity(self.levels() * t);
        for k in 0..self.levels() {
            data.extend_from_slice(&self.u_field(k).to_physical().values);
        }
        let header = dump::DumpHeader {
            format: dump::FORMAT.into(),
            version: 1,
            grid: self.grid,
            components: 1,
            representation: Representation::Physical,
            shape: vec![self.levels(), t],
            t_grid: Some(self.t_grid.clone()),
            content: "u".into(),
            data_file: String::new(),
        };
        dump::write(dir, name, &header, &data)
    }
}

/// `B(x) F(x)` for a physical `(1+n)`-component field.
pub fn apply_pointwise(b: &CoefficientField, f: &BoundaryField) -> BoundaryField {
    let f = f.to_physical();
    let t = f.grid.total();
    let s = b.size;
    let mut values = vec![ZERO; s * t];
    for p in 0..t {
        let m = b.at(p);
        for r in 0..s {
            values[r * t + p] = (0..s).map(|c| m[r * s + c] * f.values[c * t + p]).sum();
        }
    }
    BoundaryField::new(f.grid, s, values, Representation::Physical).expect("finite product")
}

/// Discrete residual of `∂_t F + D(BF) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    /// `max_k ‖∂_t F + D(BF)‖₂ / max_k ‖F‖₂` over interior levels.
    pub relative: f64,
    /// Largest absolute residual.
    pub absolute: f64,
    /// `max_k ‖curl F_∥‖₂ / max_k ‖F‖₂` (zero for `n = 1`).
    pub curl_defect: f64,
    pub levels: usize,
}

/// Centered (nonuniform three-point) differences in `t`, exact multipliers in `x`.
pub fn residual_check(field: &StripField, a: &CoefficientField) -> Result<ResidualReport> {
    let k = field.levels();
    if k < 3 {
        return Err(Error::InvalidParameter(format!("residual check needs at least 3 t-levels, got {k}")));
    }
    let b = coeff::hat_transform(a)?;
    let g = field.grid;
    let fields: Vec<BoundaryField> = (0..k).map(|i| field.conormal_field(i)).collect();
    let scale = fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max);
    let t = &field.t_grid;
    let mut worst: f64 = 0.0;
    for i in 1..k - 1 {
        let (h1, h2) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        let w = [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))];
        let dbf = d_operator(&apply_pointwise(&b, &fields[i]))?;
        let mut r = dbf.values.clone();
        for (j, wj) in w.iter().enumerate() {
            let fr = &fields[i - 1 + j].values;
            r.iter_mut().zip(fr).for_each(|(x, y)| *x += y * *wj);
        }
        worst = worst.max(linalg::norm2(&r));
    }
    let mut curl: f64 = 0.0;
    if g.dim == 2 {
        for f in &fields {
            let tot = g.total();
            let mut c = vec![ZERO; tot];
            for q in 1..tot {
                let xi = g.wavevector(q);
                c[q] = c64::new(0.0, xi[0]) * f.values[2 * tot + q] - c64::new(0.0, xi[1]) * f.values[tot + q];
            }
            curl = curl.max(linalg::norm2(&c));
        }
    }
    let rel = |x: f64| if scale > 0.0 { x / scale } else { x };
    Ok(ResidualReport { relative: rel(worst), absolute: worst, curl_defect: rel(curl), levels: k })
}

/// `D G = [div G_∥; -∇ G_⊥]` in frequency representation.
fn d_operator(gf: &BoundaryField) -> Result<BoundaryField> {
    let g = gf.grid;
    let fr = gf.to_frequency();
    let t = g.total();
    let par = BoundaryField::new(g, g.dim, fr.values[t..].to_vec(), Representation::Frequency)?;
    let perp = BoundaryField::new(g, 1, fr.values[..t].to_vec(), Representation::Frequency)?;
    let div = grid::divergence(&par)?;
    let grad = grid::gradient(&perp)?;
    let mut values = div.to_frequency().values;
    values.extend(grad.to_frequency().values.iter().map(|z| -z));
    BoundaryField::new(g, 1 + g.dim, values, Representation::Frequency)
}
