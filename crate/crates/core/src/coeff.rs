//! Coefficient matrices `A(x)` sampled on the grid.
//!
//! Block form: `A = [[a, b], [c, d]]` with `a` scalar (normal-normal), `b` a row,
//! `c` a column and `d` the `n × n` tangential block.

pub mod expr;
pub mod file;

use crate::error::{Error, Result};
use crate::grid::{self, BoundaryField, GridSpec};
use crate::linalg::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockClass {
    General,
    LowerTriangular,
    UpperTriangular,
    BlockDiagonal,
}

impl BlockClass {
    pub fn name(self) -> &'static str {
        match self {
            BlockClass::General => "general",
            BlockClass::LowerTriangular => "lower_triangular",
            BlockClass::UpperTriangular => "upper_triangular",
            BlockClass::BlockDiagonal => "block_diagonal",
        }
    }

    /// `b ≡ 0`.
    pub fn is_lower(self) -> bool {
        matches!(self, BlockClass::LowerTriangular | BlockClass::BlockDiagonal)
    }

    /// `c ≡ 0`.
    pub fn is_upper(self) -> bool {
        matches!(self, BlockClass::UpperTriangular | BlockClass::BlockDiagonal)
    }
}

/// Grid samples of a `(1+n) × (1+n)` complex matrix, point-major and row-major per point.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub grid: GridSpec,
    pub size: usize,
    pub samples: Vec<c64>,
    /// Pointwise accretivity bound: min over x of the smallest eigenvalue of `Re A(x)`.
    pub lambda: f64,
    /// `sup_x ‖A(x)‖₂`.
    pub big_lambda: f64,
    pub block_class: BlockClass,
}

impl CoefficientField {
    /// Validates the samples and rejects non-accretive fields.
    pub fn new(grid: GridSpec, samples: Vec<c64>) -> Result<Self> {
        let f = Self::new_unchecked(grid, samples)?;
        if !(f.lambda > 0.0) {
            return Err(Error::NotAccretive { bound: f.lambda });
        }
        Ok(f)
    }

    /// Like [`CoefficientField::new`] but keeps non-accretive samples (negative controls).
    pub fn new_unchecked(grid: GridSpec, samples: Vec<c64>) -> Result<Self> {
        grid.validate()?;
        let size = 1 + grid.dim;
        if samples.len() != size * size * grid.total() {
            return Err(Error::InvalidParameter(format!(
                "coefficient has {} samples, expected {}",
                samples.len(),
                size * size * grid.total()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("coefficient samples"));
        }
        let mut f = CoefficientField { grid, size, samples, lambda: 0.0, big_lambda: 0.0, block_class: BlockClass::General };
        f.lambda = pointwise_min(&f, |m, s| hermitian_part_min_eig(m, s));
        f.big_lambda = -pointwise_min(&f, |m, s| -matrix_norm(m, s));
        f.block_class = classify(&f);
        Ok(f)
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> Vec<c64>) -> Result<Self> {
        let samples = (0..grid.total()).flat_map(|p| f(grid.point(p))).collect();
        Self::new(grid, samples)
    }

    /// Constant field; `matrix` is row-major `(1+n) × (1+n)`.
    pub fn constant(grid: GridSpec, matrix: &[c64]) -> Result<Self> {
        Self::from_fn(grid, |_| matrix.to_vec())
    }

    pub fn identity(grid: GridSpec) -> Self {
        let s = 1 + grid.dim;
        let m: Vec<c64> = (0..s * s).map(|i| if i % (s + 1) == 0 { ONE } else { ZERO }).collect();
        Self::constant(grid, &m).expect("identity is accretive")
    }

    pub fn at(&self, p: usize) -> &[c64] {
        let s2 = self.size * self.size;
        &self.samples[p * s2..(p + 1) * s2]
    }

    pub fn entry(&self, p: usize, r: usize, c: usize) -> c64 {
        self.samples[p * self.size * self.size + r * self.size + c]
    }

    /// Samples of entry `(r, c)` over the grid.
    pub fn entry_samples(&self, r: usize, c: usize) -> Vec<c64> {
        (0..self.grid.total()).map(|p| self.entry(p, r, c)).collect()
    }

    /// Mean-normalized Fourier coefficients of entry `(r, c)`, all `N^n` flat modes.
    pub fn entry_coefficients(&self, r: usize, c: usize) -> Vec<c64> {
        grid::mean_coefficients(&self.grid, &self.entry_samples(r, c))
    }

    /// Largest entrywise difference to another field on the same grid.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        let first = self.at(0);
        (1..self.grid.total()).all(|p| self.at(p) == first)
    }
}

fn pointwise_min(f: &CoefficientField, g: impl Fn(&[c64], usize) -> f64) -> f64 {
    (0..f.grid.total()).map(|p| g(f.at(p), f.size)).fold(f64::INFINITY, f64::min)
}

fn classify(f: &CoefficientField) -> BlockClass {
    let s = f.size;
    let mut b_zero = true;
    let mut c_zero = true;
    for p in 0..f.grid.total() {
        for j in 1..s {
            b_zero &= f.entry(p, 0, j) == ZERO;
            c_zero &= f.entry(p, j, 0) == ZERO;
        }
    }
    match (b_zero, c_zero) {
        (true, true) => BlockClass::BlockDiagonal,
        (true, false) => BlockClass::LowerTriangular,
        (false, true) => BlockClass::UpperTriangular,
        (false, false) => BlockClass::General,
    }
}

/// Eigenvalues of a small Hermitian matrix (size 1, 2 or 3, row-major), ascending.
pub fn small_hermitian_eigenvalues(h: &[c64], s: usize) -> Vec<f64> {
    match s {
        1 => vec![h[0].re],
        2 => {
            let (a, d, b) = (h[0].re, h[3].re, h[1]);
            let m = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            vec![m - r, m + r]
        }
        3 => {
            let e = |i: usize, j: usize| h[3 * i + j];
            let p1 = e(0, 1).norm_sqr() + e(0, 2).norm_sqr() + e(1, 2).norm_sqr();
            let (d0, d1, d2) = (e(0, 0).re, e(1, 1).re, e(2, 2).re);
            if p1 == 0.0 {
                let mut v = vec![d0, d1, d2];
                v.sort_by(|a, b| a.total_cmp(b));
                return v;
            }
            let q = (d0 + d1 + d2) / 3.0;
            let p2 = (d0 - q).powi(2) + (d1 - q).powi(2) + (d2 - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b = |i: usize, j: usize| (e(i, j) - if i == j { c64::new(q, 0.0) } else { ZERO }) / p;
            let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
                - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let r = (0.5 * det.re).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let hi = q + 2.0 * p * phi.cos();
            let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
            vec![lo, 3.0 * q - hi - lo, hi]
        }
        _ => panic!("small_hermitian_eigenvalues: unsupported size {s}"),
    }
}

/// Smallest eigenvalue of `(m + m*)/2`.
pub fn hermitian_part_min_eig(m: &[c64], s: usize) -> f64 {
    let h: Vec<c64> = (0..s * s).map(|k| (m[k] + m[(k % s) * s + k / s].conj()) * 0.5).collect();
    small_hermitian_eigenvalues(&h, s)[0]
}

/// Spectral norm of a small matrix.
pub fn matrix_norm(m: &[c64], s: usize) -> f64 {
    let g: Vec<c64> = (0..s * s)
        .map(|k| {
            let (i, j) = (k / s, k % s);
            (0..s).map(|l| m[l * s + i].conj() * m[l * s + j]).sum()
        })
        .collect();
    small_hermitian_eigenvalues(&g, s)[s - 1].max(0.0).sqrt()
}

/// Recomputes λ for a field (the stored value is the same quantity).
pub fn accretivity_bound(a: &CoefficientField) -> Result<f64> {
    let l = pointwise_min(a, hermitian_part_min_eig);
    if !(l > 0.0) {
        return Err(Error::NotAccretive { bound: l });
    }
    Ok(l)
}

/// Pointwise `Â = [[a⁻¹, -a⁻¹b], [ca⁻¹, d - ca⁻¹b]]`.
pub fn hat_transform(a: &CoefficientField) -> Result<CoefficientField> {
    let s = a.size;
    let min_abs = (0..a.grid.total()).map(|p| a.entry(p, 0, 0).norm()).fold(f64::INFINITY, f64::min);
    if min_abs < 1e-10 {
        return Err(Error::SingularCoefficient { min_abs });
    }
    let mut out = vec![ZERO; a.samples.len()];
    for p in 0..a.grid.total() {
        let m = a.at(p);
        let o = &mut out[p * s * s..(p + 1) * s * s];
        let ai = ONE / m[0];
        o[0] = ai;
        for j in 1..s {
            o[j] = -ai * m[j];
            o[j * s] = m[j * s] * ai;
        }
        for i in 1..s {
            for j in 1..s {
                o[i * s + j] = m[i * s + j] - m[i * s] * ai * m[j];
            }
        }
    }
    CoefficientField::new(a.grid, out)
}

/// Tangential field of `n` components given as a [`BoundaryField`].
pub fn mgamma_perturb(a: &CoefficientField, gamma: &BoundaryField) -> Result<CoefficientField> {
    let g = a.grid;
    if gamma.grid != g || gamma.components != g.dim {
        return Err(Error::InvalidParameter("gamma must be an n-component field on the coefficient grid".into()));
    }
    let fr = gamma.to_frequency();
    let tol = 1e-10 * fr.l2_norm();
    for k in 1..g.total() {
        let xi = g.wavevector(k);
        let div: c64 = (0..g.dim).map(|j| fr.component(j)[k] * xi[j]).sum();
        if div.norm() > tol {
            return Err(Error::InvalidParameter(format!(
                "gamma is not divergence free: |ξ·γ̂| = {:.3e} at mode {k}",
                div.norm()
            )));
        }
    }
    let phys = gamma.to_physical();
    let s = a.size;
    let mut samples = a.samples.clone();
    for p in 0..g.total() {
        for j in 0..g.dim {
            let gj = phys.component(j)[p];
            samples[p * s * s + (1 + j)] += gj;
            samples[p * s * s + (1 + j) * s] -= gj;
        }
    }
    CoefficientField::new(g, samples)
}

/// `γ = (∂₂ψ, -∂₁ψ)` for a scalar stream function on an `n = 2` grid.
pub fn stream_gamma(psi: &BoundaryField) -> Result<BoundaryField> {
    if psi.grid.dim != 2 {
        return Err(Error::InvalidParameter("stream functions need n = 2".into()));
    }
    let grad = grid::gradient(psi)?.to_physical();
    let mut values = grad.component(1).to_vec();
    values.extend(grad.component(0).iter().map(|z| -z));
    BoundaryField::new(psi.grid, 2, values, grid::Representation::Physical)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Constant,
    SmoothTrig,
    PiecewiseRandom,
    LowerTriangularRandom,
    UpperTriangularRandom,
    BlockDiagonalRandom,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Constant => "constant",
            FamilyKind::SmoothTrig => "smooth_trig",
            FamilyKind::PiecewiseRandom => "piecewise_random",
            FamilyKind::LowerTriangularRandom => "lower_triangular_random",
            FamilyKind::UpperTriangularRandom => "upper_triangular_random",
            FamilyKind::BlockDiagonalRandom => "block_diagonal_random",
        }
    }
}

/// Parameters of a coefficient family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyParams {
    /// Requested lower bound on λ.
    pub lambda_floor: f64,
    /// Requested upper bound on Λ.
    pub lambda_cap: f64,
    /// Perturbation size for `smooth_trig`.
    pub amplitude: f64,
    /// Highest wavenumber per axis in random trigonometric entries.
    pub bandwidth: usize,
    /// Real base matrix (row-major rows) for `constant` and `smooth_trig`; identity if absent.
    pub base: Option<Vec<Vec<f64>>>,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams { lambda_floor: 0.5, lambda_cap: 2.0, amplitude: 0.3, bandwidth: 2, base: None }
    }
}

/// Cells per axis of `piecewise_random` fields.
pub const PIECEWISE_CELLS: usize = 8;

/// A random trigonometric polynomial with wavenumbers `0 < |k|_∞ ≤ bw` plus a constant.
struct TrigPoly {
    constant: c64,
    terms: Vec<([i64; 2], c64)>,
}

impl TrigPoly {
    fn random(rng: &mut ChaCha8Rng, dim: usize, bw: usize) -> Self {
        let bw = bw as i64;
        let mut terms = Vec::new();
        let r2 = if dim == 2 { bw } else { 0 };
        for k1 in -bw..=bw {
            for k2 in -r2..=r2 {
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                let decay = 0.5 / (k1.abs().max(k2.abs()) as f64);
                let z = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay;
                terms.push(([k1, k2], z));
            }
        }
        let constant = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        TrigPoly { constant, terms }
    }

    /// Sum of coefficient moduli, an upper bound for the sup norm.
    fn bound(&self) -> f64 {
        self.constant.norm() + self.terms.iter().map(|t| t.1.norm()).sum::<f64>()
    }

    fn eval(&self, x: [f64; 2], period: f64) -> c64 {
        let w = 2.0 * PI / period;
        self.constant
            + self
                .terms
                .iter()
                .map(|(k, z)| z * c64::new(0.0, w * (k[0] as f64 * x[0] + k[1] as f64 * x[1])).exp())
                .sum::<c64>()
    }
}

fn allowed(kind: FamilyKind, r: usize, c: usize) -> bool {
    let b = r == 0 && c > 0;
    let cc = c == 0 && r > 0;
    match kind {
        FamilyKind::LowerTriangularRandom => !b,
        FamilyKind::UpperTriangularRandom => !cc,
        FamilyKind::BlockDiagonalRandom => !b && !cc,
        _ => true,
    }
}

fn base_matrix(grid: &GridSpec, params: &FamilyParams) -> Result<Vec<c64>> {
    let s = 1 + grid.dim;
    match &params.base {
        None => Ok((0..s * s).map(|i| if i % (s + 1) == 0 { ONE } else { ZERO }).collect()),
        Some(rows) => {
            if rows.len() != s || rows.iter().any(|r| r.len() != s) {
                return Err(Error::InvalidParameter(format!("base matrix must be {s} x {s}")));
            }
            Ok(rows.iter().flatten().map(|&v| c64::new(v, 0.0)).collect())
        }
    }
}

/// Reference points on which random families are fitted. Every power-of-two
/// grid up to this resolution samples a subset of them, so the constructed
/// bounds hold on all such grids.
fn reference_points(grid: &GridSpec) -> Vec<[f64; 2]> {
    let r = if grid.dim == 1 { 1024 } else { 64 };
    let rg = GridSpec { points: r.max(grid.points), ..*grid };
    (0..rg.total()).map(|p| rg.point(p)).collect()
}

/// Deterministic coefficient family member.
pub fn make_family(kind: FamilyKind, params: &FamilyParams, grid: GridSpec, seed: u64) -> Result<CoefficientField> {
    grid.validate()?;
    let s = 1 + grid.dim;
    let p = params;
    if !(p.lambda_floor > 0.0) || !(p.lambda_cap >= p.lambda_floor) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < lambda_floor <= lambda_cap, got {} and {}",
            p.lambda_floor, p.lambda_cap
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = match kind {
        FamilyKind::Constant => CoefficientField::constant(grid, &base_matrix(&grid, p)?)?,
        FamilyKind::SmoothTrig => {
            let base = base_matrix(&grid, p)?;
            let polys: Vec<TrigPoly> = (0..s * s).map(|_| TrigPoly::random(&mut rng, grid.dim, p.bandwidth.max(1))).collect();
            let amp = p.amplitude;
            CoefficientField::from_fn(grid, |x| {
                (0..s * s)
                    .map(|k| base[k] + polys[k].eval(x, grid.period) * (amp / (s as f64 * polys[k].bound())))
                    .collect()
            })?
        }
        _ => {
            let sampler = random_structure(kind, grid, p, &mut rng);
            let refs = reference_points(&grid);
            let target = p.lambda_floor + 0.1 * (p.lambda_cap - p.lambda_floor) * rng.gen::<f64>();
            let ref_mats: Vec<Vec<c64>> = refs.iter().map(|&x| sampler(x)).collect();
            let mu = ref_mats.iter().map(|m| hermitian_part_min_eig(m, s)).fold(f64::INFINITY, f64::min);
            let shifted = |m: &[c64], sigma: f64| -> Vec<c64> {
                let shift = target - sigma * mu;
                (0..s * s).map(|k| m[k] * sigma + if k % (s + 1) == 0 { c64::new(shift, 0.0) } else { ZERO }).collect()
            };
            let mut sigma = 1.0;
            let mut fitted = false;
            for _ in 0..200 {
                let big = ref_mats.iter().map(|m| matrix_norm(&shifted(m, sigma), s)).fold(0.0, f64::max);
                if big <= p.lambda_cap {
                    fitted = true;
                    break;
                }
                sigma *= 0.85;
            }
            if !fitted {
                return Err(Error::InvalidParameter("unreachable accretivity target".into()));
            }
            CoefficientField::from_fn(grid, |x| shifted(&sampler(x), sigma))?
        }
    };
    if field.lambda < p.lambda_floor * (1.0 - 1e-12) || (kind != FamilyKind::Constant && field.big_lambda > p.lambda_cap * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "unreachable accretivity target: produced lambda {:.4}, Lambda {:.4}",
            field.lambda, field.big_lambda
        )));
    }
    Ok(field)
}

type Sampler = Box<dyn Fn([f64; 2]) -> Vec<c64>>;

fn random_structure(kind: FamilyKind, grid: GridSpec, p: &FamilyParams, rng: &mut ChaCha8Rng) -> Sampler {
    let s = 1 + grid.dim;
    if kind == FamilyKind::PiecewiseRandom {
        let cells = PIECEWISE_CELLS.pow(grid.dim as u32);
        let vals: Vec<c64> = (0..cells * s * s)
            .map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let period = grid.period;
        let dim = grid.dim;
        return Box::new(move |x| {
            let cell = |v: f64| (((v / period) * PIECEWISE_CELLS as f64).floor() as usize).min(PIECEWISE_CELLS - 1);
            let c = if dim == 1 { cell(x[0]) } else { cell(x[0]) * PIECEWISE_CELLS + cell(x[1]) };
            vals[c * s * s..(c + 1) * s * s].to_vec()
        });
    }
    let polys: Vec<Option<TrigPoly>> = (0..s * s)
        .map(|k| {
            let poly = TrigPoly::random(rng, grid.dim, p.bandwidth.max(1));
            allowed(kind, k / s, k % s).then_some(poly)
        })
        .collect();
    let period = grid.period;
    Box::new(move |x| polys.iter().map(|q| q.as_ref().map_or(ZERO, |q| q.eval(x, period))).collect())
}
