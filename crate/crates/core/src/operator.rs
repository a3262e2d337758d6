//! Dense operators on ℋ⁰ in V-coordinates and their functional calculus.

use crate::coeff::{self, CoefficientField};
use crate::error::{Error, Result};
use crate::grid::{self, BoundaryField, GridSpec, ModeTable};
use crate::linalg::{self, c64, CMat};
use faer::Mat;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// Space an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Space {
    H0,
    /// ℋ⁰ normed by `|ξ|^s` in both V-coordinate slots.
    Sobolev(f64),
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub grid: GridSpec,
    pub matrix: CMat,
    pub space: Space,
}

impl OperatorMatrix {
    pub fn new(grid: GridSpec, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != grid.h0_dim() || matrix.ncols() != grid.h0_dim() {
            return Err(Error::InvalidParameter(format!(
                "operator is {}x{}, ℋ⁰ has dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                grid.h0_dim()
            )));
        }
        if !linalg::all_finite(matrix.as_ref()) {
            return Err(Error::NonFinite("operator matrix"));
        }
        Ok(OperatorMatrix { grid, matrix, space: Space::H0 })
    }

    pub fn identity(grid: GridSpec) -> Self {
        OperatorMatrix { grid, matrix: linalg::identity(grid.h0_dim()), space: Space::H0 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of modes `M`; the V-coordinate split is at `M`.
    pub fn half(&self) -> usize {
        self.dim() / 2
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        linalg::matvec(self.matrix.as_ref(), v)
    }

    pub fn compose(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { grid: self.grid, matrix: &self.matrix * &other.matrix, space: self.space }
    }

    pub fn op_norm(&self) -> f64 {
        linalg::op_norm(self.matrix.as_ref())
    }

    /// `‖self - other‖₂`.
    pub fn distance(&self, other: &OperatorMatrix) -> f64 {
        linalg::op_norm(linalg::sub(self.matrix.as_ref(), other.matrix.as_ref()).as_ref())
    }

    /// `‖self - I‖₂`.
    pub fn distance_to_identity(&self) -> f64 {
        let mut d = self.matrix.clone();
        for i in 0..self.dim() {
            d[(i, i)] -= ONE;
        }
        linalg::op_norm(d.as_ref())
    }

    /// V-coordinate block: `(0,0)` ⊥⊥, `(0,1)` ∥→⊥, `(1,0)` ⊥→∥, `(1,1)` ∥∥.
    pub fn block(&self, r: usize, c: usize) -> CMat {
        let m = self.half();
        linalg::block(self.matrix.as_ref(), r * m, c * m, m, m)
    }

    /// Applies to an ℋ⁰ boundary field.
    pub fn apply_field(&self, f: &BoundaryField) -> Result<BoundaryField> {
        let v = grid::to_vcoords(f)?;
        Ok(grid::from_vcoords(self.grid, &self.apply(&v)))
    }
}

/// `S` in V-coordinates: per mode `[[0, |ξ|], [|ξ|, 0]]`.
pub fn assemble_s(grid: GridSpec) -> OperatorMatrix {
    let t = grid.mode_table();
    let m = t.len();
    let matrix = Mat::from_fn(2 * m, 2 * m, |i, j| {
        if i + m == j {
            c64::new(t.abs[i], 0.0)
        } else if j + m == i {
            c64::new(t.abs[j], 0.0)
        } else {
            ZERO
        }
    });
    OperatorMatrix { grid, matrix, space: Space::H0 }
}

/// `ΠBΠ` in V-coordinates, without the accretivity check.
pub fn calb_matrix(b: &CoefficientField) -> CMat {
    let grid = b.grid;
    let table = grid.mode_table();
    let m = table.len();
    let s = b.size;
    let hat: Vec<Vec<c64>> = (0..s * s).map(|k| b.entry_coefficients(k / s, k % s)).collect();
    let bh = |p: usize, q: usize, d: usize| hat[p * s + q][d];
    let n = grid.dim;
    Mat::from_fn(2 * m, 2 * m, |i, j| {
        let (ri, rj) = (i % m, j % m);
        let d = grid.flat_diff(table.flat[ri], table.flat[rj]);
        match (i < m, j < m) {
            (true, true) => bh(0, 0, d),
            (true, false) => -(0..n).map(|q| bh(0, 1 + q, d) * table.riesz[rj][q]).sum::<c64>(),
            (false, true) => -(0..n).map(|p| table.riesz[ri][p].conj() * bh(1 + p, 0, d)).sum::<c64>(),
            (false, false) => (0..n)
                .flat_map(|p| (0..n).map(move |q| (p, q)))
                .map(|(p, q)| table.riesz[ri][p].conj() * bh(1 + p, 1 + q, d) * table.riesz[rj][q])
                .sum::<c64>(),
        }
    })
}

/// Minimum eigenvalue of the Hermitian part must exceed this.
pub const CALB_ACCRETIVITY_FLOOR: f64 = 1e-10;

/// `𝓑 = ΠBΠ` on ℋ⁰; rejects `B` whose compression is not strictly accretive.
pub fn assemble_calb(b: &CoefficientField) -> Result<OperatorMatrix> {
    let matrix = calb_matrix(b);
    let low = linalg::hermitian_part_min_eig(matrix.as_ref())?;
    if low < CALB_ACCRETIVITY_FLOOR {
        return Err(Error::NotAccretive { bound: low });
    }
    OperatorMatrix::new(b.grid, matrix)
}

/// Blocks `α` (⊥⊥), `γ` (⊥→∥) and `δ` (∥∥) of `𝓑` for lower-triangular `B`.
#[derive(Clone, Debug)]
pub struct LowerBlocks {
    pub alpha: CMat,
    pub gamma: CMat,
    pub delta: CMat,
}

pub fn lower_blocks(b: &CoefficientField, calb: &OperatorMatrix) -> Result<LowerBlocks> {
    if !b.block_class.is_lower() {
        return Err(Error::BlockClass { expected: "lower_triangular", found: b.block_class.name() });
    }
    Ok(LowerBlocks { alpha: calb.block(0, 0), gamma: calb.block(1, 0), delta: calb.block(1, 1) })
}

/// `T = 𝓑S`.
pub fn compose_t(calb: &OperatorMatrix) -> OperatorMatrix {
    let t = calb.grid.mode_table();
    let m = t.len();
    let b = &calb.matrix;
    let matrix = Mat::from_fn(2 * m, 2 * m, |i, j| if j < m { b[(i, j + m)] * t.abs[j] } else { b[(i, j - m)] * t.abs[j - m] });
    OperatorMatrix { grid: calb.grid, matrix, space: Space::H0 }
}

/// `uT = S𝓑`.
pub fn compose_ut(calb: &OperatorMatrix) -> OperatorMatrix {
    let t = calb.grid.mode_table();
    let m = t.len();
    let b = &calb.matrix;
    let matrix = Mat::from_fn(2 * m, 2 * m, |i, j| if i < m { b[(i + m, j)] * t.abs[i] } else { b[(i - m, j)] * t.abs[i - m] });
    OperatorMatrix { grid: calb.grid, matrix, space: Space::H0 }
}

pub fn assemble_t(b: &CoefficientField) -> Result<OperatorMatrix> {
    Ok(compose_t(&assemble_calb(b)?))
}

pub fn assemble_ut(b: &CoefficientField) -> Result<OperatorMatrix> {
    Ok(compose_ut(&assemble_calb(b)?))
}

/// Configurable numerical thresholds of the functional calculus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalculusTolerances {
    /// Minimum `|Re λ|` for sign and semigroup use.
    pub margin_floor: f64,
    /// Largest acceptable eigenbasis condition number.
    pub cond_limit: f64,
    /// Largest acceptable relative reconstruction error.
    pub reconstruction_limit: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for CalculusTolerances {
    fn default() -> Self {
        CalculusTolerances { margin_floor: 1e-8, cond_limit: 1e8, reconstruction_limit: 1e-8, newton_tol: 1e-12, newton_max_iter: 100 }
    }
}

/// Eigendecomposition `M = W Λ W⁻¹` with conditioning metadata.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub grid: GridSpec,
    pub eigenvalues: Vec<c64>,
    pub vectors: CMat,
    pub inverse: CMat,
    /// 1-norm condition number of `W`.
    pub cond: f64,
    /// `min |Re λ|`.
    pub margin: f64,
    /// `‖WΛW⁻¹ - M‖_F / ‖M‖_F`.
    pub reconstruction: f64,
    pub reliable: bool,
}

impl SpectralDecomposition {
    pub fn new(op: &OperatorMatrix) -> Result<Self> {
        Self::with_tolerances(op, &CalculusTolerances::default())
    }

    pub fn with_tolerances(op: &OperatorMatrix, tol: &CalculusTolerances) -> Result<Self> {
        let e = op
            .matrix
            .eigen()
            .map_err(|e| Error::Linalg(format!("eigendecomposition failed: {e:?}")))?;
        let vectors = e.U().to_owned();
        let eigenvalues: Vec<c64> = e.S().column_vector().iter().cloned().collect();
        let inverse = linalg::inverse(vectors.as_ref())
            .map_err(|_| Error::Unreliable { reconstruction: f64::INFINITY, cond: f64::INFINITY })?;
        let cond = linalg::norm1(vectors.as_ref()) * linalg::norm1(inverse.as_ref());
        let margin = eigenvalues.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
        let n = eigenvalues.len();
        let scaled = Mat::from_fn(n, n, |i, j| vectors[(i, j)] * eigenvalues[j]);
        let rec = &scaled * &inverse;
        let reconstruction = linalg::frobenius(linalg::sub(rec.as_ref(), op.matrix.as_ref()).as_ref())
            / linalg::frobenius(op.matrix.as_ref()).max(f64::MIN_POSITIVE);
        let reliable = cond <= tol.cond_limit && reconstruction <= tol.reconstruction_limit;
        Ok(SpectralDecomposition { grid: op.grid, eigenvalues, vectors, inverse, cond, margin, reconstruction, reliable })
    }

    pub fn require_bisectorial(&self, floor: f64) -> Result<()> {
        if !(self.margin > floor) {
            return Err(Error::Bisectoriality { margin: self.margin, floor });
        }
        Ok(())
    }

    pub fn require_reliable(&self) -> Result<()> {
        if !self.reliable {
            return Err(Error::Unreliable { reconstruction: self.reconstruction, cond: self.cond });
        }
        Ok(())
    }

    /// `W diag(f(λ)) W⁻¹`.
    pub fn function(&self, f: impl Fn(c64) -> c64) -> CMat {
        let n = self.eigenvalues.len();
        let fl: Vec<c64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * fl[j]);
        &scaled * &self.inverse
    }

    /// Coordinates `W⁻¹v` in the eigenbasis.
    pub fn analyze(&self, v: &[c64]) -> Vec<c64> {
        linalg::matvec(self.inverse.as_ref(), v)
    }

    /// `W diag(f(λ)) a` for eigen-coordinates `a`.
    pub fn synthesize(&self, a: &[c64], f: impl Fn(c64) -> c64) -> Vec<c64> {
        let w: Vec<c64> = a.iter().zip(&self.eigenvalues).map(|(x, &l)| x * f(l)).collect();
        linalg::matvec(self.vectors.as_ref(), &w)
    }

    pub fn apply_function(&self, v: &[c64], f: impl Fn(c64) -> c64) -> Vec<c64> {
        self.synthesize(&self.analyze(v), f)
    }

    /// Largest and smallest `|λ|`.
    pub fn radius_range(&self) -> (f64, f64) {
        let lo = self.eigenvalues.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min);
        let hi = self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
        (lo, hi)
    }
}

/// `sgn(Re z)`, with `sgn(0) = 0`.
pub fn sgn(z: c64) -> f64 {
    if z.re > 0.0 {
        1.0
    } else if z.re < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `sgn(z) z`, the symbol of `|op|`.
pub fn bisectorial_abs(z: c64) -> c64 {
    z * sgn(z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignMethod {
    Eigen,
    Newton,
}

/// Outcome of the scaled Newton iteration.
#[derive(Clone, Debug)]
pub struct NewtonSign {
    pub matrix: CMat,
    pub iterations: usize,
    pub converged: bool,
}

/// Newton iteration `X ← (μX + (μX)⁻¹)/2` with determinant scaling `μ = |det X|^{-1/d}`.
pub fn newton_sign(m: &CMat, tol: f64, max_iter: usize) -> Result<NewtonSign> {
    let d = m.nrows() as f64;
    let mut x = m.clone();
    let mut scaling = true;
    let mut prev = f64::INFINITY;
    for it in 1..=max_iter {
        let (inv, logdet) = linalg::inverse_logdet(x.as_ref())?;
        let mu = if scaling { (-logdet / d).exp() } else { 1.0 };
        let next = Mat::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] * mu + inv[(i, j)] / mu) * 0.5);
        let diff = linalg::frobenius(linalg::sub(next.as_ref(), x.as_ref()).as_ref()) / linalg::frobenius(next.as_ref());
        x = next;
        if diff <= tol {
            return Ok(NewtonSign { matrix: x, iterations: it, converged: true });
        }
        if diff < 1e-2 {
            scaling = false;
        }
        // Stagnation at rounding level after quadratic convergence has set in.
        if !scaling && diff < 1e-9 && diff > 0.5 * prev {
            return Ok(NewtonSign { matrix: x, iterations: it, converged: true });
        }
        prev = diff;
    }
    Ok(NewtonSign { matrix: x, iterations: max_iter, converged: false })
}

pub fn matrix_sign(op: &OperatorMatrix, method: SignMethod) -> Result<OperatorMatrix> {
    matrix_sign_with(op, method, &CalculusTolerances::default())
}

pub fn matrix_sign_with(op: &OperatorMatrix, method: SignMethod, tol: &CalculusTolerances) -> Result<OperatorMatrix> {
    let wrap = |matrix: CMat| OperatorMatrix { grid: op.grid, matrix, space: op.space };
    match method {
        SignMethod::Eigen => {
            let dec = SpectralDecomposition::with_tolerances(op, tol)?;
            dec.require_bisectorial(tol.margin_floor)?;
            if dec.reliable {
                return Ok(wrap(dec.function(|l| c64::new(sgn(l), 0.0))));
            }
            log::warn!(
                "ill-conditioned eigenbasis (cond {:.2e}, reconstruction {:.2e}); using Newton iteration for sgn",
                dec.cond,
                dec.reconstruction
            );
            let nw = newton_sign(&op.matrix, tol.newton_tol, tol.newton_max_iter)?;
            if !nw.converged {
                return Err(Error::Unreliable { reconstruction: dec.reconstruction, cond: dec.cond });
            }
            Ok(wrap(nw.matrix))
        }
        SignMethod::Newton => {
            let nw = newton_sign(&op.matrix, tol.newton_tol, tol.newton_max_iter)?;
            if nw.converged {
                return Ok(wrap(nw.matrix));
            }
            log::warn!("Newton sign iteration did not converge in {} steps; using eigendecomposition", nw.iterations);
            let dec = SpectralDecomposition::with_tolerances(op, tol)?;
            dec.require_bisectorial(tol.margin_floor)?;
            dec.require_reliable()?;
            Ok(wrap(dec.function(|l| c64::new(sgn(l), 0.0))))
        }
    }
}

/// `P± = (I ± sgn)/2`.
pub fn spectral_projectors(sign: &OperatorMatrix) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let sq = sign.compose(sign);
    let defect = sq.distance_to_identity();
    if !(defect <= 1e-6) {
        return Err(Error::Linalg(format!("sgn² differs from I by {defect:.3e}")));
    }
    let n = sign.dim();
    let id = linalg::identity(n);
    let half = c64::new(0.5, 0.0);
    let p = linalg::combine(half, id.as_ref(), half, sign.matrix.as_ref());
    let q = linalg::combine(half, id.as_ref(), -half, sign.matrix.as_ref());
    Ok((
        OperatorMatrix { grid: sign.grid, matrix: p, space: sign.space },
        OperatorMatrix { grid: sign.grid, matrix: q, space: sign.space },
    ))
}

/// The semigroup `e^{-t op}` on `ran P₊(op)`.
pub struct Semigroup {
    op: OperatorMatrix,
    route: Route,
}

enum Route {
    Eigen(SpectralDecomposition),
    /// `e^{-t|op|}` by Padé exponentials, with `sgn` from the Newton iteration.
    Expm { sign: CMat, abs: CMat },
}

impl Semigroup {
    pub fn new(op: &OperatorMatrix) -> Result<Self> {
        let tol = CalculusTolerances::default();
        let dec = SpectralDecomposition::with_tolerances(op, &tol)?;
        dec.require_bisectorial(tol.margin_floor)?;
        let route = if dec.reliable {
            Route::Eigen(dec)
        } else {
            log::warn!("ill-conditioned eigenbasis (cond {:.2e}); semigroup via matrix exponential", dec.cond);
            let nw = newton_sign(&op.matrix, tol.newton_tol, tol.newton_max_iter)?;
            if !nw.converged {
                return Err(Error::Unreliable { reconstruction: dec.reconstruction, cond: dec.cond });
            }
            let abs = &nw.matrix * &op.matrix;
            Route::Expm { sign: nw.matrix, abs }
        };
        Ok(Semigroup { op: op.clone(), route })
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.op
    }

    pub fn decomposition(&self) -> Option<&SpectralDecomposition> {
        match &self.route {
            Route::Eigen(d) => Some(d),
            Route::Expm { .. } => None,
        }
    }

    /// `sgn(op)` as a matrix.
    pub fn sign_matrix(&self) -> CMat {
        match &self.route {
            Route::Eigen(d) => d.function(|l| c64::new(sgn(l), 0.0)),
            Route::Expm { sign, .. } => sign.clone(),
        }
    }

    /// `‖P₋v‖ / ‖v‖`.
    pub fn minus_ratio(&self, v: &[c64]) -> f64 {
        let nv = linalg::norm2(v);
        if nv == 0.0 {
            return 0.0;
        }
        let minus = match &self.route {
            Route::Eigen(d) => d.apply_function(v, |l| if l.re < 0.0 { ONE } else { ZERO }),
            Route::Expm { sign, .. } => {
                let s = linalg::matvec(sign.as_ref(), v);
                v.iter().zip(&s).map(|(a, b)| (a - b) * 0.5).collect()
            }
        };
        linalg::norm2(&minus) / nv
    }

    /// `P₊v`.
    pub fn plus_part(&self, v: &[c64]) -> Vec<c64> {
        match &self.route {
            Route::Eigen(d) => d.apply_function(v, |l| if l.re > 0.0 { ONE } else { ZERO }),
            Route::Expm { sign, .. } => {
                let s = linalg::matvec(sign.as_ref(), v);
                v.iter().zip(&s).map(|(a, b)| (a + b) * 0.5).collect()
            }
        }
    }

    /// `e^{-t op}v` for `v ∈ ran P₊`; rejects data with `‖P₋v‖ > 10⁻⁶‖v‖`.
    pub fn apply(&self, t: f64, v: &[c64]) -> Result<Vec<c64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("semigroup time {t} must be nonnegative")));
        }
        let ratio = self.minus_ratio(v);
        if ratio > 1e-6 {
            return Err(Error::WrongSubspace { ratio });
        }
        if t == 0.0 {
            return Ok(v.to_vec());
        }
        Ok(self.apply_unchecked(t, v))
    }

    /// `e^{-t|op|}v` for arbitrary `v`.
    pub fn apply_unchecked(&self, t: f64, v: &[c64]) -> Vec<c64> {
        match &self.route {
            Route::Eigen(d) => d.apply_function(v, |l| if l.re > 0.0 { (-t * l).exp() } else { (t * l).exp() }),
            Route::Expm { abs, .. } => {
                let e = linalg::expm(linalg::scaled(abs.as_ref(), c64::new(-t, 0.0)).as_ref()).expect("finite exponential");
                linalg::matvec(e.as_ref(), v)
            }
        }
    }

    /// `e^{-t|op|}` evaluated at many times for one vector.
    pub fn trajectory(&self, ts: &[f64], v: &[c64]) -> Vec<Vec<c64>> {
        match &self.route {
            Route::Eigen(d) => {
                let a = d.analyze(v);
                ts.iter()
                    .map(|&t| if t == 0.0 { v.to_vec() } else { d.synthesize(&a, |l| (-t * bisectorial_abs(l)).exp()) })
                    .collect()
            }
            Route::Expm { abs, .. } => linalg::expm_trajectory(abs.as_ref(), ts, v).expect("finite exponential"),
        }
    }
}

/// `e^{-t op}F` for an ℋ⁰ field `F ∈ ran P₊(op)`.
pub fn semigroup_apply(op: &OperatorMatrix, t: f64, f: &BoundaryField) -> Result<BoundaryField> {
    let v = grid::to_vcoords(f)?;
    let out = Semigroup::new(op)?.apply(t, &v)?;
    Ok(grid::from_vcoords(op.grid, &out))
}

/// `|op|^s` for `s ∈ [-1, 1]`, with `|z|^s := (sgn(z) z)^s` on the principal branch.
pub fn fractional_power(op: &OperatorMatrix, s: f64) -> Result<OperatorMatrix> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("exponent {s} outside [-1, 1]")));
    }
    let dec = SpectralDecomposition::new(op)?;
    dec.require_reliable()?;
    dec.require_bisectorial(CalculusTolerances::default().margin_floor)?;
    if s == 0.0 {
        return Ok(OperatorMatrix::identity(op.grid));
    }
    Ok(OperatorMatrix { grid: op.grid, matrix: dec.function(|l| bisectorial_abs(l).powf(s)), space: op.space })
}

/// `L∥ = |ξ| ℛ* d′ ℛ |ξ|` on the nonzero scalar modes.
pub fn kato_operator(d: &CoefficientField) -> CMat {
    let table: ModeTable = d.grid.mode_table();
    let m = table.len();
    let full = calb_matrix(d);
    Mat::from_fn(m, m, |i, j| full[(m + i, m + j)] * (table.abs[i] * table.abs[j]))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KatoStats {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
}

/// Ratios `‖L∥^{1/2} f‖ / ‖(-Δ)^{1/2} f‖` over the given scalar mode vectors, where
/// `d′` is the tangential block of `d`.
pub fn kato_check(d: &CoefficientField, inputs: &[Vec<c64>]) -> Result<KatoStats> {
    let s = d.size;
    let n = s - 1;
    let mut low = f64::INFINITY;
    for p in 0..d.grid.total() {
        let m = d.at(p);
        let block: Vec<c64> = (0..n * n).map(|k| m[(1 + k / n) * s + 1 + k % n]).collect();
        low = low.min(coeff::hermitian_part_min_eig(&block, n));
    }
    if !(low > 0.0) {
        return Err(Error::NotAccretive { bound: low });
    }
    let l = kato_operator(d);
    let e = l.eigen().map_err(|e| Error::Linalg(format!("eigendecomposition failed: {e:?}")))?;
    let w = e.U().to_owned();
    let winv = linalg::inverse(w.as_ref())?;
    let lam: Vec<c64> = e.S().column_vector().iter().map(|z| z.sqrt()).collect();
    let k = d.grid.mode_table().abs;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for f in inputs {
        let a = linalg::matvec(winv.as_ref(), f);
        let a: Vec<c64> = a.iter().zip(&lam).map(|(x, l)| x * l).collect();
        let root = linalg::matvec(w.as_ref(), &a);
        let grad = f.iter().zip(&k).map(|(x, k)| (x * k).norm_sqr()).sum::<f64>().sqrt();
        if grad == 0.0 {
            continue;
        }
        let r = linalg::norm2(&root) / grad;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(KatoStats { min_ratio: lo, max_ratio: hi, samples: inputs.len() })
}
