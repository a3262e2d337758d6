//! Block decomposition of `sgn(uT)` and the boundary maps built from it.
//!
//! Maps act between the ⊥ and ∥ V-coordinate slots. In physical terms the ∥ slot
//! holds `p∥` with tangential gradient `-ℛ p∥`, so for `A = I` the
//! Neumann-to-Dirichlet map is the identity matrix here and `-ℛ` physically.

use crate::coeff::{self, CoefficientField};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{self, c64, CMat};
use crate::operator::{self, OperatorMatrix, SignMethod};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `sgn(uT) = [[s11, s12], [s21, s22]]` along the ⊥/∥ split.
#[derive(Clone, Debug)]
pub struct SgnBlocks {
    pub grid: GridSpec,
    pub s11: CMat,
    pub s12: CMat,
    pub s21: CMat,
    pub s22: CMat,
}

pub fn sgn_blocks(sign: &OperatorMatrix) -> SgnBlocks {
    SgnBlocks { grid: sign.grid, s11: sign.block(0, 0), s12: sign.block(0, 1), s21: sign.block(1, 0), s22: sign.block(1, 1) }
}

impl SgnBlocks {
    pub fn reassemble(&self) -> CMat {
        linalg::from_blocks(&self.s11, &self.s12, &self.s21, &self.s22)
    }
}

/// A map between the ⊥ and ∥ slots, with the topology it was validated in.
#[derive(Clone, Debug)]
pub struct BoundaryMap {
    pub grid: GridSpec,
    pub matrix: CMat,
    pub s: f64,
    /// Relative `s`-weighted distance between the two factorizations (`NaN` if the
    /// second one is not defined).
    pub factorization_mismatch: f64,
}

impl BoundaryMap {
    /// `‖|ξ|^s X |ξ|^{-s}‖₂`.
    pub fn norm(&self, s: f64) -> f64 {
        weighted_norm(&self.grid, &self.matrix, s)
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        linalg::matvec(self.matrix.as_ref(), v)
    }
}

/// `|ξ|^s X |ξ|^{-s}` on the mode space.
pub fn weighted(grid: &GridSpec, x: &CMat, s: f64) -> CMat {
    if s == 0.0 {
        return x.clone();
    }
    let t = grid.mode_table();
    let w = t.weights(s);
    let wi = t.weights(-s);
    linalg::scale_rows_cols(x.as_ref(), &w, &wi)
}

pub fn weighted_norm(grid: &GridSpec, x: &CMat, s: f64) -> f64 {
    linalg::op_norm(weighted(grid, x, s).as_ref())
}

pub fn weighted_min_singular(grid: &GridSpec, x: &CMat, s: f64) -> f64 {
    linalg::min_singular(weighted(grid, x, s).as_ref())
}

/// Smallest singular value a block must have to be inverted.
pub const INVERTIBILITY_FLOOR: f64 = 1e-8;

fn shifted(x: &CMat, shift: f64) -> CMat {
    let mut y = x.clone();
    for i in 0..y.nrows() {
        y[(i, i)] += c64::new(shift, 0.0);
    }
    y
}

fn scaled(x: &CMat, a: f64) -> CMat {
    linalg::scaled(x.as_ref(), c64::new(a, 0.0))
}

fn require_invertible(grid: &GridSpec, x: &CMat, s: f64, block: &'static str) -> Result<()> {
    let sigma = weighted_min_singular(grid, x, s);
    if !(sigma > INVERTIBILITY_FLOOR) {
        return Err(Error::SingularBlock { block, s, sigma });
    }
    Ok(())
}

fn mismatch(grid: &GridSpec, a: &CMat, b: Result<CMat>, s: f64) -> f64 {
    match b {
        Ok(b) => weighted_norm(grid, &linalg::sub(a.as_ref(), b.as_ref()), s) / weighted_norm(grid, a, s).max(f64::MIN_POSITIVE),
        Err(_) => f64::NAN,
    }
}

/// `X⁻¹ Y`.
fn left_solve(x: &CMat, y: &CMat) -> Result<CMat> {
    linalg::solve(x.as_ref(), y.as_ref())
}

/// `Γ_ND = s12⁻¹(I - s11)`, cross-checked against `(I - s22)⁻¹ s21`.
pub fn gamma_nd(b: &SgnBlocks, s: f64) -> Result<BoundaryMap> {
    require_invertible(&b.grid, &b.s12, s, "s12")?;
    let m = left_solve(&b.s12, &shifted(&scaled(&b.s11, -1.0), 1.0))?;
    let alt = left_solve(&shifted(&scaled(&b.s22, -1.0), 1.0), &b.s21);
    let factorization_mismatch = mismatch(&b.grid, &m, alt, s);
    Ok(BoundaryMap { grid: b.grid, matrix: m, s, factorization_mismatch })
}

/// `Γ_DN = s21⁻¹(I - s22)`, cross-checked against `(I - s11)⁻¹ s12`.
pub fn gamma_dn(b: &SgnBlocks, s: f64) -> Result<BoundaryMap> {
    require_invertible(&b.grid, &b.s21, s, "s21")?;
    let m = left_solve(&b.s21, &shifted(&scaled(&b.s22, -1.0), 1.0))?;
    let alt = left_solve(&shifted(&scaled(&b.s11, -1.0), 1.0), &b.s12);
    let factorization_mismatch = mismatch(&b.grid, &m, alt, s);
    Ok(BoundaryMap { grid: b.grid, matrix: m, s, factorization_mismatch })
}

/// Lower half-space map `Γ⁻ = -s12⁻¹(I + s11)`, cross-checked against `-(I + s22)⁻¹ s21`.
pub fn gamma_minus(b: &SgnBlocks, s: f64) -> Result<BoundaryMap> {
    require_invertible(&b.grid, &b.s12, s, "s12")?;
    let m = scaled(&left_solve(&b.s12, &shifted(&b.s11, 1.0))?, -1.0);
    let alt = left_solve(&shifted(&b.s22, 1.0), &b.s21).map(|x| scaled(&x, -1.0));
    let factorization_mismatch = mismatch(&b.grid, &m, alt, s);
    Ok(BoundaryMap { grid: b.grid, matrix: m, s, factorization_mismatch })
}

/// Graph vector `[f; Γ f]` in V-coordinates.
pub fn graph_vector(map: &BoundaryMap, f: &[c64]) -> Vec<c64> {
    let mut v = f.to_vec();
    v.extend(map.apply(f));
    v
}

/// Graph vector `[Γ g; g]` for a map from the ∥ slot.
pub fn cograph_vector(map: &BoundaryMap, g: &[c64]) -> Vec<c64> {
    let mut v = map.apply(g);
    v.extend_from_slice(g);
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyLemmaReport {
    pub s: f64,
    pub sigma_s12: f64,
    pub sigma_s21: f64,
    pub sigma_s11_plus: f64,
    pub sigma_s11_minus: f64,
    pub sigma_s22_plus: f64,
    pub sigma_s22_minus: f64,
    pub floor: f64,
    /// `(min, max)` of `‖Q±P±u‖ / ‖P±u‖` over the probes, both slots and both signs.
    pub slot_ratio: (f64, f64),
    pub passed: bool,
}

impl KeyLemmaReport {
    pub fn min_sigma(&self) -> f64 {
        [self.sigma_s12, self.sigma_s21, self.sigma_s11_plus, self.sigma_s11_minus, self.sigma_s22_plus, self.sigma_s22_minus]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Minimum `|ξ|^s`-weighted singular values of `s12, s21, s11 ± I, s22 ± I` and the
/// slot comparability of the spectral subspaces on `probes` random vectors.
pub fn key_lemma_check(sign: &OperatorMatrix, s: f64, floor: f64, probes: usize, seed: u64) -> KeyLemmaReport {
    let b = sgn_blocks(sign);
    let g = &b.grid;
    let sv = |x: &CMat| weighted_min_singular(g, x, s);
    let mut r = KeyLemmaReport {
        s,
        sigma_s12: sv(&b.s12),
        sigma_s21: sv(&b.s21),
        sigma_s11_plus: sv(&shifted(&b.s11, 1.0)),
        sigma_s11_minus: sv(&shifted(&b.s11, -1.0)),
        sigma_s22_plus: sv(&shifted(&b.s22, 1.0)),
        sigma_s22_minus: sv(&shifted(&b.s22, -1.0)),
        floor,
        slot_ratio: (f64::INFINITY, 0.0),
        passed: false,
    };
    let w = g.mode_table().v_weights(s);
    let m = g.num_modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wn = |v: &[c64]| v.iter().zip(&w).map(|(z, w)| (z * w).norm_sqr()).sum::<f64>().sqrt();
    for _ in 0..probes {
        let u: Vec<c64> = (0..2 * m)
            .map(|i| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / w[i])
            .collect();
        let su = linalg::matvec(sign.matrix.as_ref(), &u);
        for sign_choice in [1.0, -1.0] {
            let p: Vec<c64> = u.iter().zip(&su).map(|(a, b)| (a + b * sign_choice) * 0.5).collect();
            let total = wn(&p);
            if total == 0.0 {
                continue;
            }
            let mut perp = p.clone();
            perp[m..].iter_mut().for_each(|z| *z = c64::new(0.0, 0.0));
            let mut par = p.clone();
            par[..m].iter_mut().for_each(|z| *z = c64::new(0.0, 0.0));
            for q in [wn(&perp), wn(&par)] {
                r.slot_ratio.0 = r.slot_ratio.0.min(q / total);
                r.slot_ratio.1 = r.slot_ratio.1.max(q / total);
            }
        }
    }
    r.passed = r.min_sigma() > floor;
    r
}

/// Forward and inverse Rellich constants in L².
#[derive(Clone, Debug, PartialEq)]
pub struct RellichConstants {
    /// `‖Γ_ND‖₂`, infinite when `s12` is singular at this resolution.
    pub forward: f64,
    /// `‖Γ_DN‖₂`, infinite when `s21` is singular at this resolution.
    pub inverse: f64,
    /// `max ‖P₋[f; Γ_ND f]‖ / ‖f‖` over the unit modes, `NaN` if the forward map is undefined.
    pub graph_residual: f64,
    /// Largest factorization mismatch of the two maps.
    pub factorization_mismatch: f64,
}

/// Rellich constants for the coefficient `A` (not its hat transform).
pub fn rellich_constant(a: &CoefficientField) -> Result<RellichConstants> {
    let b = coeff::hat_transform(a)?;
    let calb = operator::assemble_calb(&b)?;
    let ut = operator::compose_ut(&calb);
    let sign = operator::matrix_sign(&ut, SignMethod::Eigen)?;
    rellich_from_sign(&sign)
}

pub fn rellich_from_sign(sign: &OperatorMatrix) -> Result<RellichConstants> {
    let blocks = sgn_blocks(sign);
    let fwd = gamma_nd(&blocks, 0.0);
    let inv = gamma_dn(&blocks, 0.0);
    let (forward, graph_residual, fm) = match &fwd {
        Ok(map) => {
            let minus = graph_residual_matrix(sign, map);
            (map.norm(0.0), linalg::op_norm(minus.as_ref()), map.factorization_mismatch)
        }
        Err(Error::SingularBlock { .. }) => (f64::INFINITY, f64::NAN, f64::NAN),
        Err(e) => return Err(Error::Linalg(e.to_string())),
    };
    let (inverse, im) = match &inv {
        Ok(map) => (map.norm(0.0), map.factorization_mismatch),
        Err(Error::SingularBlock { .. }) => (f64::INFINITY, f64::NAN),
        Err(e) => return Err(Error::Linalg(e.to_string())),
    };
    Ok(RellichConstants { forward, inverse, graph_residual, factorization_mismatch: fm.max(im) })
}

/// `P₋ [I; Γ]` as a `2M × M` matrix.
pub fn graph_residual_matrix(sign: &OperatorMatrix, map: &BoundaryMap) -> CMat {
    let m = map.matrix.nrows();
    let graph = Mat::from_fn(2 * m, m, |i, j| {
        if i < m {
            if i == j {
                c64::new(1.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        } else {
            map.matrix[(i - m, j)]
        }
    });
    let sg = &sign.matrix * &graph;
    Mat::from_fn(2 * m, m, |i, j| (graph[(i, j)] - sg[(i, j)]) * 0.5)
}
