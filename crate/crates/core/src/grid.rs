//! Periodic grids, Fourier transforms and boundary fields.
//!
//! Frequency coefficients are stored with unitary scaling,
//! `c_k = L^{n/2} · N^{-n} Σ_x f(x) e^{-iξ·x}`, so that the L² norm of a field is
//! the Euclidean norm of its coefficient vector. Mode `0` (the mean) is never part
//! of ℋ⁰; mode lists enumerate the remaining `N^n - 1` flat indices in FFT order.

pub mod dump;

use crate::error::{Error, Result};
use crate::linalg::c64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// Discretization of the torus `(ℝ/Lℤ)ⁿ` with `N` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    pub period: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, period: f64) -> Result<Self> {
        let g = GridSpec { dim, points, period };
        g.validate()?;
        Ok(g)
    }

    /// Grid with the default period `2π`.
    pub fn periodic(dim: usize, points: usize) -> Result<Self> {
        Self::new(dim, points, 2.0 * PI)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {} not in {{1, 2}}", self.dim)));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N = {} must be a power of two >= 8", self.points)));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidGrid(format!("period {} must be positive", self.period)));
        }
        Ok(())
    }

    pub fn refined(&self) -> Self {
        GridSpec { points: 2 * self.points, ..*self }
    }

    pub fn with_points(&self, points: usize) -> Self {
        GridSpec { points, ..*self }
    }

    /// `N^n`.
    pub fn total(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Number of nonzero modes `M = N^n - 1`.
    pub fn num_modes(&self) -> usize {
        self.total() - 1
    }

    /// Dimension of ℋ⁰ in V-coordinates.
    pub fn h0_dim(&self) -> usize {
        2 * self.num_modes()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `L^{n/2}`, the factor between mean-normalized and unitary coefficients.
    pub fn unitary_scale(&self) -> f64 {
        self.period.powf(self.dim as f64 / 2.0)
    }

    pub fn point(&self, flat: usize) -> [f64; 2] {
        let h = self.spacing();
        if self.dim == 1 {
            [flat as f64 * h, 0.0]
        } else {
            [(flat / self.points) as f64 * h, (flat % self.points) as f64 * h]
        }
    }

    /// Signed integer frequency of axis index `j`; the Nyquist index maps to `-N/2`.
    pub fn freq(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn wavenumbers(&self, flat: usize) -> [i64; 2] {
        if self.dim == 1 {
            [self.freq(flat), 0]
        } else {
            [self.freq(flat / self.points), self.freq(flat % self.points)]
        }
    }

    pub fn wavevector(&self, flat: usize) -> [f64; 2] {
        let k = self.wavenumbers(flat);
        let s = 2.0 * PI / self.period;
        [k[0] as f64 * s, k[1] as f64 * s]
    }

    /// Flat index of an integer wavenumber, reduced modulo `N`.
    pub fn flat_of(&self, k: [i64; 2]) -> usize {
        let n = self.points as i64;
        let r = |v: i64| v.rem_euclid(n) as usize;
        if self.dim == 1 {
            r(k[0])
        } else {
            r(k[0]) * self.points + r(k[1])
        }
    }

    /// Flat index of `k - m` for flat indices `k`, `m`.
    pub fn flat_diff(&self, k: usize, m: usize) -> usize {
        let n = self.points;
        if self.dim == 1 {
            (k + n - m) % n
        } else {
            let (k1, k2, m1, m2) = (k / n, k % n, m / n, m % n);
            ((k1 + n - m1) % n) * n + (k2 + n - m2) % n
        }
    }

    pub fn mode_table(&self) -> ModeTable {
        ModeTable::new(*self)
    }
}

/// Per-mode data for the nonzero frequencies of a grid.
#[derive(Clone, Debug)]
pub struct ModeTable {
    pub grid: GridSpec,
    pub flat: Vec<usize>,
    pub xi: Vec<[f64; 2]>,
    pub abs: Vec<f64>,
    /// Riesz symbol `iξ/|ξ|` per mode.
    pub riesz: Vec<[c64; 2]>,
}

impl ModeTable {
    fn new(grid: GridSpec) -> Self {
        let flat: Vec<usize> = (1..grid.total()).collect();
        let xi: Vec<[f64; 2]> = flat.iter().map(|&f| grid.wavevector(f)).collect();
        let abs: Vec<f64> = xi.iter().map(|x| (x[0] * x[0] + x[1] * x[1]).sqrt()).collect();
        let riesz = xi
            .iter()
            .zip(&abs)
            .map(|(x, a)| [c64::new(0.0, x[0] / a), c64::new(0.0, x[1] / a)])
            .collect();
        ModeTable { grid, flat, xi, abs, riesz }
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// `|ξ|^s` per mode.
    pub fn weights(&self, s: f64) -> Vec<f64> {
        self.abs.iter().map(|a| a.powf(s)).collect()
    }

    /// `|ξ|^s` repeated over both V-coordinate slots.
    pub fn v_weights(&self, s: f64) -> Vec<f64> {
        let w = self.weights(s);
        w.iter().chain(w.iter()).cloned().collect()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

fn transform(grid: &GridSpec, data: &mut [c64], forward: bool) {
    assert_eq!(data.len(), grid.total());
    let n = grid.points;
    let (f, i) = plans(n);
    let plan = if forward { f } else { i };
    if grid.dim == 1 {
        plan.process(data);
    } else {
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![ZERO; n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            plan.process(&mut col);
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
    }
}

/// Physical samples to unitary coefficients, in place.
pub fn to_unitary(grid: &GridSpec, data: &mut [c64]) {
    transform(grid, data, true);
    let s = grid.unitary_scale() / grid.total() as f64;
    data.iter_mut().for_each(|z| *z *= s);
}

/// Unitary coefficients to physical samples, in place.
pub fn from_unitary(grid: &GridSpec, data: &mut [c64]) {
    transform(grid, data, false);
    let s = 1.0 / grid.unitary_scale();
    data.iter_mut().for_each(|z| *z *= s);
}

/// Mean-normalized coefficients `N^{-n} Σ f(x) e^{-iξ·x}` of a scalar sample array.
pub fn mean_coefficients(grid: &GridSpec, samples: &[c64]) -> Vec<c64> {
    let mut d = samples.to_vec();
    transform(grid, &mut d, true);
    let s = 1.0 / grid.total() as f64;
    d.iter_mut().for_each(|z| *z *= s);
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Physical,
    Frequency,
}

/// A `C^k`-valued grid function, stored component-major.
///
/// Component 0 is the normal (⊥) part; components `1..=n` the tangential (∥) part
/// when the field has `1 + n` components.
#[derive(Clone, Debug)]
pub struct BoundaryField {
    pub grid: GridSpec,
    pub components: usize,
    pub values: Vec<c64>,
    pub representation: Representation,
    pub h0: bool,
}

impl BoundaryField {
    pub fn new(grid: GridSpec, components: usize, values: Vec<c64>, representation: Representation) -> Result<Self> {
        grid.validate()?;
        if components == 0 || values.len() != components * grid.total() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, expected {} x {}",
                values.len(),
                components,
                grid.total()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("boundary field"));
        }
        Ok(BoundaryField { grid, components, values, representation, h0: false })
    }

    pub fn zeros(grid: GridSpec, components: usize) -> Self {
        BoundaryField {
            grid,
            components,
            values: vec![ZERO; components * grid.total()],
            representation: Representation::Physical,
            h0: false,
        }
    }

    pub fn scalar(grid: GridSpec, values: Vec<c64>) -> Result<Self> {
        Self::new(grid, 1, values, Representation::Physical)
    }

    pub fn from_fn(grid: GridSpec, components: usize, f: impl Fn([f64; 2], usize) -> c64) -> Self {
        let total = grid.total();
        let values = (0..components * total).map(|i| f(grid.point(i % total), i / total)).collect();
        BoundaryField { grid, components, values, representation: Representation::Physical, h0: false }
    }

    pub fn scalar_from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> c64) -> Self {
        Self::from_fn(grid, 1, |x, _| f(x))
    }

    pub fn component(&self, i: usize) -> &[c64] {
        let t = self.grid.total();
        &self.values[i * t..(i + 1) * t]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [c64] {
        let t = self.grid.total();
        &mut self.values[i * t..(i + 1) * t]
    }

    pub fn to_frequency(&self) -> Self {
        if self.representation == Representation::Frequency {
            return self.clone();
        }
        let mut out = self.clone();
        for i in 0..self.components {
            to_unitary(&self.grid, out.component_mut(i));
        }
        out.representation = Representation::Frequency;
        out
    }

    pub fn to_physical(&self) -> Self {
        if self.representation == Representation::Physical {
            return self.clone();
        }
        let mut out = self.clone();
        for i in 0..self.components {
            from_unitary(&self.grid, out.component_mut(i));
        }
        out.representation = Representation::Physical;
        out
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        match self.representation {
            Representation::Frequency => s.sqrt(),
            Representation::Physical => (s * self.grid.cell_volume()).sqrt(),
        }
    }

    /// Spatial mean of component `i`.
    pub fn mean(&self, i: usize) -> c64 {
        match self.representation {
            Representation::Physical => {
                self.component(i).iter().sum::<c64>() / self.grid.total() as f64
            }
            Representation::Frequency => {
                self.component(i)[0] / self.grid.unitary_scale()
            }
        }
    }

    pub fn map_values(&self, f: impl Fn(c64) -> c64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z = f(*z));
        out
    }

    /// `self - other` in the representation of `self`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::InvalidParameter("field shapes differ".into()));
        }
        let o = if self.representation == Representation::Frequency {
            other.to_frequency()
        } else {
            other.to_physical()
        };
        let mut out = self.clone();
        out.values.iter_mut().zip(&o.values).for_each(|(a, b)| *a -= b);
        out.h0 = self.h0 && other.h0;
        Ok(out)
    }

    /// Checks the ℋ⁰ invariants: zero means and curl-free tangential part.
    pub fn check_h0(&self, tol: f64) -> Result<()> {
        let n = self.grid.dim;
        if self.components != 1 + n {
            return Err(Error::NotInH0(format!("expected {} components, found {}", 1 + n, self.components)));
        }
        let f = self.to_frequency();
        let scale = tol * f.l2_norm().max(f64::MIN_POSITIVE);
        for c in 0..self.components {
            if f.component(c)[0].norm() > scale {
                return Err(Error::NotInH0(format!("component {c} has nonzero mean")));
            }
        }
        if n == 2 {
            let (g1, g2) = (f.component(1), f.component(2));
            for k in 1..self.grid.total() {
                let xi = self.grid.wavevector(k);
                let curl = xi[0] * g2[k] - xi[1] * g1[k];
                if curl.norm() > scale {
                    return Err(Error::NotInH0(format!("tangential part has curl {:.3e} at mode {k}", curl.norm())));
                }
            }
        }
        Ok(())
    }
}

fn require_finite(f: &BoundaryField) -> Result<()> {
    if f.values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("boundary field"));
    }
    Ok(())
}

/// Nonzero-mode unitary coefficients of component `c`.
pub fn modes_of(f: &BoundaryField, c: usize) -> Vec<c64> {
    let fr = f.to_frequency();
    fr.component(c)[1..].to_vec()
}

/// Scalar frequency-representation field with the given nonzero modes and zero mean.
pub fn scalar_from_modes(grid: GridSpec, modes: &[c64]) -> BoundaryField {
    let mut values = vec![ZERO; grid.total()];
    values[1..].copy_from_slice(modes);
    BoundaryField { grid, components: 1, values, representation: Representation::Frequency, h0: false }
}

/// Riesz transforms `ℛ = ∇(-Δ)^{-1/2}`: symbol `iξ_j/|ξ|`. The mean is dropped.
pub fn riesz_apply(f: &BoundaryField) -> Result<BoundaryField> {
    require_finite(f)?;
    if f.components != 1 {
        return Err(Error::InvalidParameter("riesz_apply expects a scalar field".into()));
    }
    let g = f.grid;
    let table = g.mode_table();
    let c = modes_of(f, 0);
    let mut out = BoundaryField::zeros(g, g.dim);
    out.representation = Representation::Frequency;
    for j in 0..g.dim {
        let comp = out.component_mut(j);
        for (m, cm) in c.iter().enumerate() {
            comp[m + 1] = table.riesz[m][j] * cm;
        }
    }
    Ok(out.to_physical_if(f.representation))
}

/// Adjoint `ℛ*`: symbol `-iξ_j/|ξ|`, summed over components.
pub fn riesz_adjoint(f: &BoundaryField) -> Result<BoundaryField> {
    require_finite(f)?;
    let g = f.grid;
    if f.components != g.dim {
        return Err(Error::InvalidParameter("riesz_adjoint expects an n-component field".into()));
    }
    let table = g.mode_table();
    let fr = f.to_frequency();
    let mut out = BoundaryField::zeros(g, 1);
    out.representation = Representation::Frequency;
    for j in 0..g.dim {
        let src = fr.component(j);
        let dst = out.component_mut(0);
        for m in 0..table.len() {
            dst[m + 1] += table.riesz[m][j].conj() * src[m + 1];
        }
    }
    Ok(out.to_physical_if(f.representation))
}

impl BoundaryField {
    fn to_physical_if(self, rep: Representation) -> Self {
        match rep {
            Representation::Physical => self.to_physical(),
            Representation::Frequency => self,
        }
    }
}

/// Orthogonal projection onto ℋ⁰: mean removal, and `ξξᵀ/|ξ|²` on the tangential part.
pub fn pi_project(f: &BoundaryField) -> Result<BoundaryField> {
    require_finite(f)?;
    let g = f.grid;
    if f.components != 1 + g.dim {
        return Err(Error::InvalidParameter(format!("pi_project expects {} components", 1 + g.dim)));
    }
    let table = g.mode_table();
    let mut fr = f.to_frequency();
    for c in 0..fr.components {
        fr.component_mut(c)[0] = ZERO;
    }
    if g.dim == 2 {
        let t = g.total();
        for m in 0..table.len() {
            let k = m + 1;
            let r = table.riesz[m];
            let (a, b) = (fr.values[t + k], fr.values[2 * t + k]);
            let p = r[0].conj() * a + r[1].conj() * b;
            fr.values[t + k] = r[0] * p;
            fr.values[2 * t + k] = r[1] * p;
        }
    }
    let mut out = fr.to_physical_if(f.representation);
    out.h0 = true;
    Ok(out)
}

fn strip_mean(f: &BoundaryField, what: &str) -> Vec<c64> {
    let fr = f.to_frequency();
    if fr.component(0)[0].norm() > 1e-12 * fr.l2_norm().max(1.0) {
        log::warn!("{what}: zero-mode content stripped");
    }
    fr.component(0)[1..].to_vec()
}

/// `V(p⊥, p∥) = [p⊥; -ℛ p∥]`.
pub fn v_apply(perp: &BoundaryField, par: &BoundaryField) -> Result<BoundaryField> {
    require_finite(perp)?;
    require_finite(par)?;
    if perp.components != 1 || par.components != 1 || perp.grid != par.grid {
        return Err(Error::InvalidParameter("v_apply expects two scalar fields on one grid".into()));
    }
    let mut v = strip_mean(perp, "v_apply");
    v.extend(strip_mean(par, "v_apply"));
    Ok(from_vcoords(perp.grid, &v).to_physical_if(perp.representation))
}

/// `V*F = (F⊥, -ℛ*F∥)`.
pub fn v_adjoint(f: &BoundaryField) -> Result<(BoundaryField, BoundaryField)> {
    require_finite(f)?;
    let g = f.grid;
    let v = project_vcoords(f)?;
    let m = g.num_modes();
    let rep = f.representation;
    Ok((
        scalar_from_modes(g, &v[..m]).to_physical_if(rep),
        scalar_from_modes(g, &v[m..]).to_physical_if(rep),
    ))
}

/// `V*F` as a coordinate vector, without checking membership in ℋ⁰.
pub fn project_vcoords(f: &BoundaryField) -> Result<Vec<c64>> {
    let g = f.grid;
    if f.components != 1 + g.dim {
        return Err(Error::InvalidParameter(format!("expected {} components", 1 + g.dim)));
    }
    let table = g.mode_table();
    let fr = f.to_frequency();
    let m = table.len();
    let mut v = vec![ZERO; 2 * m];
    v[..m].copy_from_slice(&fr.component(0)[1..]);
    for j in 0..g.dim {
        let src = fr.component(1 + j);
        for i in 0..m {
            v[m + i] -= table.riesz[i][j].conj() * src[i + 1];
        }
    }
    Ok(v)
}

/// V-coordinates of an ℋ⁰ field; rejects fields that are not in ℋ⁰.
pub fn to_vcoords(f: &BoundaryField) -> Result<Vec<c64>> {
    require_finite(f)?;
    f.check_h0(1e-8)?;
    project_vcoords(f)
}

/// ℋ⁰ field (frequency representation) with V-coordinates `v`.
pub fn from_vcoords(grid: GridSpec, v: &[c64]) -> BoundaryField {
    let table = grid.mode_table();
    let m = table.len();
    assert_eq!(v.len(), 2 * m);
    let t = grid.total();
    let mut values = vec![ZERO; (1 + grid.dim) * t];
    for i in 0..m {
        values[i + 1] = v[i];
        for j in 0..grid.dim {
            values[(1 + j) * t + i + 1] = -table.riesz[i][j] * v[m + i];
        }
    }
    BoundaryField { grid, components: 1 + grid.dim, values, representation: Representation::Frequency, h0: true }
}

/// Homogeneous Sobolev norm `(Σ_{ξ≠0} |ξ|^{2s} |c_ξ|²)^{1/2}`, summed over components.
pub fn sobolev_norm(f: &BoundaryField, s: f64) -> Result<f64> {
    require_finite(f)?;
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("Sobolev exponent {s} outside [-1, 1]")));
    }
    let table = f.grid.mode_table();
    let fr = f.to_frequency();
    let mut acc = 0.0;
    for c in 0..f.components {
        let comp = fr.component(c);
        for m in 0..table.len() {
            acc += table.abs[m].powf(2.0 * s) * comp[m + 1].norm_sqr();
        }
    }
    Ok(acc.sqrt())
}

/// Spectral gradient `∇f` of a scalar field.
pub fn gradient(f: &BoundaryField) -> Result<BoundaryField> {
    require_finite(f)?;
    if f.components != 1 {
        return Err(Error::InvalidParameter("gradient expects a scalar field".into()));
    }
    let g = f.grid;
    let fr = f.to_frequency();
    let mut out = BoundaryField::zeros(g, g.dim);
    out.representation = Representation::Frequency;
    for j in 0..g.dim {
        let dst = out.component_mut(j);
        for k in 1..g.total() {
            dst[k] = c64::new(0.0, g.wavevector(k)[j]) * fr.values[k];
        }
    }
    Ok(out.to_physical_if(f.representation))
}

/// Spectral divergence of an `n`-component field.
pub fn divergence(f: &BoundaryField) -> Result<BoundaryField> {
    require_finite(f)?;
    let g = f.grid;
    if f.components != g.dim {
        return Err(Error::InvalidParameter("divergence expects an n-component field".into()));
    }
    let fr = f.to_frequency();
    let mut out = BoundaryField::zeros(g, 1);
    out.representation = Representation::Frequency;
    for j in 0..g.dim {
        let src = fr.component(j).to_vec();
        let dst = out.component_mut(0);
        for k in 1..g.total() {
            dst[k] += c64::new(0.0, g.wavevector(k)[j]) * src[k];
        }
    }
    Ok(out.to_physical_if(f.representation))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::periodic(1, 4).is_err());
        assert!(GridSpec::periodic(1, 12).is_err());
        assert!(GridSpec::periodic(3, 8).is_err());
        assert!(GridSpec::new(1, 8, 0.0).is_err());
        let g = GridSpec::periodic(2, 8).unwrap();
        assert_eq!(g.num_modes(), 63);
        assert_eq!(g.h0_dim(), 126);
    }

    #[test]
    fn frequencies_in_fft_order() {
        let g = GridSpec::periodic(1, 8).unwrap();
        let k: Vec<i64> = (0..8).map(|j| g.freq(j)).collect();
        assert_eq!(k, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.flat_of([-1, 0]), 7);
        assert_eq!(g.flat_diff(1, 7), 2);
    }

    #[test]
    fn single_mode_coefficient() {
        let g = GridSpec::periodic(1, 16).unwrap();
        let f = BoundaryField::scalar_from_fn(g, |x| c64::new(0.0, x[0]).exp());
        let fr = f.to_frequency();
        let want = g.unitary_scale();
        assert!((fr.values[1] - c64::new(want, 0.0)).norm() < 1e-12);
        assert!((fr.l2_norm() - f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn riesz_cosine_is_minus_sine() {
        let g = GridSpec::periodic(1, 32).unwrap();
        let f = BoundaryField::scalar_from_fn(g, |x| c64::new(x[0].cos(), 0.0));
        let r = riesz_apply(&f).unwrap();
        for (i, z) in r.values.iter().enumerate() {
            let x = g.point(i)[0];
            assert!((z - c64::new(-x.sin(), 0.0)).norm() < 1e-12);
        }
    }
}
