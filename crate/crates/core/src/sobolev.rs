//! Quadratic-estimate norms `‖F‖_{op,s} = (∫₀^∞ t^{-2s} ‖ψ(t op)F‖² dt/t)^{1/2}`.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{self, c64};
use crate::operator::{bisectorial_abs, sgn, CalculusTolerances, OperatorMatrix, SpectralDecomposition};
use statrs::function::gamma::gamma;

/// `ψ(z) = z^k e^{-z sgn(z)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsiSpec {
    pub k: u32,
}

impl PsiSpec {
    pub fn new(k: u32) -> Self {
        PsiSpec { k }
    }

    /// `k = 1` for `s < 1`, `k = 2` otherwise.
    pub fn default_for(s: f64) -> Self {
        PsiSpec { k: if s < 1.0 { 1 } else { 2 } }
    }

    pub fn eval(&self, z: c64) -> c64 {
        z.powu(self.k) * (-z * sgn(z)).exp()
    }

    fn check(&self, s: f64) -> Result<()> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("exponent {s} outside [-1, 1]")));
        }
        if !(self.k as f64 > s.max(0.0)) || self.k == 0 {
            return Err(Error::InvalidParameter(format!("psi order k = {} must exceed max(s, 0) = {}", self.k, s.max(0.0))));
        }
        Ok(())
    }
}

/// `c_{ψ,s} = (Γ(2k - 2s) / 2^{2k-2s})^{1/2}`.
pub fn c_psi(psi: PsiSpec, s: f64) -> Result<f64> {
    psi.check(s)?;
    let p = 2.0 * psi.k as f64 - 2.0 * s;
    Ok((gamma(p) / 2f64.powf(p)).sqrt())
}

/// Log-spaced trapezoid rule parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    pub points: usize,
    /// Lower end of the range is `lower / max|λ|`.
    pub lower: f64,
    /// Upper end of the range is `upper / min Re(sgn(λ)λ)`.
    pub upper: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { points: 200, lower: 1e-4, upper: 40.0 }
    }
}

impl QuadratureConfig {
    /// Roughly forty points per decade over a wider range.
    pub fn fine() -> Self {
        QuadratureConfig { points: 800, lower: 1e-7, upper: 60.0 }
    }

    pub fn doubled(&self) -> Self {
        QuadratureConfig { points: 2 * self.points, ..*self }
    }
}

/// `n` points geometrically spaced in `[t0, t1]`.
pub fn log_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let (a, b) = (t0.ln(), t1.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Trapezoid rule for `∫ g(t) dt/t` on a log-spaced grid.
pub fn trapezoid_dlog(ts: &[f64], g: &[f64]) -> f64 {
    ts.windows(2)
        .zip(g.windows(2))
        .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] / t[0]).ln())
        .sum()
}

/// Closed form `‖F‖_{S,s} = c_{ψ,s} ‖|S|^s F‖` for V-coordinates `f`.
pub fn quad_norm_s(grid: &GridSpec, f: &[c64], s: f64, psi: PsiSpec) -> Result<f64> {
    let c = c_psi(psi, s)?;
    let table = grid.mode_table();
    let m = table.len();
    if f.len() != 2 * m {
        return Err(Error::InvalidParameter("vector is not in V-coordinates of this grid".into()));
    }
    let acc: f64 = f.iter().enumerate().map(|(i, z)| table.abs[i % m].powf(2.0 * s) * z.norm_sqr()).sum();
    Ok(c * acc.sqrt())
}

/// Quadrature range `[t0, t1]` adapted to the spectrum.
fn range(dec: &SpectralDecomposition, cfg: &QuadratureConfig) -> (f64, f64) {
    let (_, hi) = dec.radius_range();
    let low_re = dec.eigenvalues.iter().map(|&l| bisectorial_abs(l).re).fold(f64::INFINITY, f64::min);
    (cfg.lower / hi, cfg.upper / low_re)
}

/// Result of a quadrature with its tail estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureValue {
    pub value: f64,
    /// Analytic correction added for `(0, t0)`, relative to the squared total.
    pub lower_tail: f64,
    /// Integrand at `t1` relative to the squared total.
    pub upper_tail: f64,
}

fn integrate(ts: &[f64], g: &[f64], lower_power: f64) -> QuadratureValue {
    let body = trapezoid_dlog(ts, g);
    let lower = g[0] / lower_power;
    let total = body + lower;
    let rel = |x: f64| if total > 0.0 { x / total } else { 0.0 };
    QuadratureValue { value: total.max(0.0).sqrt(), lower_tail: rel(lower), upper_tail: rel(*g.last().unwrap()) }
}

fn adapted_decomposition(op: &OperatorMatrix) -> Result<SpectralDecomposition> {
    let dec = SpectralDecomposition::new(op)?;
    dec.require_reliable()?;
    dec.require_bisectorial(CalculusTolerances::default().margin_floor)?;
    Ok(dec)
}

/// `‖F‖_{op,s}` by log-trapezoid quadrature; the interval below the grid is
/// closed with the small-`t` asymptotics `t^{2k-2s}` of the integrand.
pub fn quad_norm_adapted(op: &OperatorMatrix, f: &[c64], s: f64, psi: PsiSpec, cfg: &QuadratureConfig) -> Result<QuadratureValue> {
    psi.check(s)?;
    let dec = adapted_decomposition(op)?;
    quad_norm_with(&dec, f, s, psi, cfg)
}

/// As [`quad_norm_adapted`] with a precomputed decomposition.
pub fn quad_norm_with(dec: &SpectralDecomposition, f: &[c64], s: f64, psi: PsiSpec, cfg: &QuadratureConfig) -> Result<QuadratureValue> {
    psi.check(s)?;
    if linalg::norm2(f) == 0.0 {
        return Ok(QuadratureValue { value: 0.0, lower_tail: 0.0, upper_tail: 0.0 });
    }
    let (t0, t1) = range(dec, cfg);
    let ts = log_grid(t0, t1, cfg.points);
    let a = dec.analyze(f);
    let g: Vec<f64> = ts
        .iter()
        .map(|&t| t.powf(-2.0 * s) * linalg::norm2(&dec.synthesize(&a, |l| psi.eval(l * t))).powi(2))
        .collect();
    let q = integrate(&ts, &g, 2.0 * psi.k as f64 - 2.0 * s);
    check_tails(q)
}

fn check_tails(q: QuadratureValue) -> Result<QuadratureValue> {
    if !q.value.is_finite() || q.upper_tail > 1e-6 || q.lower_tail > 1e-2 {
        return Err(Error::Quadrature(format!(
            "tails not resolved: lower {:.3e}, upper {:.3e}",
            q.lower_tail, q.upper_tail
        )));
    }
    Ok(q)
}

/// `(∫₀^∞ t^{-2s} ‖e^{-t|uT|}F‖² dt/t)^{1/2}` for `s ∈ [-1, 0)`.
pub fn semigroup_norm(ut: &OperatorMatrix, f: &[c64], s: f64, cfg: &QuadratureConfig) -> Result<QuadratureValue> {
    if !(-1.0..0.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("semigroup norm needs s in [-1, 0), got {s}")));
    }
    let dec = adapted_decomposition(ut)?;
    semigroup_norm_with(&dec, f, s, cfg)
}

pub fn semigroup_norm_with(dec: &SpectralDecomposition, f: &[c64], s: f64, cfg: &QuadratureConfig) -> Result<QuadratureValue> {
    if !(-1.0..0.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("semigroup norm needs s in [-1, 0), got {s}")));
    }
    if linalg::norm2(f) == 0.0 {
        return Ok(QuadratureValue { value: 0.0, lower_tail: 0.0, upper_tail: 0.0 });
    }
    let (t0, t1) = range(dec, cfg);
    let ts = log_grid(t0, t1, cfg.points);
    let a = dec.analyze(f);
    let g: Vec<f64> = ts
        .iter()
        .map(|&t| t.powf(-2.0 * s) * linalg::norm2(&dec.synthesize(&a, |l| (-t * bisectorial_abs(l)).exp())).powi(2))
        .collect();
    check_tails(integrate(&ts, &g, -2.0 * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_psi_k1_s0_is_half() {
        assert!((c_psi(PsiSpec::new(1), 0.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn psi_order_checked() {
        assert!(c_psi(PsiSpec::new(1), 1.0).is_err());
        assert!(c_psi(PsiSpec::new(2), 1.0).is_ok());
        assert!(c_psi(PsiSpec::new(1), 1.5).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 10.0, 5);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[4] - 10.0).abs() < 1e-12);
    }
}
