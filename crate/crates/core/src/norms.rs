//! Solution-class norms of strip fields: the modified nontangential maximal
//! function, the square function and the energy norm.

use crate::error::{Error, Result};
use crate::solvers::StripField;
use crate::sobolev;
use serde::{Deserialize, Serialize};

/// Whitney regions `W(t,x) = (t/c0, c0 t) × B(x, c1 t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhitneyParams {
    pub c0: f64,
    pub c1: f64,
}

impl Default for WhitneyParams {
    fn default() -> Self {
        WhitneyParams { c0: 2.0, c1: 1.0 }
    }
}

impl WhitneyParams {
    pub fn new(c0: f64, c1: f64) -> Result<Self> {
        let p = WhitneyParams { c0, c1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 1.0) || !(self.c1 > 0.0) || !self.c0.is_finite() || !self.c1.is_finite() {
            return Err(Error::InvalidParameter(format!("Whitney constants need c0 > 1, c1 > 0 (got {}, {})", self.c0, self.c1)));
        }
        Ok(())
    }
}

/// Which strip quantity enters a norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldQuantity {
    /// `∇_{t,x} u`.
    Gradient,
    /// `∇_A u`.
    Conormal,
    /// `u` itself (gauge included).
    Value,
}

/// Minimum number of dyadic levels for `Ñ`.
pub const MIN_DYADIC_LEVELS: usize = 4;
/// Minimum `log₁₀(t_max / t_min)` for the `t`-integrals.
pub const MIN_DECADES: f64 = 4.0;

/// `|g(t_k, x)|²` summed over components, physical, one vector per level.
fn squared_moduli(field: &StripField, q: FieldQuantity) -> Vec<Vec<f64>> {
    let p = field.grid.total();
    (0..field.levels())
        .map(|k| {
            let f = match q {
                FieldQuantity::Gradient => field.gradient_field(k),
                FieldQuantity::Conormal => field.conormal_field(k).to_physical(),
                FieldQuantity::Value => field.u_field(k).to_physical(),
            };
            (0..p).map(|x| (0..f.components).map(|c| f.values[c * p + x].norm_sqr()).sum()).collect()
        })
        .collect()
}

/// Weights `w_k` with `Σ w_k g(t_k) = ∫_a^b g` for the piecewise-linear interpolant.
pub fn window_weights(ts: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut w = vec![0.0; ts.len()];
    for k in 0..ts.len().saturating_sub(1) {
        let (t0, t1) = (ts[k], ts[k + 1]);
        let (lo, hi) = (a.max(t0), b.min(t1));
        if hi <= lo {
            continue;
        }
        let h = t1 - t0;
        // ∫_lo^hi (t1 - s)/h ds and ∫_lo^hi (s - t0)/h ds.
        w[k] += ((t1 - lo).powi(2) - (t1 - hi).powi(2)) / (2.0 * h);
        w[k + 1] += ((hi - t0).powi(2) - (lo - t0).powi(2)) / (2.0 * h);
    }
    w
}

/// Dyadic heights `2^j` whose Whitney window lies in the sampled range and whose
/// ball fits in the torus (`c1 t ≤ L/2`).
pub fn dyadic_levels(field: &StripField, params: &WhitneyParams) -> Vec<f64> {
    let t_min = field.t_grid.iter().cloned().find(|t| *t > 0.0).unwrap_or(0.0);
    let t_max = *field.t_grid.last().unwrap_or(&0.0);
    let lo = t_min * params.c0;
    let hi = (t_max / params.c0).min(field.grid.period / (2.0 * params.c1));
    if !(lo > 0.0) || !(hi >= lo) {
        return Vec::new();
    }
    let (j0, j1) = (lo.log2().ceil() as i32, hi.log2().floor() as i32);
    (j0..=j1).map(|j| 2f64.powi(j)).collect()
}

/// `|B(0, r)|` in `ℝⁿ`.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        _ => std::f64::consts::PI * r * r,
    }
}

/// `Ñ(g)(x)` at every grid point. The ball integral is `|B|` times the mean of
/// the samples inside the ball, so balls smaller than a cell use the point value.
pub fn nontangential_function(field: &StripField, params: &WhitneyParams, q: FieldQuantity) -> Result<Vec<f64>> {
    params.validate()?;
    let levels = dyadic_levels(field, params);
    if levels.len() < MIN_DYADIC_LEVELS {
        return Err(Error::InvalidParameter(format!(
            "t grid covers {} dyadic Whitney levels, need {MIN_DYADIC_LEVELS}",
            levels.len()
        )));
    }
    let g = field.grid;
    let n = g.dim;
    let p = g.total();
    let sq = squared_moduli(field, q);
    let mut out = vec![0.0f64; p];
    for &t in &levels {
        let w = window_weights(&field.t_grid, t / params.c0, params.c0 * t);
        let col: Vec<f64> = (0..p).map(|x| sq.iter().zip(&w).map(|(s, wk)| wk * s[x]).sum()).collect();
        let r = params.c1 * t;
        let offsets = ball_offsets(&g, r);
        let vol = ball_volume(n, r) / offsets.len() as f64;
        let norm = t.powf(-0.5 * (1.0 + n as f64));
        for (x, o) in out.iter_mut().enumerate() {
            let acc: f64 = offsets.iter().map(|d| col[shift(&g, x, *d)]).sum();
            *o = o.max(norm * (vol * acc).sqrt());
        }
    }
    Ok(out)
}

/// Integer offsets `d` with periodic distance `|d h| < r`; always contains `0`.
fn ball_offsets(g: &crate::grid::GridSpec, r: f64) -> Vec<[i64; 2]> {
    let h = g.spacing();
    let n = g.points as i64;
    let half = n / 2;
    let range: Vec<i64> = (-half..n - half).collect();
    let mut out = Vec::new();
    let inside = |d: &[i64; 2]| ((d[0] * d[0] + d[1] * d[1]) as f64).sqrt() * h < r;
    if g.dim == 1 {
        for &a in &range {
            let d = [a, 0];
            if a == 0 || inside(&d) {
                out.push(d);
            }
        }
    } else {
        for &a in &range {
            for &b in &range {
                let d = [a, b];
                if (a == 0 && b == 0) || inside(&d) {
                    out.push(d);
                }
            }
        }
    }
    out
}

fn shift(g: &crate::grid::GridSpec, x: usize, d: [i64; 2]) -> usize {
    let n = g.points as i64;
    let wrap = |v: i64| v.rem_euclid(n) as usize;
    if g.dim == 1 {
        wrap(x as i64 + d[0])
    } else {
        let (r, c) = ((x / g.points) as i64, (x % g.points) as i64);
        wrap(r + d[0]) * g.points + wrap(c + d[1])
    }
}

/// `‖Ñ(g)‖₂`.
pub fn nontangential_norm(field: &StripField, params: &WhitneyParams, q: FieldQuantity) -> Result<f64> {
    let nt = nontangential_function(field, params, q)?;
    let hn = field.grid.cell_volume();
    Ok((hn * nt.iter().map(|v| v * v).sum::<f64>()).sqrt())
}

fn require_span(field: &StripField) -> Result<()> {
    let t = &field.t_grid;
    if t.len() < 2 || !(t[0] > 0.0) {
        return Err(Error::InvalidParameter("t grid must start above zero and have at least two levels".into()));
    }
    let span = (t[t.len() - 1] / t[0]).log10();
    if span < MIN_DECADES {
        return Err(Error::InvalidParameter(format!("t grid spans {span:.2} decades, need {MIN_DECADES}")));
    }
    Ok(())
}

/// Value of a `t`-integral with its lower-tail correction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StripIntegral {
    pub value: f64,
    pub lower_tail: f64,
    /// Integrand at the top level relative to its maximum (upper-tail indicator).
    pub upper_tail: f64,
}

fn t_integral(field: &StripField, power: i32) -> Result<StripIntegral> {
    require_span(field)?;
    let t = &field.t_grid;
    let g: Vec<f64> = field.gradient_norms().iter().map(|v| v * v).collect();
    // ∫ t^{power} g dt = ∫ t^{power+1} g dt/t.
    let integrand: Vec<f64> = t.iter().zip(&g).map(|(ti, gi)| ti.powi(power + 1) * gi).collect();
    let body = sobolev::trapezoid_dlog(t, &integrand);
    let (t0, t1) = (t[0], t[1]);
    let slope = (g[1] - g[0]) / (t1 - t0);
    // ∫_0^{t0} t^{power} (g0 + slope (t - t0)) dt.
    let lower_tail = match power {
        0 => g[0] * t0 - slope * t0 * t0 / 2.0,
        1 => g[0] * t0 * t0 / 2.0 - slope * t0.powi(3) / 6.0,
        _ => unreachable!(),
    };
    let top = integrand.iter().cloned().fold(0.0, f64::max);
    let upper_tail = if top > 0.0 { integrand[integrand.len() - 1] / top } else { 0.0 };
    Ok(StripIntegral { value: body + lower_tail, lower_tail, upper_tail })
}

/// `∫ t ‖∇_{t,x} u(t)‖₂² dt`.
pub fn square_function_integral(field: &StripField) -> Result<StripIntegral> {
    t_integral(field, 1)
}

/// `(∬ t |∇_{t,x} u|²)^{1/2}`.
pub fn square_function_norm(field: &StripField) -> Result<f64> {
    Ok(square_function_integral(field)?.value.max(0.0).sqrt())
}

/// `∫ ‖∇_{t,x} u(t)‖₂² dt`.
pub fn energy_integral(field: &StripField) -> Result<StripIntegral> {
    t_integral(field, 0)
}

/// `(∬ |∇_{t,x} u|²)^{1/2}`.
pub fn energy_norm(field: &StripField) -> Result<f64> {
    Ok(energy_integral(field)?.value.max(0.0).sqrt())
}

/// Log-spaced heights from `min(h/4, 16 L · 10⁻⁸)` to `16 L`.
pub fn default_t_grid(grid: &crate::grid::GridSpec) -> Vec<f64> {
    let hi = 16.0 * grid.period;
    sobolev::log_grid((grid.spacing() / 4.0).min(hi * 1e-8), hi, 240)
}
