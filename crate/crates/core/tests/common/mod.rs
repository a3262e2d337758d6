//! Independent reference computations used only by tests.
#![allow(dead_code)]

use dblab::linalg::{self, c64, CMat};
use dblab::GridSpec;
use faer::Mat;

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

/// Truncated Taylor series of `e^{A}` with scaling by powers of two.
pub fn expm_taylor(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = linalg::norm1(a.as_ref());
    let mut j = 0;
    while norm / 2f64.powi(j) > 0.25 {
        j += 1;
    }
    let scale = c(2f64.powi(-j), 0.0);
    let x = Mat::from_fn(n, n, |r, k| a[(r, k)] * scale);
    let mut term = linalg::identity(n);
    let mut sum = linalg::identity(n);
    for k in 1..40 {
        term = &term * &x;
        term = Mat::from_fn(n, n, |r, q| term[(r, q)] / k as f64);
        sum += &term;
    }
    for _ in 0..j {
        sum = &sum * &sum;
    }
    sum
}

/// Roots of `a μ² + b μ + c = 0`, ordered by real part (decaying root first).
pub fn quadratic_roots(a: c64, b: c64, cc: c64) -> (c64, c64) {
    let disc = (b * b - a * cc * 4.0).sqrt();
    let r1 = (-b + disc) / (a * 2.0);
    let r2 = (-b - disc) / (a * 2.0);
    if r1.re < r2.re {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// Per-mode data for a constant coefficient `[[a, b], [cc, d]]` in `n = 1`:
/// `u = e^{iξx} e^{μt}` with `a μ² + i(b+c)ξ μ - d ξ² = 0`, `Re μ < 0`.
pub struct ModeOde {
    pub mu: c64,
    /// `∂_ν u / u` at any height.
    pub conormal: c64,
    /// `Γ_ND` in V-coordinates: `p∥ / p⊥`.
    pub gamma_nd: c64,
}

pub fn mode_ode(a: c64, b: c64, cc: c64, d: c64, xi: f64) -> ModeOde {
    let (mu, _) = quadratic_roots(a, (b + cc) * c(0.0, xi), -d * xi * xi);
    let conormal = a * mu + b * c(0.0, xi);
    let gamma_nd = c(-xi.abs(), 0.0) / conormal;
    ModeOde { mu, conormal, gamma_nd }
}

/// Index of the integer wavevector `k` among the nonzero modes.
pub fn mode_index(g: &GridSpec, k: [i64; 2]) -> usize {
    g.flat_of(k) - 1
}

/// Unit V-coordinate vector.
pub fn unit(n: usize, i: usize) -> Vec<c64> {
    let mut v = vec![c(0.0, 0.0); n];
    v[i] = c(1.0, 0.0);
    v
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

pub fn max_abs_diff(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn rel_diff(a: &[c64], b: &[c64]) -> f64 {
    linalg::norm2(&linalg::vsub(a, b)) / linalg::norm2(b).max(1e-300)
}
