//! Dense complex linear algebra helpers on top of `faer`.

use crate::error::{Error, Result};
use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef, Side};

pub use faer::c64;

/// Dense complex matrix.
pub type CMat = Mat<c64>;

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn zeros(r: usize, c: usize) -> CMat {
    Mat::zeros(r, c)
}

pub fn scaled(m: MatRef<'_, c64>, s: c64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// `alpha * a + beta * b`.
pub fn combine(alpha: c64, a: MatRef<'_, c64>, beta: c64, b: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| alpha * a[(i, j)] + beta * b[(i, j)])
}

pub fn sub(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    combine(c64::new(1.0, 0.0), a, c64::new(-1.0, 0.0), b)
}

pub fn adjoint(m: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

/// Returns `diag(r) · m · diag(c)`.
pub fn scale_rows_cols(m: MatRef<'_, c64>, r: &[f64], c: &[f64]) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (r[i] * c[j]))
}

/// Copy of the block starting at `(r0, c0)` with the given shape.
pub fn block(m: MatRef<'_, c64>, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
    m.submatrix(r0, c0, nr, nc).to_owned()
}

pub fn from_blocks(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let (p, q) = (a.nrows(), a.ncols());
    Mat::from_fn(p + c.nrows(), q + b.ncols(), |i, j| match (i < p, j < q) {
        (true, true) => a[(i, j)],
        (true, false) => b[(i, j - q)],
        (false, true) => c[(i - p, j)],
        (false, false) => d[(i - p, j - q)],
    })
}

pub fn all_finite(m: MatRef<'_, c64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

pub fn singular_values(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    if !all_finite(m) {
        return Err(Error::NonFinite("matrix"));
    }
    m.singular_values()
        .map_err(|e| Error::Linalg(format!("singular value decomposition failed: {e:?}")))
}

/// Spectral (largest singular value) norm.
pub fn op_norm(m: MatRef<'_, c64>) -> f64 {
    match singular_values(m) {
        Ok(s) => s.iter().cloned().fold(0.0, f64::max),
        Err(_) => f64::NAN,
    }
}

pub fn min_singular(m: MatRef<'_, c64>) -> f64 {
    match singular_values(m) {
        Ok(s) => s.iter().cloned().fold(f64::INFINITY, f64::min),
        Err(_) => f64::NAN,
    }
}

pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

/// Max absolute column sum.
pub fn norm1(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn inverse(m: MatRef<'_, c64>) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::Linalg("inverse of a non-square matrix".into()));
    }
    if !all_finite(m) {
        return Err(Error::NonFinite("matrix"));
    }
    let inv = m.partial_piv_lu().inverse();
    if !all_finite(inv.as_ref()) {
        return Err(Error::Linalg("matrix is numerically singular".into()));
    }
    Ok(inv)
}

/// Solves `m x = rhs`.
pub fn solve(m: MatRef<'_, c64>, rhs: MatRef<'_, c64>) -> Result<CMat> {
    let x = m.partial_piv_lu().solve(rhs);
    if !all_finite(x.as_ref()) {
        return Err(Error::Linalg("matrix is numerically singular".into()));
    }
    Ok(x)
}

/// Inverse together with `log |det m|`.
pub fn inverse_logdet(m: MatRef<'_, c64>) -> Result<(CMat, f64)> {
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let logdet = (0..u.nrows()).map(|i| u[(i, i)].norm().ln()).sum::<f64>();
    let inv = lu.inverse();
    if !all_finite(inv.as_ref()) || !logdet.is_finite() {
        return Err(Error::Linalg("matrix is numerically singular".into()));
    }
    Ok((inv, logdet))
}

pub fn matvec(m: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    assert_eq!(m.ncols(), v.len());
    let mut out = vec![c64::new(0.0, 0.0); m.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        if vj == c64::new(0.0, 0.0) {
            continue;
        }
        let col = m.col(j);
        for (o, x) in out.iter_mut().zip(col.iter()) {
            *o += *x * vj;
        }
    }
    out
}

pub fn col_vec(v: &[c64]) -> CMat {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn vec_of_col(m: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    m.col(j).iter().cloned().collect()
}

pub fn norm2(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vsub(a: &[c64], b: &[c64]) -> Vec<c64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Smallest eigenvalue of the Hermitian part `(m + m*)/2`.
pub fn hermitian_part_min_eig(m: MatRef<'_, c64>) -> Result<f64> {
    let h = Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let ev = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigensolve failed: {e:?}")))?;
    Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min))
}

pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigensolve failed: {e:?}")))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: MatRef<'_, c64>) -> Result<CMat> {
    let n = a.nrows();
    let theta13 = 5.371920351148152;
    let nrm = norm1(a);
    let s = if nrm > theta13 { (nrm / theta13).log2().ceil() as i32 } else { 0 };
    let a = scaled(a, c64::new(0.5f64.powi(s), 0.0));
    let b = |k: usize| c64::new(PADE13[k], 0.0);
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let poly = |c6: c64, c4: c64, c2: c64| -> CMat {
        Mat::from_fn(n, n, |i, j| c6 * a6[(i, j)] + c4 * a4[(i, j)] + c2 * a2[(i, j)])
    };
    let u_inner = &a6 * poly(b(13), b(11), b(9));
    let u_inner = Mat::from_fn(n, n, |i, j| {
        u_inner[(i, j)] + b(7) * a6[(i, j)] + b(5) * a4[(i, j)] + b(3) * a2[(i, j)] + b(1) * id[(i, j)]
    });
    let u = &a * &u_inner;
    let v = &a6 * poly(b(12), b(10), b(8));
    let v = Mat::from_fn(n, n, |i, j| {
        v[(i, j)] + b(6) * a6[(i, j)] + b(4) * a4[(i, j)] + b(2) * a2[(i, j)] + b(0) * id[(i, j)]
    });
    let p = Mat::from_fn(n, n, |i, j| v[(i, j)] + u[(i, j)]);
    let q = Mat::from_fn(n, n, |i, j| v[(i, j)] - u[(i, j)]);
    let mut r = solve(q.as_ref(), p.as_ref())?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// `e^{-t a}v` at every `t` in `ts` (any order, all `t ≥ 0`).
///
/// One Padé exponential at `τ = 1/‖a‖₁` and its repeated squares cover the
/// integer multiples of `τ` in each step; the remainder uses a Taylor series on
/// the vector.
pub fn expm_trajectory(a: MatRef<'_, c64>, ts: &[f64], v: &[c64]) -> Result<Vec<Vec<c64>>> {
    let nrm = norm1(a);
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&i, &j| ts[i].total_cmp(&ts[j]));
    let mut out = vec![Vec::new(); ts.len()];
    if nrm == 0.0 {
        out.iter_mut().for_each(|o| *o = v.to_vec());
        return Ok(out);
    }
    let tau = 1.0 / nrm;
    let mut powers = vec![expm(scaled(a, c64::new(-tau, 0.0)).as_ref())?];
    let (mut cur, mut t_cur) = (v.to_vec(), 0.0);
    for i in order {
        let dt = ts[i] - t_cur;
        let q = (dt / tau).floor();
        cur = taylor_step(a, dt - q * tau, cur);
        let mut q = q as u64;
        let mut j = 0;
        while q > 0 {
            if j == powers.len() {
                let last = &powers[j - 1];
                powers.push(last * last);
            }
            if q & 1 == 1 {
                cur = matvec(powers[j].as_ref(), &cur);
            }
            q >>= 1;
            j += 1;
        }
        t_cur = ts[i];
        out[i] = cur.clone();
    }
    Ok(out)
}

/// `e^{-r a}w` by Taylor series, for `r‖a‖₁ ≤ 1`.
fn taylor_step(a: MatRef<'_, c64>, r: f64, w: Vec<c64>) -> Vec<c64> {
    if r <= 0.0 {
        return w;
    }
    let mut sum = w.clone();
    let mut term = w;
    for k in 1..60 {
        term = matvec(a, &term);
        let c = c64::new(-r / k as f64, 0.0);
        term.iter_mut().for_each(|z| *z *= c);
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
        if norm2(&term) <= 1e-18 * norm2(&sum) {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { c64::new(i as f64 - 1.0, 0.5) } else { c64::new(0.0, 0.0) });
        let e = expm(a.as_ref()).unwrap();
        for i in 0..3 {
            let want = c64::new(i as f64 - 1.0, 0.5).exp();
            assert!((e[(i, i)] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn expm_nilpotent() {
        let mut a = zeros(2, 2);
        a[(0, 1)] = c64::new(30.0, 0.0);
        let e = expm(a.as_ref()).unwrap();
        assert!((e[(0, 1)] - c64::new(30.0, 0.0)).norm() < 1e-10);
        assert!((e[(0, 0)] - c64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn op_norm_of_diag() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { c64::new(0.0, (i + 1) as f64) } else { c64::new(0.0, 0.0) });
        assert!((op_norm(a.as_ref()) - 3.0).abs() < 1e-13);
        assert!((min_singular(a.as_ref()) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn trajectory_matches_direct_exponential() {
        // Non-normal upper-triangular matrix with well-separated positive spectrum.
        let n = 12;
        let a = Mat::from_fn(n, n, |i, j| match j.cmp(&i) {
            std::cmp::Ordering::Equal => c64::new(0.5 + i as f64, 0.3),
            std::cmp::Ordering::Greater => c64::new(((i * 5 + j * 3) % 7) as f64 - 3.0, 1.0),
            _ => c64::new(0.0, 0.0),
        });
        let v: Vec<c64> = (0..n).map(|i| c64::new(1.0 / (1.0 + i as f64), (i % 3) as f64)).collect();
        let ts = [3.7, 0.0, 1e-4, 0.05, 1.0, 0.6, 12.0];
        let got = expm_trajectory(a.as_ref(), &ts, &v).unwrap();
        for (t, g) in ts.iter().zip(&got) {
            let e = expm(scaled(a.as_ref(), c64::new(-t, 0.0)).as_ref()).unwrap();
            let want = matvec(e.as_ref(), &v);
            assert!(norm2(&vsub(g, &want)) <= 1e-11 * norm2(&v).max(norm2(&want)), "t = {t}");
        }
    }
}
