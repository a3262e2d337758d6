//! Variational (Lax–Milgram) reference solver on the truncated strip
//! `[0, T_max] × 𝕋ⁿ`.
//!
//! Trial and test functions are P1 in `t` on a geometrically graded mesh and
//! nodal trigonometric (Fourier collocation) in `x`. The form
//! `∬ A∇u·∇φ̄` is integrated exactly in `t` and by the grid rule in `x`,
//! giving a block tridiagonal system (one `N^n × N^n` block per `t` node) that is
//! solved by block elimination from the top. Functions vanish at `t = T_max`.

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::{self, BoundaryField, GridSpec};
use crate::linalg::{self, c64, CMat};
use crate::solvers::{self, SolutionHandle};
use faer::Mat;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// Truncated strip discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct StripMesh {
    pub grid: GridSpec,
    pub t_max: f64,
    /// Node heights `0 = t_0 < … < t_M = T_max`.
    pub nodes: Vec<f64>,
}

impl StripMesh {
    /// Graded mesh with `cells` cells and first cell resolving the highest frequency.
    pub fn new(grid: GridSpec, cells: usize, t_max: f64) -> Result<Self> {
        grid.validate()?;
        if cells < 2 * grid.points {
            return Err(Error::InvalidParameter(format!("need at least 2N = {} cells, got {cells}", 2 * grid.points)));
        }
        if !(t_max >= 4.0 * grid.period) {
            return Err(Error::InvalidParameter(format!("T_max = {t_max} must be at least 4L")));
        }
        let xi_max = std::f64::consts::PI / grid.spacing() * (grid.dim as f64).sqrt();
        let h0 = 8.0 / (xi_max * cells as f64);
        Ok(Self::graded(grid, cells, t_max, h0))
    }

    /// Default truncation `T_max = 8L`.
    pub fn default_for(grid: GridSpec, cells: usize) -> Result<Self> {
        Self::new(grid, cells, 8.0 * grid.period)
    }

    /// Geometric mesh with first cell `h0`; uniform if `h0 ≥ T_max / cells`.
    pub fn graded(grid: GridSpec, cells: usize, t_max: f64, h0: f64) -> Self {
        let uniform = t_max / cells as f64;
        if h0 >= uniform {
            return Self::uniform(grid, cells, t_max);
        }
        let total = |r: f64| h0 * ((r.powi(cells as i32) - 1.0) / (r - 1.0));
        let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
        while total(hi) < t_max {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) < t_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let mut nodes = Vec::with_capacity(cells + 1);
        let mut t = 0.0;
        nodes.push(0.0);
        for i in 0..cells {
            t += h0 * r.powi(i as i32);
            nodes.push(t);
        }
        let scale = t_max / t;
        nodes.iter_mut().for_each(|x| *x *= scale);
        nodes[cells] = t_max;
        StripMesh { grid, t_max, nodes }
    }

    pub fn uniform(grid: GridSpec, cells: usize, t_max: f64) -> Self {
        let nodes = (0..=cells).map(|i| t_max * i as f64 / cells as f64).collect();
        StripMesh { grid, t_max, nodes }
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn cell_length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Spectral differentiation matrix `∂_j` on nodal values.
pub fn diff_matrix(grid: &GridSpec, axis: usize) -> CMat {
    let p = grid.total();
    let mut cols = Mat::zeros(p, p);
    let mut e = vec![ZERO; p];
    for q in 0..p {
        e.iter_mut().for_each(|z| *z = ZERO);
        e[q] = c64::new(1.0, 0.0);
        let mut c = grid::mean_coefficients(grid, &e);
        for (k, z) in c.iter_mut().enumerate() {
            *z *= c64::new(0.0, grid.wavevector(k)[axis]);
        }
        transform_inverse(grid, &mut c);
        for r in 0..p {
            cols[(r, q)] = c[r];
        }
    }
    cols
}

fn transform_inverse(grid: &GridSpec, c: &mut [c64]) {
    // `from_unitary` divides by L^{n/2}; undo that for mean-normalized input.
    grid::from_unitary(grid, c);
    let s = grid.unitary_scale();
    c.iter_mut().for_each(|z| *z *= s);
}

/// The `x`-parts of the discrete form.
#[derive(Clone, Debug)]
pub struct DiscreteForm {
    pub mesh: StripMesh,
    /// `h^n diag(a)`.
    pub k_tt: CMat,
    /// `Σ_j h^n diag(A_{0j}) D_j`.
    pub k_tx: CMat,
    /// `Σ_j D_j* h^n diag(A_{j0})`.
    pub k_xt: CMat,
    /// `Σ_{jk} D_j* h^n diag(A_{jk}) D_k`.
    pub k_xx: CMat,
}

impl DiscreteForm {
    pub fn new(a: &CoefficientField, mesh: &StripMesh) -> Result<Self> {
        if a.grid != mesh.grid {
            return Err(Error::InvalidParameter("coefficient and mesh grids differ".into()));
        }
        let g = a.grid;
        let p = g.total();
        let n = g.dim;
        let hn = g.cell_volume();
        let d: Vec<CMat> = (0..n).map(|j| diff_matrix(&g, j)).collect();
        let dstar: Vec<CMat> = d.iter().map(|m| linalg::adjoint(m.as_ref())).collect();
        let diag = |r: usize, c: usize| -> Vec<c64> { (0..p).map(|q| a.entry(q, r, c) * hn).collect() };
        let scale_rows = |w: &[c64], m: &CMat| Mat::from_fn(p, p, |i, j| w[i] * m[(i, j)]);
        let scale_cols = |m: &CMat, w: &[c64]| Mat::from_fn(p, p, |i, j| m[(i, j)] * w[j]);
        let a00 = diag(0, 0);
        let k_tt = Mat::from_fn(p, p, |i, j| if i == j { a00[i] } else { ZERO });
        let mut k_tx = Mat::zeros(p, p);
        let mut k_xt = Mat::zeros(p, p);
        let mut k_xx = Mat::zeros(p, p);
        for j in 0..n {
            k_tx += scale_rows(&diag(0, 1 + j), &d[j]);
            k_xt += scale_cols(&dstar[j], &diag(1 + j, 0));
            for k in 0..n {
                let inner = scale_rows(&diag(1 + j, 1 + k), &d[k]);
                k_xx += &dstar[j] * &inner;
            }
        }
        Ok(DiscreteForm { mesh: mesh.clone(), k_tt, k_tx, k_xt, k_xx })
    }

    pub fn points(&self) -> usize {
        self.k_tt.nrows()
    }

    /// Element block for test hat `alpha` and trial hat `beta` (0 = lower node).
    pub fn element_block(&self, h: f64, alpha: usize, beta: usize) -> CMat {
        let sg = |x: usize| if x == 0 { -1.0 } else { 1.0 };
        let (sa, sb) = (sg(alpha), sg(beta));
        let mass = if alpha == beta { h / 3.0 } else { h / 6.0 };
        let p = self.points();
        Mat::from_fn(p, p, |i, j| {
            self.k_tt[(i, j)] * (sa * sb / h)
                + self.k_tx[(i, j)] * (sa / 2.0)
                + self.k_xt[(i, j)] * (sb / 2.0)
                + self.k_xx[(i, j)] * mass
        })
    }

    /// Diagonal block of node `i` (`i < M`).
    pub fn diag_block(&self, i: usize) -> CMat {
        let mut d = self.element_block(self.mesh.cell_length(i), 0, 0);
        if i > 0 {
            d += self.element_block(self.mesh.cell_length(i - 1), 1, 1);
        }
        d
    }

    /// Coupling of test node `i` to trial node `i + 1`.
    pub fn upper_block(&self, i: usize) -> CMat {
        self.element_block(self.mesh.cell_length(i), 0, 1)
    }

    /// Coupling of test node `i` to trial node `i - 1`.
    pub fn lower_block(&self, i: usize) -> CMat {
        self.element_block(self.mesh.cell_length(i - 1), 1, 0)
    }

    /// `(K v)_i` for nodal values `v` (node `M` included, assumed zero).
    pub fn apply_row(&self, v: &[Vec<c64>], i: usize) -> Vec<c64> {
        let mut out = linalg::matvec(self.diag_block(i).as_ref(), &v[i]);
        if i + 1 < v.len() {
            let up = linalg::matvec(self.upper_block(i).as_ref(), &v[i + 1]);
            out.iter_mut().zip(up).for_each(|(a, b)| *a += b);
        }
        if i > 0 {
            let lo = linalg::matvec(self.lower_block(i).as_ref(), &v[i - 1]);
            out.iter_mut().zip(lo).for_each(|(a, b)| *a += b);
        }
        out
    }

    /// `a(u, φ) = ∬ A∇u·∇φ̄` for nodal functions.
    pub fn form(&self, u: &[Vec<c64>], phi: &[Vec<c64>]) -> c64 {
        (0..self.mesh.cells()).map(|i| linalg::dot(&phi[i], &self.apply_row(u, i))).sum()
    }
}

/// Block elimination of the strip system from the top (`t = T_max`) down.
pub struct StripFactor {
    pub form: DiscreteForm,
    /// `Σ_i⁻¹`, the inverse Schur complement of rows `≥ i`.
    sigma_inv: Vec<CMat>,
    /// `X_i = -Σ_i⁻¹ L_i`, so that `u_i = X_i u_{i-1} + y_i`.
    x: Vec<CMat>,
}

/// Nodal values `u(t_i, x_p)` for `i = 0..=M` (the last level is zero).
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub mesh: StripMesh,
    pub levels: Vec<Vec<c64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lifting {
    /// `w = f` at `t = 0`, zero at all other nodes.
    Hat,
    /// `w = f (e^{-t/τ} - e^{-T/τ}) / (1 - e^{-T/τ})` with `τ = L / 2π`.
    Exponential,
}

impl StripFactor {
    pub fn new(a: &CoefficientField, mesh: &StripMesh) -> Result<Self> {
        let form = DiscreteForm::new(a, mesh)?;
        let m = mesh.cells();
        let p = form.points();
        let mut sigma_inv = vec![Mat::zeros(0, 0); m];
        let mut x = vec![Mat::zeros(0, 0); m];
        let mut below: Option<CMat> = None;
        for i in (0..m).rev() {
            let mut sigma = form.diag_block(i);
            if let Some(xn) = &below {
                sigma += &form.upper_block(i) * xn;
            }
            let inv = linalg::inverse(sigma.as_ref()).map_err(|e| Error::Solver(format!("level {i}: {e}")))?;
            if i > 0 {
                let xi = linalg::scaled((&inv * &form.lower_block(i)).as_ref(), c64::new(-1.0, 0.0));
                below = Some(xi.clone());
                x[i] = xi;
            }
            sigma_inv[i] = inv;
        }
        debug_assert_eq!(sigma_inv[0].nrows(), p);
        Ok(StripFactor { form, sigma_inv, x })
    }

    pub fn mesh(&self) -> &StripMesh {
        &self.form.mesh
    }

    fn grid(&self) -> GridSpec {
        self.form.mesh.grid
    }

    /// Solves `K u = r` for right-hand sides `r_i` (`i < M`) with `u_0 = u0` fixed
    /// when given (row 0 is then dropped).
    fn solve_rows(&self, r: &[Vec<c64>], u0: Option<&[c64]>) -> Vec<Vec<c64>> {
        let m = self.mesh().cells();
        let p = self.form.points();
        let first = if u0.is_some() { 1 } else { 0 };
        let mut y = vec![vec![ZERO; p]; m + 1];
        for i in (first..m).rev() {
            let mut rhs = r[i].clone();
            if i + 1 < m {
                let up = linalg::matvec(self.form.upper_block(i).as_ref(), &y[i + 1]);
                rhs.iter_mut().zip(up).for_each(|(a, b)| *a -= b);
            }
            y[i] = linalg::matvec(self.sigma_inv[i].as_ref(), &rhs);
        }
        let mut u = vec![vec![ZERO; p]; m + 1];
        u[0] = match u0 {
            Some(v) => v.to_vec(),
            None => y[0].clone(),
        };
        for i in 1..m {
            let mut v = linalg::matvec(self.x[i].as_ref(), &u[i - 1]);
            v.iter_mut().zip(&y[i]).for_each(|(a, b)| *a += b);
            u[i] = v;
        }
        u
    }

    /// Neumann problem `a(u, φ) = ⟨ℓ, φ(0)⟩`, i.e. `∂_ν u = -ℓ` at `t = 0`.
    pub fn solve_neumann(&self, ell: &BoundaryField) -> Result<OracleSolution> {
        let l = self.nodal(ell)?;
        if l.iter().sum::<c64>().norm() > 1e-10 * linalg::norm2(&l).max(1e-300) * (l.len() as f64).sqrt() {
            return Err(Error::InvalidParameter("Neumann data must have zero mean".into()));
        }
        let p = l.len();
        let hn = self.grid().cell_volume();
        let mut r = vec![vec![ZERO; p]; self.mesh().cells()];
        r[0] = l.iter().map(|z| z * hn).collect();
        Ok(OracleSolution { mesh: self.mesh().clone(), levels: self.solve_rows(&r, None) })
    }

    /// Regularity problem `v(0) = f`, solved as `v = u + w` with `u` vanishing at
    /// both ends and `a(u, φ) = -a(w, φ)`.
    pub fn solve_regularity(&self, f: &BoundaryField, lifting: Lifting) -> Result<OracleSolution> {
        let fv = self.nodal(f)?;
        let m = self.mesh().cells();
        let p = fv.len();
        let w: Vec<Vec<c64>> = match lifting {
            Lifting::Hat => (0..=m).map(|i| if i == 0 { fv.clone() } else { vec![ZERO; p] }).collect(),
            Lifting::Exponential => {
                let tau = self.grid().period / (2.0 * std::f64::consts::PI);
                let tm = self.mesh().t_max;
                let end = (-tm / tau).exp();
                self.mesh()
                    .nodes
                    .iter()
                    .map(|&t| {
                        let c = ((-t / tau).exp() - end) / (1.0 - end);
                        fv.iter().map(|z| z * c).collect()
                    })
                    .collect()
            }
        };
        let r: Vec<Vec<c64>> = (0..m).map(|i| self.form.apply_row(&w, i).iter().map(|z| -z).collect()).collect();
        let zero = vec![ZERO; p];
        let u = self.solve_rows(&r, Some(&zero));
        let levels = u.iter().zip(&w).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        Ok(OracleSolution { mesh: self.mesh().clone(), levels })
    }

    fn nodal(&self, f: &BoundaryField) -> Result<Vec<c64>> {
        if f.grid != self.grid() || f.components != 1 {
            return Err(Error::InvalidParameter("boundary data must be a scalar field on the mesh grid".into()));
        }
        Ok(f.to_physical().values)
    }

    /// `ℓ` with `⟨ℓ, φ⟩ = a(u, φ)` for the boundary hats `φ`.
    pub fn extract_conormal(&self, sol: &OracleSolution) -> BoundaryField {
        let hn = self.grid().cell_volume();
        let row = self.form.apply_row(&sol.levels, 0);
        BoundaryField::scalar(self.grid(), row.iter().map(|z| z / hn).collect()).expect("finite conormal")
    }

    /// Variational `Γ_ND` between V-coordinate slots: Neumann datum `f = ∂_ν u`
    /// (⊥ slot) to `p∥` with `∇_x u(0) = -ℛ p∥`.
    pub fn gamma_nd(&self) -> CMat {
        let g = self.grid();
        let table = g.mode_table();
        let m = table.len();
        let p = g.total();
        let hn = g.cell_volume();
        let sc = g.unitary_scale();
        // Nodal values of unit modes (`ℓ = -f`) and the inverse map back to modes.
        let synth = Mat::from_fn(p, m, |q, k| {
            let xi = table.xi[k];
            let x = g.point(q);
            c64::new(0.0, xi[0] * x[0] + xi[1] * x[1]).exp() * (-hn / sc)
        });
        let u0 = &self.sigma_inv[0] * &synth;
        let analysis = Mat::from_fn(m, p, |k, q| {
            let xi = table.xi[k];
            let x = g.point(q);
            c64::new(0.0, -(xi[0] * x[0] + xi[1] * x[1])).exp() * (sc / p as f64)
        });
        let modes = &analysis * &u0;
        Mat::from_fn(m, m, |i, j| modes[(i, j)] * (-table.abs[i]))
    }
}

impl OracleSolution {
    /// `Re a(u, u)`.
    pub fn energy(&self, form: &DiscreteForm) -> f64 {
        form.form(&self.levels, &self.levels).re
    }

    /// `(∂_t u, ∇_x u)` at cell midpoints, physical and component-major per cell.
    pub fn midpoint_gradients(&self) -> Vec<BoundaryField> {
        let g = self.mesh.grid;
        let p = g.total();
        let d: Vec<CMat> = (0..g.dim).map(|j| diff_matrix(&g, j)).collect();
        (0..self.mesh.cells())
            .map(|e| {
                let h = self.mesh.cell_length(e);
                let (a, b) = (&self.levels[e], &self.levels[e + 1]);
                let mut values: Vec<c64> = a.iter().zip(b).map(|(x, y)| (y - x) / h).collect();
                let mid: Vec<c64> = a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect();
                for dj in &d {
                    values.extend(linalg::matvec(dj.as_ref(), &mid));
                }
                debug_assert_eq!(values.len(), (1 + g.dim) * p);
                BoundaryField::new(g, 1 + g.dim, values, grid::Representation::Physical).expect("finite gradient")
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.levels.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_distance(&self, other: &OracleSolution) -> f64 {
        self.levels
            .iter()
            .flatten()
            .zip(other.levels.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Relative strip-L² distance between `∇_{t,x} u` of a semigroup solution and an
/// oracle solution, sampled at the oracle's cell midpoints (midpoint rule in `t`).
pub fn gradient_discrepancy(h: &SolutionHandle, sol: &OracleSolution) -> Result<f64> {
    if h.grid != sol.mesh.grid {
        return Err(Error::InvalidParameter("solution and oracle live on different grids".into()));
    }
    let field = solvers::evaluate(h, &sol.mesh.midpoints())?;
    let (mut num, mut den) = (0.0, 0.0);
    for (e, og) in sol.midpoint_gradients().iter().enumerate() {
        let w = sol.mesh.cell_length(e);
        let sg = field.gradient_field(e);
        num += w * sg.sub(og)?.l2_norm().powi(2);
        den += w * sg.l2_norm().powi(2);
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else if num > 0.0 { f64::INFINITY } else { 0.0 })
}

/// Outcome of the uniqueness probe.
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport {
    /// Number of singular values below `1e-9 σ_max`.
    pub kernel_dim: usize,
    pub smallest_singular: Vec<f64>,
    /// `min Re a(u,u) / a_I(u,u)` over non-constant `u`.
    pub coercivity: f64,
    pub passed: bool,
}

/// Stiffness matrix of the doubled strip `[-T, T] × 𝕋ⁿ` with natural boundary
/// conditions at both ends (uniform mesh, `2 levels` cells). Constants are the
/// only kernel of an accretive form.
pub fn uniqueness_probe(a: &CoefficientField, levels: usize, half_height: f64) -> Result<UniquenessReport> {
    let g = a.grid;
    let p = g.total();
    let cells = 2 * levels;
    let n = (cells + 1) * p;
    if n > 4096 {
        return Err(Error::InvalidParameter(format!("probe system of size {n} is too large")));
    }
    let mesh = StripMesh::uniform(g, cells, 2.0 * half_height);
    let assemble = |form: &DiscreteForm| -> CMat {
        let mut k = Mat::zeros(n, n);
        for e in 0..cells {
            let h = mesh.cell_length(e);
            for (al, bl) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let blk = form.element_block(h, al, bl);
                let (r0, c0) = ((e + al) * p, (e + bl) * p);
                for i in 0..p {
                    for j in 0..p {
                        k[(r0 + i, c0 + j)] += blk[(i, j)];
                    }
                }
            }
        }
        k
    };
    let k = assemble(&DiscreteForm::new(a, &mesh)?);
    let sv = linalg::singular_values(k.as_ref())?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let mut sorted = sv.clone();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let kernel_dim = sorted.iter().filter(|&&s| s < 1e-9 * smax).count();
    let ki = assemble(&DiscreteForm::new(&CoefficientField::identity(g), &mesh)?);
    let coercivity = relative_coercivity(&k, &ki)?;
    Ok(UniquenessReport {
        kernel_dim,
        smallest_singular: sorted.into_iter().take(3).collect(),
        coercivity,
        passed: kernel_dim == 1 && coercivity > 0.0,
    })
}

/// `min Re(u*Ku) / (u*K_I u)` over `u` orthogonal to the kernel of `K_I`.
pub fn relative_coercivity(k: &CMat, ki: &CMat) -> Result<f64> {
    let e = ki
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigensolve failed: {e:?}")))?;
    let mu: Vec<f64> = e.S().column_vector().iter().map(|z| z.re).collect();
    let top = mu.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > 1e-10 * top).collect();
    let v = e.U();
    let vr = Mat::from_fn(v.nrows(), keep.len(), |i, j| v[(i, keep[j])] / mu[keep[j]].sqrt());
    let herm = Mat::from_fn(k.nrows(), k.ncols(), |i, j| (k[(i, j)] + k[(j, i)].conj()) * 0.5);
    let c = linalg::adjoint(vr.as_ref()) * (&herm * &vr);
    let ev = linalg::hermitian_eigenvalues(c.as_ref())?;
    Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min))
}
