mod common;

use common::{c, mode_index, unit};
use dblab::boundary;
use dblab::coeff::{self, CoefficientField, FamilyKind, FamilyParams};
use dblab::linalg::{self, c64};
use dblab::operator::{self, SignMethod};
use dblab::oracle::{self, Lifting, OracleSolution, StripFactor, StripMesh};
use dblab::{corpus, grid, BoundaryField, GridSpec};

fn g1(n: usize) -> GridSpec {
    GridSpec::periodic(1, n).unwrap()
}

fn family(kind: FamilyKind, g: GridSpec, seed: u64) -> CoefficientField {
    coeff::make_family(kind, &FamilyParams::default(), g, seed).unwrap()
}

fn single_mode(g: GridSpec, k: [i64; 2], amp: c64) -> BoundaryField {
    let mut v = unit(g.mode_table().len(), mode_index(&g, k));
    v.iter_mut().for_each(|z| *z *= amp);
    grid::scalar_from_modes(g, &v)
}

fn mode_at(levels: &[c64], g: GridSpec, k: [i64; 2]) -> c64 {
    let f = BoundaryField::scalar(g, levels.to_vec()).unwrap();
    grid::modes_of(&f, 0)[mode_index(&g, k)]
}

fn spectral_gamma_nd(a: &CoefficientField, s: f64) -> linalg::CMat {
    let ut = operator::assemble_ut(&coeff::hat_transform(a).unwrap()).unwrap();
    let sign = operator::matrix_sign(&ut, SignMethod::Eigen).unwrap();
    boundary::gamma_nd(&boundary::sgn_blocks(&sign), s).unwrap().matrix
}

fn rel_weighted(g: &GridSpec, x: &linalg::CMat, y: &linalg::CMat) -> f64 {
    boundary::weighted_norm(g, &linalg::sub(x.as_ref(), y.as_ref()), -0.5) / boundary::weighted_norm(g, y, -0.5)
}

#[test]
fn mesh_requirements() {
    let g = g1(16);
    assert!(StripMesh::new(g, 31, 8.0 * g.period).is_err());
    assert!(StripMesh::new(g, 32, 3.0 * g.period).is_err());
    let m = StripMesh::default_for(g, 64).unwrap();
    assert_eq!(m.cells(), 64);
    assert!((m.t_max - 8.0 * g.period).abs() < 1e-12 && (m.nodes[64] - m.t_max).abs() < 1e-9);
    assert!(m.nodes.windows(2).all(|w| w[1] > w[0]));
    assert!(m.cell_length(0) < m.cell_length(63));
}

#[test]
fn truncated_poisson_neumann() {
    let g = g1(32);
    let k = 2.0;
    let amp = c(0.5, -0.25);
    let ell = single_mode(g, [2, 0], amp);
    let mut errs = Vec::new();
    for cells in [128, 256] {
        let mesh = StripMesh::default_for(g, cells).unwrap();
        let fac = StripFactor::new(&CoefficientField::identity(g), &mesh).unwrap();
        let sol = fac.solve_neumann(&ell).unwrap();
        let tm = mesh.t_max;
        // u = ℓ sinh(|ξ|(T - t)) / (|ξ| cosh(|ξ|T)), so u(0) = ℓ tanh(|ξ|T)/|ξ|.
        let want0 = amp * (k * tm).tanh() / k;
        let mut worst: f64 = 0.0;
        for (i, t) in mesh.nodes.iter().enumerate() {
            let want = amp * (k * (tm - t)).sinh() / (k * (k * tm).cosh());
            worst = worst.max((mode_at(&sol.levels[i], g, [2, 0]) - want).norm());
        }
        assert!((mode_at(&sol.levels[0], g, [2, 0]) - want0).norm() <= 1e-2 * want0.norm());
        errs.push(worst / want0.norm());
    }
    assert!(errs[0] <= 1e-2 && errs[0] / errs[1] >= 2.0, "{errs:?}");
}

#[test]
fn neumann_round_trip_and_energy_identity() {
    for (g, cells) in [(g1(16), 64), (GridSpec::periodic(2, 8).unwrap(), 32)] {
        for kind in [FamilyKind::SmoothTrig, FamilyKind::PiecewiseRandom] {
            let a = family(kind, g, 3);
            let mesh = StripMesh::default_for(g, cells).unwrap();
            let fac = StripFactor::new(&a, &mesh).unwrap();
            let ell = corpus::random_real_scalar(g, 4, 9);
            let sol = fac.solve_neumann(&ell).unwrap();
            let back = fac.extract_conormal(&sol);
            assert!(back.sub(&ell).unwrap().l2_norm() <= 1e-8 * ell.l2_norm(), "{kind:?}");
            let lhs = fac.form.form(&sol.levels, &sol.levels);
            let hn = g.cell_volume();
            let rhs: c64 = ell.to_physical().values.iter().zip(&sol.levels[0]).map(|(l, u)| l * u.conj() * hn).sum();
            assert!((lhs - rhs).norm() <= 1e-8 * rhs.norm());
            assert!(sol.energy(&fac.form) > 0.0);
        }
    }
}

#[test]
fn zero_data_and_constants() {
    let g = g1(16);
    let mesh = StripMesh::default_for(g, 32).unwrap();
    let fac = StripFactor::new(&family(FamilyKind::SmoothTrig, g, 1), &mesh).unwrap();
    let z = BoundaryField::zeros(g, 1);
    assert_eq!(fac.solve_neumann(&z).unwrap().max_abs(), 0.0);
    for lift in [Lifting::Hat, Lifting::Exponential] {
        assert_eq!(fac.solve_regularity(&z, lift).unwrap().max_abs(), 0.0);
    }
    let ones = OracleSolution { mesh: mesh.clone(), levels: vec![vec![c(1.0, 0.0); g.total()]; mesh.cells() + 1] };
    assert!(fac.extract_conormal(&ones).l2_norm() <= 1e-12);
    let f = BoundaryField::scalar_from_fn(g, |_| c(1.0, 0.0));
    assert!(fac.solve_neumann(&f).is_err());
}

#[test]
fn regularity_independent_of_lifting() {
    for (g, cells) in [(g1(32), 64), (GridSpec::periodic(2, 8).unwrap(), 32)] {
        let mesh = StripMesh::default_for(g, cells).unwrap();
        let fac = StripFactor::new(&family(FamilyKind::PiecewiseRandom, g, 4), &mesh).unwrap();
        let f = corpus::random_real_scalar(g, 5, 2);
        let v1 = fac.solve_regularity(&f, Lifting::Hat).unwrap();
        let v2 = fac.solve_regularity(&f, Lifting::Exponential).unwrap();
        assert!(v1.max_distance(&v2) <= 1e-8 * v1.max_abs());
        let f0 = f.to_physical().values;
        assert!(common::max_abs_diff(&v1.levels[0], &f0) == 0.0);
    }
}

#[test]
fn regularity_conormal_for_identity() {
    let g = g1(32);
    let mesh = StripMesh::default_for(g, 128).unwrap();
    let fac = StripFactor::new(&CoefficientField::identity(g), &mesh).unwrap();
    let amp = c(1.0, 0.5);
    let f = single_mode(g, [3, 0], amp);
    let v = fac.solve_regularity(&f, Lifting::Hat).unwrap();
    let ell = grid::modes_of(&fac.extract_conormal(&v), 0)[mode_index(&g, [3, 0])];
    // v = f sinh(|ξ|(T - t))/sinh(|ξ|T), ∂_ν v = -ℓ.
    let want = amp * 3.0 / (3.0 * mesh.t_max).tanh();
    assert!((ell - want).norm() <= 1e-2 * want.norm(), "{ell} vs {want}");
}

#[test]
fn variational_gamma_for_identity_and_diagonal() {
    let g = g1(16);
    let mesh = StripMesh::default_for(g, 128).unwrap();
    let id = StripFactor::new(&CoefficientField::identity(g), &mesh).unwrap().gamma_nd();
    let e = linalg::op_norm(linalg::sub(id.as_ref(), linalg::identity(id.nrows()).as_ref()).as_ref());
    assert!(e <= 1e-2, "{e}");
    let (a0, d0) = (2.0, 0.5);
    let a = CoefficientField::constant(g, &[c(a0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(d0, 0.0)]).unwrap();
    let gm = StripFactor::new(&a, &mesh).unwrap().gamma_nd();
    let t = g.mode_table();
    for k in 0..t.len() {
        let ode = common::mode_ode(c(a0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(d0, 0.0), t.xi[k][0]);
        assert!((gm[(k, k)] - ode.gamma_nd).norm() <= 1e-2 * ode.gamma_nd.norm());
        // ODE closed form: |Γ_ND| = 1/√(a₀d₀) per mode.
        assert!((ode.gamma_nd.norm() - 1.0 / (a0 * d0).sqrt()).abs() <= 1e-12);
    }
}

#[test]
fn variational_gamma_matches_spectral() {
    let g = g1(32);
    for (i, kind) in [FamilyKind::SmoothTrig, FamilyKind::LowerTriangularRandom, FamilyKind::BlockDiagonalRandom].iter().enumerate() {
        let a = family(*kind, g, 7 + i as u64);
        let var = StripFactor::new(&a, &StripMesh::default_for(g, 128).unwrap()).unwrap().gamma_nd();
        let rel = rel_weighted(&g, &var, &spectral_gamma_nd(&a, -0.5));
        assert!(rel <= 5e-2, "{kind:?}: {rel}");
    }
}

#[test]
fn variational_gamma_converges_under_refinement() {
    let a_of = |g: GridSpec| family(FamilyKind::SmoothTrig, g, 2);
    let errs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let g = g1(n);
            let a = a_of(g);
            let var = StripFactor::new(&a, &StripMesh::default_for(g, 4 * n).unwrap()).unwrap().gamma_nd();
            rel_weighted(&g, &var, &spectral_gamma_nd(&a, -0.5))
        })
        .collect();
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.0, "{errs:?}");
    }
}

#[test]
fn truncation_height_is_subdominant() {
    let g = g1(16);
    let a = family(FamilyKind::SmoothTrig, g, 5);
    let short = StripFactor::new(&a, &StripMesh::new(g, 128, 8.0 * g.period).unwrap()).unwrap().gamma_nd();
    let tall = StripFactor::new(&a, &StripMesh::graded(g, 136, 16.0 * g.period, StripMesh::new(g, 128, 8.0 * g.period).unwrap().cell_length(0))).unwrap().gamma_nd();
    assert!(rel_weighted(&g, &short, &tall) <= 1e-2);
}

#[test]
fn uniqueness_probe_controls() {
    let g = g1(16);
    let id = oracle::uniqueness_probe(&CoefficientField::identity(g), 8, g.period).unwrap();
    assert!(id.passed && id.kernel_dim == 1);
    assert!((id.coercivity - 1.0).abs() <= 1e-8);
    for seed in 0..3 {
        let r = oracle::uniqueness_probe(&family(FamilyKind::PiecewiseRandom, g, seed), 8, g.period).unwrap();
        assert!(r.passed && r.kernel_dim == 1);
    }
    let bad = CoefficientField::new_unchecked(
        g,
        (0..g.total()).flat_map(|_| [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]).collect(),
    )
    .unwrap();
    assert!(bad.lambda < 0.0);
    let r = oracle::uniqueness_probe(&bad, 8, g.period).unwrap();
    assert!(!r.passed && r.coercivity < 0.0);
}

#[test]
fn discrete_coercivity_tracks_pointwise_bound() {
    let g = g1(16);
    for seed in 0..3 {
        let a = family(FamilyKind::SmoothTrig, g, seed);
        let r = oracle::uniqueness_probe(&a, 8, g.period).unwrap();
        let lam = coeff::accretivity_bound(&a).unwrap();
        assert!(r.coercivity >= lam * (1.0 - 1e-9) && r.coercivity <= 1.2 * lam, "{} vs {lam}", r.coercivity);
    }
}

#[test]
fn mgamma_invariance_of_regularity_solutions() {
    let g = GridSpec::periodic(2, 16).unwrap();
    let mesh = StripMesh::default_for(g, 64).unwrap();
    let m = [c(1.3, 0.0), c(0.2, 0.1), c(-0.1, 0.0), c(0.1, 0.0), c(1.1, 0.0), c(0.0, 0.2), c(0.3, 0.0), c(0.0, 0.0), c(0.9, 0.0)];
    let a = CoefficientField::constant(g, &m).unwrap();
    let psi = corpus::random_stream_function(g, 2, 3);
    let gamma = coeff::stream_gamma(&psi).unwrap().map_values(|z| c(z.re * 2.0, 0.0));
    let b = coeff::mgamma_perturb(&a, &gamma).unwrap();
    assert!(b.sup_distance(&a) > 0.1);
    let f = corpus::random_real_scalar(g, 3, 8);
    let va = StripFactor::new(&a, &mesh).unwrap().solve_regularity(&f, Lifting::Hat).unwrap();
    let vb = StripFactor::new(&b, &mesh).unwrap().solve_regularity(&f, Lifting::Hat).unwrap();
    assert!(va.max_distance(&vb) <= 1e-8 * va.max_abs(), "{}", va.max_distance(&vb) / va.max_abs());
}

#[test]
fn midpoint_gradients_of_poisson_solution() {
    let g = g1(16);
    let mesh = StripMesh::default_for(g, 64).unwrap();
    let fac = StripFactor::new(&CoefficientField::identity(g), &mesh).unwrap();
    let sol = fac.solve_neumann(&single_mode(g, [1, 0], c(1.0, 0.0))).unwrap();
    let grads = sol.midpoint_gradients();
    assert_eq!(grads.len(), 64);
    // ∂_t u at the first midpoint approximates -ℓ.
    let dt = mode_at(grads[0].component(0), g, [1, 0]);
    assert!((dt + c(1.0, 0.0)).norm() <= 2e-2, "{dt}");
}

#[test]
fn semigroup_solutions_match_oracle_gradients() {
    use dblab::solvers::{self, DbSystem, EnergyDatum};
    let g = g1(32);
    let mesh = StripMesh::default_for(g, 128).unwrap();
    let f = corpus::random_real_scalar(g, 4, 12);
    let minus_f = f.map_values(|z| -z);
    // Poisson, L² Neumann.
    let id = CoefficientField::identity(g);
    let h = solvers::solve_neumann_l2(&DbSystem::new(&id).unwrap(), &f, false).unwrap();
    let sol = StripFactor::new(&id, &mesh).unwrap().solve_neumann(&minus_f).unwrap();
    assert!(oracle::gradient_discrepancy(&h, &sol).unwrap() <= 5e-2);
    // Non-triangular coefficients, energy solutions of both kinds.
    let a = family(FamilyKind::SmoothTrig, g, 6);
    let sys = DbSystem::new(&a).unwrap();
    let fac = StripFactor::new(&a, &mesh).unwrap();
    let hn = solvers::solve_energy(&sys, &EnergyDatum::Neumann(f.clone())).unwrap();
    let en = oracle::gradient_discrepancy(&hn, &fac.solve_neumann(&minus_f).unwrap()).unwrap();
    let hd = solvers::solve_energy(&sys, &EnergyDatum::Dirichlet(f.clone())).unwrap();
    let ed = oracle::gradient_discrepancy(&hd, &fac.solve_regularity(&f, Lifting::Hat).unwrap()).unwrap();
    assert!(en <= 5e-2 && ed <= 5e-2, "{en} {ed}");
}
