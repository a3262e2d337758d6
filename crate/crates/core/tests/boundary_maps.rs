mod common;

use common::c;
use dblab::boundary::{self, BoundaryMap};
use dblab::coeff::{self, CoefficientField, FamilyKind, FamilyParams};
use dblab::linalg::{self, c64, CMat};
use dblab::operator::{self, OperatorMatrix, SignMethod};
use dblab::{corpus, grid, BoundaryField, GridSpec, Representation};
use faer::Mat;

fn g1(n: usize) -> GridSpec {
    GridSpec::periodic(1, n).unwrap()
}

fn sign_of(a: &CoefficientField) -> OperatorMatrix {
    let ut = operator::assemble_ut(&coeff::hat_transform(a).unwrap()).unwrap();
    operator::matrix_sign(&ut, SignMethod::Eigen).unwrap()
}

fn family(kind: FamilyKind, g: GridSpec, seed: u64) -> CoefficientField {
    coeff::make_family(kind, &FamilyParams::default(), g, seed).unwrap()
}

fn dist(a: &CMat, b: &CMat) -> f64 {
    linalg::op_norm(linalg::sub(a.as_ref(), b.as_ref()).as_ref())
}

const ALL: [FamilyKind; 5] = [
    FamilyKind::SmoothTrig,
    FamilyKind::PiecewiseRandom,
    FamilyKind::LowerTriangularRandom,
    FamilyKind::UpperTriangularRandom,
    FamilyKind::BlockDiagonalRandom,
];

/// Tangential physical field `-ℛ p∥` of a V-coordinate ∥ slot.
fn tangential(g: GridSpec, par: &[c64]) -> BoundaryField {
    let mut v = vec![c(0.0, 0.0); par.len()];
    v.extend_from_slice(par);
    let f = grid::from_vcoords(g, &v);
    let t = g.total();
    BoundaryField::new(g, g.dim, f.values[t..].to_vec(), Representation::Frequency).unwrap()
}

#[test]
fn identity_blocks_and_maps() {
    for g in [g1(32), GridSpec::periodic(2, 8).unwrap()] {
        let sign = sign_of(&CoefficientField::identity(g));
        let b = boundary::sgn_blocks(&sign);
        assert!(linalg::op_norm(b.s11.as_ref()) <= 1e-10 && linalg::op_norm(b.s22.as_ref()) <= 1e-10);
        assert!(dist(&b.reassemble(), &sign.matrix) == 0.0);
        let nd = boundary::gamma_nd(&b, 0.0).unwrap();
        assert!(nd.factorization_mismatch <= 1e-10);
        let f = corpus::random_smooth_scalar(g, 3, 1);
        let fm = grid::modes_of(&f, 0);
        // Physically Γ_ND f = -ℛ f.
        let got = tangential(g, &nd.apply(&fm));
        let r = grid::riesz_apply(&f).unwrap().map_values(|z| -z);
        let want = BoundaryField::new(g, g.dim, r.to_frequency().values, Representation::Frequency).unwrap();
        assert!(got.sub(&want).unwrap().l2_norm() <= 1e-10 * want.l2_norm());
        // Γ⁻ f = +ℛ f.
        let minus = boundary::gamma_minus(&b, 0.0).unwrap();
        let got = tangential(g, &minus.apply(&fm));
        assert!(got.sub(&want.map_values(|z| -z)).unwrap().l2_norm() <= 1e-10 * want.l2_norm());
        // Γ_DN g = -ℛ* g for g = -ℛ f.
        let dn = boundary::gamma_dn(&b, 0.0).unwrap();
        let g_par = boundary::gamma_nd(&b, 0.0).unwrap().apply(&fm);
        let back = dn.apply(&g_par);
        let minus_radj = grid::riesz_adjoint(&want).unwrap().map_values(|z| -z);
        assert!(common::max_abs_diff(&back, &grid::modes_of(&minus_radj, 0)) <= 1e-10 * linalg::norm2(&fm));
    }
}

#[test]
fn involution_block_algebra() {
    let g = g1(32);
    for (i, kind) in ALL.iter().enumerate() {
        let b = boundary::sgn_blocks(&sign_of(&family(*kind, g, i as u64)));
        let lhs = &(&b.s11 * &b.s11) + &(&b.s12 * &b.s21);
        assert!(dist(&lhs, &linalg::identity(b.s11.nrows())) <= 1e-8);
    }
}

#[test]
fn inverse_relation_and_factorizations_at_minus_half() {
    let g = g1(32);
    for (i, kind) in ALL.iter().enumerate() {
        for seed in 0..2 {
            let b = boundary::sgn_blocks(&sign_of(&family(*kind, g, (10 * i + seed) as u64)));
            let nd = boundary::gamma_nd(&b, -0.5).unwrap();
            let dn = boundary::gamma_dn(&b, -0.5).unwrap();
            let minus = boundary::gamma_minus(&b, -0.5).unwrap();
            for map in [&nd, &dn, &minus] {
                assert!(map.factorization_mismatch <= 1e-6, "{kind:?}");
            }
            let id = linalg::identity(nd.matrix.nrows());
            let e1 = boundary::weighted_norm(&g, &linalg::sub((&dn.matrix * &nd.matrix).as_ref(), id.as_ref()), -0.5);
            let e2 = boundary::weighted_norm(&g, &linalg::sub((&nd.matrix * &dn.matrix).as_ref(), id.as_ref()), -0.5);
            assert!(e1 <= 1e-6 && e2 <= 1e-6, "{kind:?}: {e1:e} {e2:e}");
        }
    }
}

fn minus_defect(sign: &OperatorMatrix, v: &[c64], plus: bool) -> f64 {
    let s = sign.apply(v);
    let sg = if plus { 1.0 } else { -1.0 };
    let p: Vec<c64> = v.iter().zip(&s).map(|(a, b)| (a - b * sg) * 0.5).collect();
    linalg::norm2(&p)
}

#[test]
fn graph_vectors_lie_in_spectral_subspaces() {
    let g = g1(32);
    for (i, kind) in ALL.iter().enumerate() {
        let sign = sign_of(&family(*kind, g, 40 + i as u64));
        let b = boundary::sgn_blocks(&sign);
        let nd = boundary::gamma_nd(&b, -0.5).unwrap();
        let minus = boundary::gamma_minus(&b, -0.5).unwrap();
        for j in 0..20 {
            let f = grid::modes_of(&corpus::random_smooth_scalar(g, 10, j), 0);
            let nf = linalg::norm2(&f);
            assert!(minus_defect(&sign, &boundary::graph_vector(&nd, &f), true) <= 1e-6 * nf);
            assert!(minus_defect(&sign, &boundary::graph_vector(&minus, &f), false) <= 1e-6 * nf);
        }
        if *kind != FamilyKind::BlockDiagonalRandom {
            assert!(boundary::weighted_norm(&g, &linalg::sub(nd.matrix.as_ref(), minus.matrix.as_ref()), -0.5) > 0.1);
        }
    }
}

#[test]
fn constant_coefficients_match_mode_ode() {
    let g = g1(32);
    let t = g.mode_table();
    let cases = [
        [c(1.5, 0.0), c(0.0, 0.0), c(0.4, -0.2), c(0.8, 0.1)],
        [c(1.2, 0.3), c(0.3, 0.1), c(-0.2, 0.0), c(1.7, 0.0)],
        [c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
    ];
    for m in cases {
        let a = CoefficientField::constant(g, &m).unwrap();
        let b = boundary::sgn_blocks(&sign_of(&a));
        let s = if a.block_class.is_lower() { 0.0 } else { -0.5 };
        let nd = boundary::gamma_nd(&b, s).unwrap();
        for k in 0..t.len() {
            let ode = common::mode_ode(m[0], m[1], m[2], m[3], t.xi[k][0]);
            assert!((nd.matrix[(k, k)] - ode.gamma_nd).norm() <= 1e-8 * ode.gamma_nd.norm(), "{m:?} mode {k}");
        }
        let off: f64 = (0..t.len()).flat_map(|i| (0..t.len()).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| nd.matrix[(i, j)].norm()).fold(0.0, f64::max);
        assert!(off <= 1e-10);
    }
    // Diagonal A: |Γ_ND| = 1/√(a d) per mode.
    let a = CoefficientField::constant(g, &cases[2]).unwrap();
    let nd = boundary::gamma_nd(&boundary::sgn_blocks(&sign_of(&a)), 0.0).unwrap();
    assert!((nd.matrix[(0, 0)].norm() - 1.0).abs() <= 1e-8);
}

#[test]
fn key_lemma_identity_and_corpus() {
    let g = g1(32);
    let r = boundary::key_lemma_check(&sign_of(&CoefficientField::identity(g)), -0.5, 1e-6, 10, 1);
    for v in [r.sigma_s12, r.sigma_s21, r.sigma_s11_plus, r.sigma_s11_minus, r.sigma_s22_plus, r.sigma_s22_minus] {
        assert!((v - 1.0).abs() <= 1e-8);
    }
    assert!(r.passed);
    for (i, kind) in ALL.iter().enumerate() {
        let r = boundary::key_lemma_check(&sign_of(&family(*kind, g, i as u64)), -0.5, 1e-6, 10, 2);
        assert!(r.passed && r.min_sigma() > 1e-3, "{kind:?}");
        assert!(r.slot_ratio.0 > 0.05 && r.slot_ratio.1 <= 1.0 + 1e-12);
    }
    // Q₊ in place of P₊: the involution diag(I, -I) has vanishing off-diagonal blocks.
    let m = g.num_modes();
    let q = Mat::from_fn(2 * m, 2 * m, |i, j| if i != j { c(0.0, 0.0) } else if i < m { c(1.0, 0.0) } else { c(-1.0, 0.0) });
    let r = boundary::key_lemma_check(&OperatorMatrix::new(g, q).unwrap(), -0.5, 1e-6, 10, 3);
    assert!(!r.passed && r.sigma_s12 < 1e-12);
}

#[test]
fn singular_block_reported() {
    let g = g1(16);
    let m = g.num_modes();
    let q = Mat::from_fn(2 * m, 2 * m, |i, j| if i != j { c(0.0, 0.0) } else if i < m { c(1.0, 0.0) } else { c(-1.0, 0.0) });
    let b = boundary::sgn_blocks(&OperatorMatrix::new(g, q).unwrap());
    assert!(matches!(boundary::gamma_nd(&b, 0.0), Err(dblab::Error::SingularBlock { .. })));
}

#[test]
fn rellich_constants_for_identity_are_one() {
    let r = boundary::rellich_constant(&CoefficientField::identity(g1(32))).unwrap();
    assert!((r.forward - 1.0).abs() <= 1e-8 && (r.inverse - 1.0).abs() <= 1e-8);
    assert!(r.graph_residual <= 1e-8);
}

#[test]
fn rellich_constants_stable_under_doubling() {
    for (kind, fwd, inv) in [
        (FamilyKind::BlockDiagonalRandom, true, true),
        (FamilyKind::LowerTriangularRandom, true, false),
        (FamilyKind::UpperTriangularRandom, false, true),
    ] {
        let vals: Vec<_> = [32, 64].iter().map(|&n| boundary::rellich_constant(&family(kind, g1(n), 5)).unwrap()).collect();
        if fwd {
            assert!((vals[1].forward / vals[0].forward - 1.0).abs() <= 0.2, "{kind:?}");
        }
        if inv {
            assert!((vals[1].inverse / vals[0].inverse - 1.0).abs() <= 0.2, "{kind:?}");
        }
    }
}

#[test]
fn weighted_norm_conjugates_by_frequency_weights() {
    let g = g1(16);
    let t = g.mode_table();
    let m = t.len();
    let x = Mat::from_fn(m, m, |i, j| c((i + 2 * j) as f64 / 10.0, (i as f64 - j as f64) / 7.0));
    let map = BoundaryMap { grid: g, matrix: x.clone(), s: -0.5, factorization_mismatch: f64::NAN };
    let w = Mat::from_fn(m, m, |i, j| x[(i, j)] * (t.abs[i].powf(-0.5) / t.abs[j].powf(-0.5)));
    assert!((map.norm(-0.5) - linalg::op_norm(w.as_ref())).abs() <= 1e-12 * map.norm(-0.5));
}
