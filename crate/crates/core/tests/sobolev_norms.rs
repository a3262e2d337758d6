mod common;

use common::c;
use dblab::coeff::{self, FamilyKind, FamilyParams};
use dblab::linalg::{self, c64};
use dblab::operator::{self, OperatorMatrix};
use dblab::sobolev::{self, PsiSpec, QuadratureConfig};
use dblab::{corpus, GridSpec};
use statrs::function::gamma::gamma;

fn g1(n: usize) -> GridSpec {
    GridSpec::periodic(1, n).unwrap()
}

/// `‖|S|^s F‖₂` through the matrix fractional power.
fn s_power_norm(g: GridSpec, f: &[c64], s: f64) -> f64 {
    let p = operator::fractional_power(&operator::assemble_s(g), s).unwrap();
    linalg::norm2(&p.apply(f))
}

fn ut_of(kind: FamilyKind, g: GridSpec, seed: u64) -> (OperatorMatrix, OperatorMatrix) {
    let a = coeff::make_family(kind, &FamilyParams::default(), g, seed).unwrap();
    let calb = operator::assemble_calb(&coeff::hat_transform(&a).unwrap()).unwrap();
    (operator::compose_ut(&calb), operator::compose_t(&calb))
}

#[test]
fn c_psi_matches_direct_integration() {
    for k in [1u32, 2] {
        for s in [-0.5, 0.0, 0.5] {
            let p = 2.0 * k as f64 - 2.0 * s;
            let direct = common::simpson(|u| u.powf(p - 1.0) * (-2.0 * u).exp(), 0.0, 40.0, 40_000).sqrt();
            let closed = sobolev::c_psi(PsiSpec::new(k), s).unwrap();
            assert!((direct - closed).abs() < 1e-8, "k={k} s={s}");
            assert!((closed - (gamma(p) / 2f64.powf(p)).sqrt()).abs() < 1e-14);
        }
    }
    assert!(sobolev::c_psi(PsiSpec::new(1), 1.0).is_err());
}

#[test]
fn quadratic_norm_identity_by_quadrature() {
    let g = g1(32);
    let s_op = operator::assemble_s(g);
    let f = corpus::random_vcoords(g, 6, 3);
    for k in [1u32, 2] {
        for s in [-0.5, 0.0, 0.5] {
            let psi = PsiSpec::new(k);
            let want = sobolev::c_psi(psi, s).unwrap() * s_power_norm(g, &f, s);
            let quad = sobolev::quad_norm_adapted(&s_op, &f, s, psi, &QuadratureConfig::fine()).unwrap();
            assert!((quad.value - want).abs() <= 1e-8 * want, "k={k} s={s}: {} vs {want}", quad.value);
            let closed = sobolev::quad_norm_s(&g, &f, s, psi).unwrap();
            assert!((closed - want).abs() <= 1e-12 * want);
        }
    }
}

#[test]
fn quad_norm_s_examples() {
    let g = g1(16);
    let m = g.num_modes();
    let f = corpus::random_dense_vcoords(g, 1);
    let v = sobolev::quad_norm_s(&g, &f, 0.0, PsiSpec::new(1)).unwrap();
    assert!((v - 0.5 * linalg::norm2(&f)).abs() < 1e-14);
    assert_eq!(sobolev::quad_norm_s(&g, &vec![c(0.0, 0.0); 2 * m], 0.5, PsiSpec::new(1)).unwrap(), 0.0);
    let e = common::unit(2 * m, common::mode_index(&g, [2, 0]));
    let v = sobolev::quad_norm_s(&g, &e, 0.5, PsiSpec::new(1)).unwrap();
    assert!((v - 2f64.sqrt() * sobolev::c_psi(PsiSpec::new(1), 0.5).unwrap()).abs() < 1e-14);
}

#[test]
fn adapted_norm_of_s_matches_closed_form_and_is_stable() {
    let g = g1(32);
    let s_op = operator::assemble_s(g);
    let f = corpus::random_vcoords(g, 6, 4);
    for s in [-0.5, 0.0, 0.5, 1.0] {
        let psi = PsiSpec::default_for(s);
        let cfg = QuadratureConfig::default();
        let a = sobolev::quad_norm_adapted(&s_op, &f, s, psi, &cfg).unwrap().value;
        let b = sobolev::quad_norm_adapted(&s_op, &f, s, psi, &cfg.doubled()).unwrap().value;
        let closed = sobolev::quad_norm_s(&g, &f, s, psi).unwrap();
        assert!((a - closed).abs() <= 1e-4 * closed, "s={s}");
        assert!((a - b).abs() <= 1e-4 * b);
    }
    let zero = vec![c(0.0, 0.0); f.len()];
    assert_eq!(sobolev::quad_norm_adapted(&s_op, &zero, 0.5, PsiSpec::new(1), &QuadratureConfig::default()).unwrap().value, 0.0);
}

#[test]
fn semigroup_norm_single_mode_closed_form() {
    // ∫₀^∞ t e^{-2t} dt/t = 1/2.
    let g = g1(16);
    let s_op = operator::assemble_s(g);
    let m = g.num_modes();
    let k = common::mode_index(&g, [1, 0]);
    let mut f = vec![c(0.0, 0.0); 2 * m];
    f[k] = c(0.6, 0.2);
    f[m + k] = c(-0.3, 0.5);
    let want = linalg::norm2(&f) / 2f64.sqrt();
    let got = sobolev::semigroup_norm(&s_op, &f, -0.5, &QuadratureConfig::default()).unwrap();
    assert!((got.value - want).abs() <= 1e-6 * want);
    let zero = vec![c(0.0, 0.0); 2 * m];
    assert_eq!(sobolev::semigroup_norm(&s_op, &zero, -0.5, &QuadratureConfig::default()).unwrap().value, 0.0);
    assert!(sobolev::semigroup_norm(&s_op, &f, 0.0, &QuadratureConfig::default()).is_err());
}

#[test]
fn adapted_norms_are_homogeneous_and_psi_changes_are_bounded() {
    let g = g1(32);
    let (ut, t) = ut_of(FamilyKind::PiecewiseRandom, g, 6);
    let f = corpus::random_vcoords(g, 6, 8);
    let cfg = QuadratureConfig::default();
    let base = sobolev::quad_norm_adapted(&t, &f, 0.5, PsiSpec::new(1), &cfg).unwrap().value;
    let scaled: Vec<c64> = f.iter().map(|z| z * c(0.0, -2.5)).collect();
    let sc = sobolev::quad_norm_adapted(&t, &scaled, 0.5, PsiSpec::new(1), &cfg).unwrap().value;
    assert!((sc - 2.5 * base).abs() <= 1e-10 * sc);
    let k2 = sobolev::quad_norm_adapted(&t, &f, 0.5, PsiSpec::new(2), &cfg).unwrap().value;
    let ratio = k2 / base;
    assert!(ratio > 0.1 && ratio < 10.0);
    let semi = sobolev::semigroup_norm(&ut, &f, -0.5, &cfg).unwrap().value;
    let semi2 = sobolev::semigroup_norm(&ut, &scaled, -0.5, &cfg).unwrap().value;
    assert!((semi2 - 2.5 * semi).abs() <= 1e-10 * semi2);
}

#[test]
fn t_to_s_ratios_bounded_across_corpus() {
    let g = g1(32);
    let cfg = QuadratureConfig::default();
    for seed in 0..4 {
        let (ut, t) = ut_of(FamilyKind::SmoothTrig, g, seed);
        let f = corpus::random_vcoords(g, 6, 100 + seed);
        for s in [0.0, 0.5, 1.0] {
            let psi = PsiSpec::default_for(s);
            let r = sobolev::quad_norm_adapted(&t, &f, s, psi, &cfg).unwrap().value / sobolev::quad_norm_s(&g, &f, s, psi).unwrap();
            assert!(r > 0.2 && r < 5.0, "T s={s} ratio {r}");
        }
        for s in [-1.0, -0.5, 0.0] {
            let psi = PsiSpec::default_for(s);
            let r = sobolev::quad_norm_adapted(&ut, &f, s, psi, &cfg).unwrap().value / sobolev::quad_norm_s(&g, &f, s, psi).unwrap();
            assert!(r > 0.2 && r < 5.0, "uT s={s} ratio {r}");
        }
        // ‖TF‖ ≈ ‖SF‖.
        let s_op = operator::assemble_s(g);
        let r = linalg::norm2(&t.apply(&f)) / linalg::norm2(&s_op.apply(&f));
        assert!(r > 0.2 && r < 5.0);
    }
}
