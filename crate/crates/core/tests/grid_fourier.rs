mod common;

use common::c;
use dblab::grid::{self, dump, BoundaryField, GridSpec, Representation};
use dblab::linalg::{self, c64};
use dblab::{corpus, operator};
use proptest::prelude::*;

fn g1(n: usize) -> GridSpec {
    GridSpec::periodic(1, n).unwrap()
}

fn g2(n: usize) -> GridSpec {
    GridSpec::periodic(2, n).unwrap()
}

fn random_field(g: GridSpec, comps: usize, seed: u64) -> BoundaryField {
    let mut values = Vec::new();
    for c in 0..comps {
        let f = corpus::random_smooth_scalar(g, (g.points / 2 - 1) as i64, seed + c as u64).to_physical();
        values.extend(f.values);
    }
    BoundaryField::new(g, comps, values, Representation::Physical).unwrap()
}

#[test]
fn constant_scalar_has_no_riesz_image() {
    let g = g1(16);
    let f = BoundaryField::scalar_from_fn(g, |_| c(3.0, 0.0));
    let r = grid::riesz_apply(&f).unwrap();
    assert!(r.l2_norm() < 1e-12);
}

#[test]
fn riesz_adjoint_inverts_riesz_in_two_dimensions() {
    let g = g2(16);
    let f = random_field(g, 1, 11);
    let back = grid::riesz_adjoint(&grid::riesz_apply(&f).unwrap()).unwrap();
    assert!(back.sub(&f).unwrap().l2_norm() <= 1e-12 * f.l2_norm());
}

#[test]
fn riesz_of_cosine_by_direct_symbol() {
    // Symbol i sgn(ξ) on e^{±ix}: cos x ↦ -sin x, sin x ↦ cos x.
    let g = g1(32);
    let s = BoundaryField::scalar_from_fn(g, |x| c(x[0].sin(), 0.0));
    let r = grid::riesz_apply(&s).unwrap().to_physical();
    for (p, z) in r.values.iter().enumerate() {
        assert!((z - c(g.point(p)[0].cos(), 0.0)).norm() < 1e-12);
    }
}

#[test]
fn pi_projection_cases() {
    let g = g2(16);
    let k = g.total();
    let constant = BoundaryField::from_fn(g, 3, |_, _| c(1.0, 0.0));
    assert!(grid::pi_project(&constant).unwrap().l2_norm() < 1e-12);

    let q = random_field(g, 1, 3);
    let grad = grid::gradient(&q).unwrap().to_physical();
    let mut values = vec![c(0.0, 0.0); k];
    values.extend_from_slice(&grad.values);
    let f = BoundaryField::new(g, 3, values, Representation::Physical).unwrap();
    let pf = grid::pi_project(&f).unwrap();
    assert!(pf.sub(&f).unwrap().l2_norm() <= 1e-12 * f.l2_norm());

    // (∂₂q, -∂₁q) is divergence free, so it is annihilated.
    let mut values = vec![c(0.0, 0.0); k];
    values.extend_from_slice(grad.component(1));
    values.extend(grad.component(0).iter().map(|z| -z));
    let h = BoundaryField::new(g, 3, values, Representation::Physical).unwrap();
    assert!(grid::pi_project(&h).unwrap().l2_norm() <= 1e-12 * h.l2_norm());
}

#[test]
fn pi_is_idempotent_self_adjoint_and_equals_v_vstar() {
    let g = g2(8);
    let comps = 3;
    let dim = comps * g.total();
    // Matrix of Π on frequency coordinates, built column by column.
    let mut pi = linalg::zeros(dim, dim);
    let mut vv = linalg::zeros(dim, dim);
    for j in 0..dim {
        let mut values = vec![c(0.0, 0.0); dim];
        values[j] = c(1.0, 0.0);
        let e = BoundaryField::new(g, comps, values, Representation::Frequency).unwrap();
        let p = grid::pi_project(&e).unwrap().to_frequency();
        let v = grid::from_vcoords(g, &grid::project_vcoords(&e).unwrap());
        for i in 0..dim {
            pi[(i, j)] = p.values[i];
            vv[(i, j)] = v.values[i];
        }
    }
    let sq = &pi * &pi;
    assert!(linalg::op_norm(linalg::sub(sq.as_ref(), pi.as_ref()).as_ref()) < 1e-12);
    let adj = linalg::adjoint(pi.as_ref());
    assert!(linalg::op_norm(linalg::sub(adj.as_ref(), pi.as_ref()).as_ref()) < 1e-12);
    assert!(linalg::op_norm(linalg::sub(vv.as_ref(), pi.as_ref()).as_ref()) < 1e-12);
}

#[test]
fn v_fixes_scalar_slot_and_maps_tangential_slot_to_minus_riesz() {
    let g = g1(16);
    let f = random_field(g, 1, 5);
    let zero = BoundaryField::zeros(g, 1);
    let v = grid::v_apply(&f, &zero).unwrap().to_physical();
    assert!(grid::modes_of(&v, 1).iter().all(|z| z.norm() < 1e-12));
    let diff: Vec<c64> = grid::modes_of(&v, 0);
    assert!(common::max_abs_diff(&diff, &grid::modes_of(&f, 0)) < 1e-12);

    let w = grid::v_apply(&zero, &f).unwrap();
    let minus_r = grid::riesz_apply(&f).unwrap().map_values(|z| -z);
    assert!(common::max_abs_diff(&grid::modes_of(&w, 1), &grid::modes_of(&minus_r, 0)) < 1e-12);
}

#[test]
fn v_conjugates_first_order_operator_to_s() {
    // D F = [div F∥; -∇F⊥] applied physically, read back in V-coordinates.
    let g = g2(8);
    let s = operator::assemble_s(g);
    let m = g.num_modes();
    let k = g.total();
    for i in [0, 5, m / 2, m - 1] {
        for slot in [i, m + i] {
            let e = common::unit(2 * m, slot);
            let f = grid::from_vcoords(g, &e);
            let par = BoundaryField::new(g, 2, f.values[k..].to_vec(), Representation::Frequency).unwrap();
            let perp = BoundaryField::new(g, 1, f.values[..k].to_vec(), Representation::Frequency).unwrap();
            let mut values = grid::divergence(&par).unwrap().to_frequency().values;
            values.extend(grid::gradient(&perp).unwrap().to_frequency().values.iter().map(|z| -z));
            let df = BoundaryField::new(g, 3, values, Representation::Frequency).unwrap();
            let got = grid::to_vcoords(&df).unwrap();
            assert!(common::max_abs_diff(&got, &s.apply(&e)) < 1e-12);
        }
    }
}

#[test]
fn vcoords_reject_fields_outside_h0() {
    let g = g2(8);
    let f = random_field(g, 3, 21);
    assert!(grid::to_vcoords(&f).is_err());
    let p = grid::pi_project(&f).unwrap();
    assert!(grid::to_vcoords(&p).is_ok());
}

#[test]
fn sobolev_norm_examples() {
    let g = g1(32);
    let e1 = BoundaryField::scalar_from_fn(g, |x| c64::new(0.0, x[0]).exp());
    let l2 = e1.l2_norm();
    for s in [-1.0, -0.5, 0.0, 0.3, 1.0] {
        assert!((grid::sobolev_norm(&e1, s).unwrap() - l2).abs() < 1e-12 * l2);
    }
    let e2 = BoundaryField::scalar_from_fn(g, |x| c64::new(0.0, 2.0 * x[0]).exp());
    let v = grid::sobolev_norm(&e2, 0.5).unwrap();
    assert!((v - 2f64.sqrt() * e2.l2_norm()).abs() < 1e-12 * v);
    assert!(grid::sobolev_norm(&e2, 1.5).is_err());
}

#[test]
fn field_dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = g2(8);
    let f = random_field(g, 3, 9);
    let path = dump::write_field(dir.path(), "f", &f, "test").unwrap();
    let back = dump::read_field(&path).unwrap();
    assert_eq!(back.grid, f.grid);
    assert_eq!(back.values, f.values);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(seed in any::<u64>(), two_d in any::<bool>()) {
        let g = if two_d { g2(16) } else { g1(64) };
        let f = random_field(g, 1, seed);
        let fr = f.to_frequency();
        prop_assert!((fr.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
        let back = fr.to_physical();
        prop_assert!(back.sub(&f).unwrap().l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn v_is_an_isometry(seed in any::<u64>(), two_d in any::<bool>()) {
        let g = if two_d { g2(16) } else { g1(64) };
        let v = corpus::random_dense_vcoords(g, seed);
        let f = grid::from_vcoords(g, &v);
        prop_assert!((f.l2_norm() - linalg::norm2(&v)).abs() <= 1e-12 * linalg::norm2(&v));
        let back = grid::to_vcoords(&f).unwrap();
        prop_assert!(common::max_abs_diff(&back, &v) <= 1e-12);
    }

    #[test]
    fn sobolev_norm_is_a_norm(seed in any::<u64>(), s in -1.0f64..=1.0, alpha in -3.0f64..3.0) {
        let g = g1(32);
        let a = random_field(g, 1, seed);
        let b = random_field(g, 1, seed ^ 0x55);
        let na = grid::sobolev_norm(&a, s).unwrap();
        let scaled = a.map_values(|z| z * alpha);
        prop_assert!((grid::sobolev_norm(&scaled, s).unwrap() - alpha.abs() * na).abs() <= 1e-12 * na.max(1.0));
        let sum = a.sub(&b.map_values(|z| -z)).unwrap();
        prop_assert!(grid::sobolev_norm(&sum, s).unwrap() <= na + grid::sobolev_norm(&b, s).unwrap() + 1e-12);
    }
}
